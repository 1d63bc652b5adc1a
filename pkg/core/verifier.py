"""
Verifier Module
Checks that candidate functions solve F(D^2 u) = 0 and that the proof identities hold,
on deterministic annulus samples
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from app.config import SAMPLING, TOLERANCES
from core.errors import DimensionMismatch, HomsolError
from core.homogeneous import GridProfile, HomogeneousFunction, PolynomialProfile, laplace_split
from core.operators import EllipticOperator, check_f_at_zero
from core.parallel import chunked, pmap
from core.poly_core import SymMatrix, poly_laplacian

logger = logging.getLogger(__name__)

CHUNK = 256


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Points in the annulus 0.5 <= |x| <= 2"""

    points: np.ndarray
    seed: int
    count: int

    @classmethod
    def annulus(cls, n: int, count: int = SAMPLING["count"], seed: int = SAMPLING["seed"],
                radii: Sequence[float] = SAMPLING["annulus"]) -> "SampleSet":
        """Gaussian directions, log-uniform radii"""
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((count, n))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        low, high = radii
        r = np.exp(rng.uniform(np.log(low), np.log(high), size=count))
        points = directions * r[:, None]
        points.setflags(write=False)
        return cls(points, seed, count)

    @classmethod
    def sphere(cls, n: int, count: int = SAMPLING["count"], seed: int = SAMPLING["seed"]) -> "SampleSet":
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((count, n))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        directions.setflags(write=False)
        return cls(directions, seed, count)

    @property
    def n(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class ResidualReport:
    sup_residual: float
    mean_residual: float
    worst_point: Optional[tuple]
    per_check: Dict[str, Dict] = field(default_factory=dict)
    sup_absolute: Optional[float] = None

    def passed(self, tol: float) -> bool:
        return self.sup_residual <= tol

    def to_dict(self, tol: Optional[float] = None) -> Dict:
        data = {
            "sup_residual": self.sup_residual,
            "mean_residual": self.mean_residual,
            "worst_point": list(self.worst_point) if self.worst_point is not None else None,
            "per_check": self.per_check,
        }
        if self.sup_absolute is not None:
            data["sup_absolute"] = self.sup_absolute
        if tol is not None:
            data["tolerance"] = tol
            data["passed"] = self.passed(tol)
        return data


def _summarize(residuals: np.ndarray, points: np.ndarray, per_check: Optional[Dict] = None,
               sup_absolute: Optional[float] = None) -> ResidualReport:
    if residuals.size == 0:
        return ResidualReport(0.0, 0.0, None, per_check or {}, sup_absolute)
    worst = int(np.argmax(residuals))
    return ResidualReport(
        sup_residual=float(residuals[worst]),
        mean_residual=float(np.mean(residuals)),
        worst_point=tuple(float(v) for v in points[worst]),
        per_check=per_check or {},
        sup_absolute=sup_absolute,
    )


def _hessians(u: HomogeneousFunction, points: np.ndarray) -> np.ndarray:
    parts = pmap(lambda part: u.hessian_batch(points[part]), chunked(len(points), CHUNK))
    return np.concatenate(parts, axis=0)


def _check_dimensions(u: HomogeneousFunction, s: SampleSet) -> None:
    if s.n != u.n:
        raise DimensionMismatch(f"samples in n={s.n}, function in n={u.n}")


def residual_sup(u: HomogeneousFunction, op: EllipticOperator, s: SampleSet) -> ResidualReport:
    """sup and mean of |F(D^2 u(x))| over the samples"""
    _check_dimensions(u, s)
    if op.n != u.n:
        raise DimensionMismatch(f"operator in n={op.n}, function in n={u.n}")
    values = np.abs(op.evaluate_batch(_hessians(u, s.points)))
    return _summarize(values, s.points)


def verify_homogeneity(u: HomogeneousFunction, d: float, s: SampleSet,
                       scales: Iterable[float] = SAMPLING["scales"]) -> ResidualReport:
    """max over x, t of |u(tx) - t^d u(x)| / (1 + |u(x)|)"""
    _check_dimensions(u, s)
    base = u.value_batch(s.points)
    worst = np.zeros(len(s.points))
    per_check = {}
    for t in scales:
        gap = np.abs(u.value_batch(t * s.points) - t ** d * base) / (1.0 + np.abs(base))
        per_check[f"t={t}"] = {"sup": float(np.max(gap))}
        worst = np.maximum(worst, gap)
    return _summarize(worst, s.points, per_check)


def verify_linearized(u: HomogeneousFunction, a: SymMatrix, s: SampleSet) -> ResidualReport:
    """|tr(A D^2 u)| normalized by (1 + |D^2 u|_F); the raw sup is kept as sup_absolute"""
    _check_dimensions(u, s)
    hess = _hessians(u, s.points)
    raw = np.abs(np.einsum("ij,nij->n", a.array, hess))
    scale = 1.0 + np.linalg.norm(hess, axis=(1, 2))
    return _summarize(raw / scale, s.points, sup_absolute=float(np.max(raw)) if raw.size else 0.0)


def verify_eigen_relation(u: HomogeneousFunction, thetas) -> ResidualReport:
    """sup over unit vectors of |Delta_S g + d(d+n-2) g|"""
    points = np.asarray(thetas.points if isinstance(thetas, SampleSet) else thetas, dtype=float)
    if points.ndim != 2 or points.shape[1] != u.n:
        raise DimensionMismatch(f"unit samples of shape {points.shape} for n={u.n}")
    residuals = []
    traces = []
    for theta in points:
        split = laplace_split(u, theta)
        residuals.append(abs(split.spherical_term + split.radial_term))
        traces.append(abs(split.cartesian_trace))
    residuals = np.array(residuals)

    if isinstance(u.profile, PolynomialProfile) and u.transform is None:
        magnitude = poly_laplacian(u.profile.poly).max_abs_coefficient()
        harmonic = {"passed": magnitude <= TOLERANCES["polynomial_identity"], "magnitude": magnitude, "method": "symbolic"}
    else:
        magnitude = float(np.max(traces)) if traces else 0.0
        harmonic = {"passed": magnitude <= TOLERANCES["linearized_check"], "magnitude": magnitude, "method": "sampled"}
    if not harmonic["passed"]:
        logger.info("eigen relation checked on a non-harmonic profile (|Delta u| up to %.3g)", magnitude)
    per_check = {"harmonic": harmonic, "lambda": {"value": u.eigenvalue}}
    if isinstance(u.profile, GridProfile):
        per_check["grid"] = {"resolution": u.profile.grid.label()}
    return _summarize(residuals, points, per_check)


def verify_scaling_identity(u: HomogeneousFunction, s: SampleSet,
                            scales: Iterable[float] = SAMPLING["scales"]) -> ResidualReport:
    """|D^2 u(tx) - t^(d-2) D^2 u(x)|_F / (1 + |D^2 u(x)|_F)"""
    _check_dimensions(u, s)
    base = _hessians(u, s.points)
    base_norm = np.linalg.norm(base, axis=(1, 2))
    worst = np.zeros(len(s.points))
    per_check = {}
    for t in scales:
        scaled = _hessians(u, t * s.points)
        gap = np.linalg.norm(scaled - t ** (u.degree - 2) * base, axis=(1, 2)) / (1.0 + base_norm)
        per_check[f"t={t}"] = {"sup": float(np.max(gap))}
        worst = np.maximum(worst, gap)
    return _summarize(worst, s.points, per_check)


def verify_cone_vertex(u: HomogeneousFunction, op: EllipticOperator, s: SampleSet, steps: int = 6) -> ResidualReport:
    """Drive D^2 u(tx) = t^(d-2) D^2 u(x) to the zero matrix and track |F(D^2 u(tx)) - F(0)|"""
    _check_dimensions(u, s)
    if abs(u.degree - 2.0) <= TOLERANCES["integer"]:
        raise HomsolError("the Hessian of a degree-2 function does not scale to zero")
    f_zero = check_f_at_zero(op)
    # t -> 0 shrinks the Hessian when d > 2, t -> infinity when d < 2
    base = 0.1 if u.degree > 2 else 10.0
    scales = [base ** k for k in range(1, steps + 1)]
    gaps = []
    norms = []
    for t in scales:
        hess = _hessians(u, t * s.points)
        gaps.append(float(np.max(np.abs(op.evaluate_batch(hess) - f_zero))))
        norms.append(float(np.max(np.linalg.norm(hess, axis=(1, 2)))))
    residuals = np.abs(op.evaluate_batch(_hessians(u, scales[-1] * s.points)) - f_zero)
    converging = gaps[-1] <= gaps[0] or gaps[-1] <= TOLERANCES["f_at_zero"]
    per_check = {
        "cone_vertex": {
            "passed": bool(converging),
            "f_at_zero": f_zero,
            "scales": scales,
            "gaps": gaps,
            "hessian_norms": norms,
        }
    }
    return _summarize(residuals, s.points, per_check)

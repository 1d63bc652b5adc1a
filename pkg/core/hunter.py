"""
Residual Hunter Module
Minimizes the RMS of F(D^2(r^d g)) over unit-norm profile coefficients and measures
how far the minimizers sit from the harmonic family
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import least_squares, minimize

from app.config import HUNT, SAMPLING, TOLERANCES
from app.parsing import parse_operator_spec
from core.errors import ConfigInvalid, DimensionMismatch
from core.harmonic_basis import harmonic_dimension
from core.homogeneous import CoefProfile, HomogeneousFunction, ProfileBasis, build_profile_basis, expand_profile, radial_power_hessian
from core.classifier import linearize_at_zero
from core.operators import EllipticOperator
from core.parallel import pmap
from core.poly_core import SymMatrix, spd_sqrt
from core.verifier import SampleSet, residual_sup

logger = logging.getLogger(__name__)

# least_squares(method="lm") rejects tolerances at or below machine epsilon
_LM_FLOOR = 10 * np.finfo(float).eps


@dataclass(frozen=True)
class HuntConfig:
    op: str
    n: int
    d: float
    lmax: int = HUNT["lmax"]
    seeds: int = HUNT["seeds"]
    rng_seed: int = HUNT["rng_seed"]
    max_iters: int = HUNT["max_iters"]
    restarts: int = HUNT["restarts"]
    samples: int = HUNT["samples"]
    tol_residual: float = HUNT["tol_residual"]
    tol_step: float = HUNT["tol_step"]

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ConfigInvalid(f"hunting needs n = 2 or 3, got {self.n}")
        if self.lmax < math.ceil(abs(self.d)):
            raise ConfigInvalid(f"lmax = {self.lmax} cannot represent degree {self.d} (need >= {math.ceil(abs(self.d))})")
        if self.seeds < 1 or self.max_iters < 1 or self.samples < 1 or self.restarts < 0:
            raise ConfigInvalid("seeds, max_iters and samples must be positive, restarts nonnegative")

    @property
    def exploratory(self) -> bool:
        return abs(self.d - 2.0) <= TOLERANCES["integer"]

    def operator(self) -> EllipticOperator:
        op = parse_operator_spec(self.op, self.n)
        if op.n != self.n:
            raise ConfigInvalid(f"operator acts in n={op.n}, hunt configured for n={self.n}")
        return op


@dataclass(frozen=True, eq=False)
class HuntResult:
    seed: int
    best_coefficients: np.ndarray
    best_residual: float
    residual_trace: Tuple[float, ...]
    distance_to_harmonic: float
    sup_residual: float
    exploratory: bool = False
    degrees: Tuple[int, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict:
        return {
            "seed": self.seed,
            "best_coefficients": self.best_coefficients.tolist(),
            "best_residual": self.best_residual,
            "residual_trace_length": len(self.residual_trace),
            "residual_trace_final": self.residual_trace[-1] if self.residual_trace else None,
            "distance_to_harmonic": self.distance_to_harmonic,
            "sup_residual": self.sup_residual,
            "exploratory": self.exploratory,
        }


def _basis_degrees(n: int, size: int) -> np.ndarray:
    degrees = []
    ell = 0
    while len(degrees) < size:
        degrees += [ell] * harmonic_dimension(n, ell)
        ell += 1
    if len(degrees) != size:
        raise DimensionMismatch(f"{size} coefficients do not fill whole l-blocks in n={n}")
    return np.array(degrees)


def _matching_degree(n: int, d: float) -> Optional[int]:
    nearest = round(d)
    if abs(d - nearest) > TOLERANCES["integer"]:
        return None
    if nearest >= 0:
        return int(nearest)
    if nearest <= -(n - 2):
        return int(2 - n - nearest)
    return None


def _coordinate_distance(coefs: np.ndarray, n: int, d: float) -> float:
    norm = float(np.linalg.norm(coefs))
    if norm == 0.0:
        return 1.0
    unit = coefs / norm
    ell = _matching_degree(n, d)
    outside = _basis_degrees(n, unit.size) != ell
    return float(np.linalg.norm(unit[outside]))


def harmonic_distance(coefs, n: int, d: float, a: Optional[SymMatrix] = None) -> float:
    """Norm of the unit coefficient vector outside the matching l-block (after pulling back by A^{1/2})"""
    coefs = np.asarray(coefs, dtype=float).reshape(-1)
    if a is None or np.array_equal(a.array, np.eye(n)):
        return _coordinate_distance(coefs, n, d)
    degrees = _basis_degrees(n, coefs.size)
    basis = build_profile_basis(n, int(degrees[-1]))
    pulled = HomogeneousFunction(n, d, CoefProfile(basis, coefs), transform=spd_sqrt(a))
    return _coordinate_distance(expand_profile(pulled, basis), n, d)


def _hessian_stack(basis: ProfileBasis, d: float, points: np.ndarray) -> np.ndarray:
    """(K, N, n, n) Hessians of |x|^(d-l_k) P_k at the sample points"""
    return np.stack([
        radial_power_hessian(d - ell, p, points)[2] for p, ell in zip(basis.elements, basis.degrees)
    ])


class _Objective:
    """Residual of F over the sample set, evaluated at c/|c|; remembers the best point seen

    The residuals depend only on the direction of c, so the optimizers may
    wander off the unit sphere without changing the problem. The best point is
    stored normalized.
    """

    def __init__(self, op: EllipticOperator, stack: np.ndarray):
        self.op = op
        self.stack = stack
        self.best_value = math.inf
        self.best_point: Optional[np.ndarray] = None

    def residuals(self, c: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(c)
        if norm == 0.0:
            return np.full(self.stack.shape[1], np.inf)
        unit = c / norm
        values = self.op.evaluate_batch(np.tensordot(unit, self.stack, axes=1))
        rms = float(np.sqrt(np.mean(values * values)))
        if rms < self.best_value:
            self.best_value = rms
            self.best_point = unit.copy()
        return values

    def mean_square(self, c: np.ndarray) -> float:
        values = self.residuals(c)
        return float(np.mean(values * values))


def _unit_simplex(x: np.ndarray, step: float) -> np.ndarray:
    """Nelder-Mead start: x and x + step e_k, every vertex pulled back to the unit sphere"""
    vertices = np.vstack([x, x + step * np.eye(x.size)])
    return vertices / np.linalg.norm(vertices, axis=1, keepdims=True)


def _hunt_seed(cfg: HuntConfig, op: EllipticOperator, basis: ProfileBasis, stack: np.ndarray,
               check: SampleSet, index: int) -> HuntResult:
    rng = np.random.default_rng([cfg.rng_seed, index])
    start = rng.standard_normal(basis.size)
    start /= np.linalg.norm(start)
    objective = _Objective(op, stack)
    trace: List[float] = []

    def record(*_):
        trace.append(objective.best_value)

    # the objective only sees c/|c|; every restart begins from a simplex on the unit sphere
    x = start
    for restart in range(cfg.restarts + 1):
        result = minimize(
            objective.mean_square,
            x,
            method="Nelder-Mead",
            callback=record,
            options={
                "initial_simplex": _unit_simplex(x, HUNT["simplex_step"]),
                "maxiter": cfg.max_iters,
                "xatol": cfg.tol_step,
                "fatol": cfg.tol_residual ** 2,
                "adaptive": True,
            },
        )
        x = objective.best_point
        logger.debug("seed %d restart %d: nelder-mead %d iterations, best rms %.3e",
                     index, restart, result.nit, objective.best_value)
        if objective.best_value <= cfg.tol_residual:
            break

    if objective.best_value > cfg.tol_residual and stack.shape[1] >= basis.size:
        polish = least_squares(objective.residuals, x, method="lm", max_nfev=cfg.max_iters,
                               xtol=max(cfg.tol_step, _LM_FLOOR),
                               ftol=max(cfg.tol_residual ** 2, _LM_FLOOR))
        logger.debug("seed %d polish: %d evaluations, best rms %.3e", index, polish.nfev, objective.best_value)
    record()

    best = objective.best_point
    u = HomogeneousFunction(cfg.n, cfg.d, CoefProfile(basis, best))
    a = linearize_at_zero(op)
    return HuntResult(
        seed=index,
        best_coefficients=best,
        best_residual=objective.best_value,
        residual_trace=tuple(trace),
        distance_to_harmonic=harmonic_distance(best, cfg.n, cfg.d, a),
        sup_residual=residual_sup(u, op, check).sup_residual,
        exploratory=cfg.exploratory,
        degrees=tuple(basis.degrees),
    )


def hunt(cfg: HuntConfig) -> List[HuntResult]:
    """One residual minimization per seed, ordered by seed index"""
    if cfg.exploratory:
        logger.warning("hunting at d = 2: no classification applies, results are exploratory")
    op = cfg.operator()
    basis = build_profile_basis(cfg.n, cfg.lmax)
    samples = SampleSet.annulus(cfg.n, cfg.samples, cfg.rng_seed)
    stack = _hessian_stack(basis, cfg.d, samples.points)
    check = SampleSet.annulus(cfg.n, SAMPLING["count"], SAMPLING["seed"])
    logger.info("hunting %s n=%d d=%s over %d profile coefficients, %d seeds", cfg.op, cfg.n, cfg.d, basis.size, cfg.seeds)
    return pmap(lambda i: _hunt_seed(cfg, op, basis, stack, check, i), range(cfg.seeds))

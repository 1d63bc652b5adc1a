"""
Classifier Module
Predicts the full space of homogeneous degree-d solutions of F(D^2 u) = 0 (d != 2):
zero, harmonic polynomials in the coordinates x -> A^{-1/2} x, or singular harmonics
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from app.config import FD_STEPS, SAMPLING, TOLERANCES
from core.errors import DegreeTwoUnsupported, DimensionMismatch, NonC1AtZero, NotElliptic
from core.harmonic_basis import harmonic_basis, harmonic_dimension
from core.homogeneous import HomogeneousFunction, PolynomialProfile, kelvin_element
from core.operators import EllipticOperator, SpecialLagrangian, check_f_at_zero, op_grad_fd
from core.poly_core import Multinomial, SymMatrix, eig_sym, poly_compose_linear, poly_operator_trace, spd_inv_sqrt
from core.verifier import SampleSet, verify_linearized

logger = logging.getLogger(__name__)

OUTSIDE_THEOREM = "outside-theorem-statement"


@dataclass(frozen=True)
class NoSolutions:
    reason: str
    kind: str = "NoSolutions"

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "reason": self.reason}


@dataclass(frozen=True)
class ZeroOnly:
    reason: str
    kind: str = "ZeroOnly"

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "reason": self.reason}


@dataclass(frozen=True, eq=False)
class HarmonicPolynomialFamily:
    degree: int
    basis: Tuple[Multinomial, ...]
    kind: str = "HarmonicPolynomialFamily"

    def elements(self) -> List[HomogeneousFunction]:
        return [HomogeneousFunction(p.nvars, float(self.degree), PolynomialProfile(p)) for p in self.basis]

    def to_dict(self) -> Dict:
        n = self.basis[0].nvars if self.basis else 0
        return {
            "kind": self.kind,
            "degree": self.degree,
            "size": len(self.basis),
            "expected_size": harmonic_dimension(n, self.degree) if n else 0,
            "basis": [str(p) for p in self.basis],
        }


@dataclass(frozen=True, eq=False)
class SingularHarmonicFamily:
    """|y|^(2-n-2l) h(y), y = A^{-1/2} x, h harmonic of degree l"""

    ell: int
    degree: int
    generators: Tuple[Multinomial, ...]
    transform: Optional[SymMatrix]
    description: str
    flags: Tuple[str, ...] = (OUTSIDE_THEOREM,)
    kind: str = "SingularHarmonicFamily"

    def elements(self) -> List[HomogeneousFunction]:
        return [kelvin_element(h, h.nvars, self.transform) for h in self.generators]

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "ell": self.ell,
            "degree": self.degree,
            "size": len(self.generators),
            "description": self.description,
            "generators": [str(h) for h in self.generators],
            "transform": self.transform.to_list() if self.transform is not None else None,
            "flags": list(self.flags),
        }


Family = Union[NoSolutions, ZeroOnly, HarmonicPolynomialFamily, SingularHarmonicFamily]


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    operator: EllipticOperator
    n: int
    d: float
    linearization: Optional[SymMatrix]
    mu_estimate: Optional[float]
    f_at_zero: float
    family: Family
    diagnostics: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "d": self.d,
            "linearization": self.linearization.to_list() if self.linearization is not None else None,
            "mu_estimate": self.mu_estimate,
            "f_at_zero": self.f_at_zero,
            "family": self.family.to_dict(),
            "diagnostics": self.diagnostics,
        }


def _is_identity(a: SymMatrix) -> bool:
    return np.array_equal(a.array, np.eye(a.n))


def linearize_at_zero(op: EllipticOperator, method: str = "analytic") -> SymMatrix:
    """DF(0): analytic gradient, or two-step central differences with an agreement check"""
    zero = SymMatrix.zeros(op.n)
    if method == "analytic":
        return op.gradient(zero)
    if method != "fd":
        raise ValueError(f"unknown linearization method {method!r}")
    coarse_step, fine_step = FD_STEPS["linearization"]
    coarse = op_grad_fd(op, zero, coarse_step)
    fine = op_grad_fd(op, zero, fine_step)
    gap = (coarse - fine).frobenius()
    if gap > TOLERANCES["richardson"]:
        raise NonC1AtZero(f"difference quotients at 0 disagree by {gap:.3g} between steps {coarse_step} and {fine_step}")
    return SymMatrix(0.5 * (fine.array + fine.array.T))


def candidate_basis(a: SymMatrix, n: int, d: int) -> List[Multinomial]:
    """{h(A^{-1/2} x) : h in harmonic_basis(n, d)}"""
    if a.n != n:
        raise DimensionMismatch(f"A is {a.n}x{a.n}, expected n={n}")
    basis = harmonic_basis(n, d).elements
    if _is_identity(a):
        return list(basis)
    s = spd_inv_sqrt(a)
    return [poly_compose_linear(h, s) for h in basis]


def _identity_residual(p: Multinomial, a: SymMatrix) -> float:
    matrix = np.eye(a.n, dtype=int) if _is_identity(a) else a
    return poly_operator_trace(p, matrix).max_abs_coefficient()


def _polynomial_diagnostics(family: HarmonicPolynomialFamily, a: SymMatrix, n: int, seed: int) -> Dict:
    samples = SampleSet.annulus(n, SAMPLING["classifier_points"], seed)
    elements = []
    for p, u in zip(family.basis, family.elements()):
        identity = _identity_residual(p, a)
        sampled = verify_linearized(u, a, samples)
        elements.append({
            "element": str(p),
            "identity_residual": identity,
            "sampled_residual": sampled.sup_residual,
            "passed": identity <= TOLERANCES["polynomial_identity"] and sampled.sup_residual <= TOLERANCES["linearized_check"],
        })
    return {
        "elements": elements,
        "all_passed": all(e["passed"] for e in elements),
        "size_matches_dimension": len(family.basis) == harmonic_dimension(n, family.degree),
    }


def _singular_diagnostics(family: SingularHarmonicFamily, a: SymMatrix, n: int, seed: int) -> Dict:
    samples = SampleSet.annulus(n, SAMPLING["singular_points"], seed)
    elements = []
    for h, u in zip(family.generators, family.elements()):
        sampled = verify_linearized(u, a, samples)
        elements.append({
            "generator": str(h),
            "sampled_residual": sampled.sup_residual,
            "passed": sampled.sup_residual <= 1e-8,
        })
    return {"elements": elements, "all_passed": all(e["passed"] for e in elements)}


def _phase_diagnostic(op: EllipticOperator, f_at_zero: float, tol: float) -> Optional[Dict]:
    if not isinstance(op, SpecialLagrangian):
        return None
    return {
        "phase": op.c,
        "forced_phase": 0.0,
        "consistent": abs(f_at_zero) <= tol,
        "note": "a nonzero homogeneous solution with d != 2 forces c = 0",
    }


def classify(op: EllipticOperator, n: int, d: float,
             tol: float = TOLERANCES["f_at_zero"],
             ellipticity_floor: float = TOLERANCES["ellipticity_floor"],
             integer_tol: float = TOLERANCES["integer"],
             linearization: str = "analytic",
             seed: int = SAMPLING["seed"]) -> ClassificationReport:
    """Theorem pipeline: F(0) check, linearization, degree gate, family construction"""
    if op.n != n:
        raise DimensionMismatch(f"operator acts in n={op.n}, requested n={n}")
    if abs(d - 2.0) <= integer_tol:
        raise DegreeTwoUnsupported(d)

    f_at_zero = check_f_at_zero(op)
    diagnostics: Dict = {"f_at_zero": f_at_zero, "linearization_method": linearization}
    phase = _phase_diagnostic(op, f_at_zero, tol)
    if phase is not None:
        diagnostics["phase"] = phase

    def report(family: Family, a: Optional[SymMatrix] = None, mu_estimate: Optional[float] = None) -> ClassificationReport:
        logger.info("classified %r n=%d d=%s as %s", op, n, d, family.kind)
        return ClassificationReport(op, n, d, a, mu_estimate, f_at_zero, family, diagnostics)

    # F(0) != 0 settles the answer without differentiating F
    if abs(f_at_zero) > tol:
        return report(NoSolutions(
            f"F(0) = {f_at_zero:.6g} != 0: a nonzero homogeneous solution with d != 2 forces F(0) = 0"
        ))

    a = linearize_at_zero(op, linearization)
    values = eig_sym(a).values
    mu_estimate = float(min(values[0], 1.0 / values[-1])) if values[-1] > 0 else float(values[0])
    diagnostics["linearization_eigenvalues"] = [float(v) for v in values]
    diagnostics["mu_estimate"] = mu_estimate
    if values[0] <= ellipticity_floor:
        raise NotElliptic(f"DF(0) has smallest eigenvalue {values[0]:.6g} <= {ellipticity_floor}")

    nearest = round(d)
    if abs(d - nearest) > integer_tol:
        return report(ZeroOnly(f"d = {d} is not an integer"), a, mu_estimate)
    if -(n - 2) < d < 0:
        return report(ZeroOnly(f"-(n-2) < d < 0 for n = {n}, d = {d}"), a, mu_estimate)

    degree = int(nearest)
    if degree >= 0:
        family = HarmonicPolynomialFamily(degree, tuple(candidate_basis(a, n, degree)))
        diagnostics["family_checks"] = _polynomial_diagnostics(family, a, n, seed)
        return report(family, a, mu_estimate)

    ell = 2 - n - degree
    transform = None if _is_identity(a) else spd_inv_sqrt(a)
    family = SingularHarmonicFamily(
        ell=ell,
        degree=degree,
        generators=harmonic_basis(n, ell).elements,
        transform=transform,
        description=f"|y|^({2 - n - 2 * ell}) h(y), y = A^(-1/2) x, h harmonic of degree {ell}",
    )
    diagnostics["family_checks"] = _singular_diagnostics(family, a, n, seed)
    logger.warning("d = %s <= -(n-2): singular harmonic family reported (%s)", d, OUTSIDE_THEOREM)
    return report(family, a, mu_estimate)

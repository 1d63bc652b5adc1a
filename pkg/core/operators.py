"""
Elliptic Operators Module
F(M) for linear, special Lagrangian and perturbed-linear operators,
with analytic and finite-difference gradients and ellipticity diagnostics
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import List, Sequence, Tuple

import numpy as np

from app.config import FD_STEPS
from core.errors import ConfigInvalid, DimensionMismatch, HomsolError
from core.poly_core import SymMatrix, eig_sym, spd_inv_sqrt

logger = logging.getLogger(__name__)


class EllipticOperator(ABC):
    """F: symmetric n x n matrices -> reals"""

    kind: str = ""

    def __init__(self, n: int):
        if n < 1:
            raise DimensionMismatch(f"dimension must be positive, got {n}")
        self.n = int(n)

    def _check(self, m: SymMatrix) -> None:
        if m.n != self.n:
            raise DimensionMismatch(f"{self.kind} operator in n={self.n} applied to a {m.n}x{m.n} matrix")

    @abstractmethod
    def evaluate(self, m: SymMatrix) -> float:
        """F(M)"""

    @abstractmethod
    def gradient(self, m: SymMatrix) -> SymMatrix:
        """G with dF = sum_ij G_ij dM_ij"""

    @abstractmethod
    def evaluate_batch(self, hessians: np.ndarray) -> np.ndarray:
        """F at each matrix of an (N, n, n) stack"""

    def _check_batch(self, hessians: np.ndarray) -> np.ndarray:
        stack = np.asarray(hessians, dtype=float)
        if stack.ndim != 3 or stack.shape[1:] != (self.n, self.n):
            raise DimensionMismatch(f"expected an (N, {self.n}, {self.n}) stack, got {stack.shape}")
        return stack


class LinearOperator(EllipticOperator):
    """F(M) = tr(A M), A symmetric positive definite"""

    kind = "linear"

    def __init__(self, a: SymMatrix):
        super().__init__(a.n)
        spd_inv_sqrt(a)  # raises NotSPD
        self.a = a

    def evaluate(self, m: SymMatrix) -> float:
        self._check(m)
        return self.a.inner(m)

    def gradient(self, m: SymMatrix) -> SymMatrix:
        self._check(m)
        return self.a

    def evaluate_batch(self, hessians: np.ndarray) -> np.ndarray:
        stack = self._check_batch(hessians)
        return np.einsum("ij,nij->n", self.a.array, stack)

    def __repr__(self) -> str:
        return f"LinearOperator(A={self.a.to_list()})"


class SpecialLagrangian(EllipticOperator):
    """F(M) = sum_i arctan(lambda_i(M)) - c"""

    kind = "speclag"

    def __init__(self, c: float, n: int):
        super().__init__(n)
        self.c = float(c)

    def evaluate(self, m: SymMatrix) -> float:
        self._check(m)
        return float(np.sum(np.arctan(eig_sym(m).values))) - self.c

    def gradient(self, m: SymMatrix) -> SymMatrix:
        """(I + M^2)^{-1} from the spectral decomposition"""
        self._check(m)
        return eig_sym(m).apply(lambda v: 1.0 / (1.0 + v * v))

    def evaluate_batch(self, hessians: np.ndarray) -> np.ndarray:
        stack = self._check_batch(hessians)
        return np.sum(np.arctan(np.linalg.eigvalsh(stack)), axis=1) - self.c

    def phase_window(self) -> Tuple[float, float]:
        """Range of admissible phases, (-n pi/2, n pi/2)"""
        half = self.n * math.pi / 2.0
        return -half, half

    def __repr__(self) -> str:
        return f"SpecialLagrangian(c={self.c}, n={self.n})"


class PerturbedLinear(EllipticOperator):
    """F(M) = tr(M) + eps sin(M_11), |eps| < 1/2"""

    kind = "perturbed"

    def __init__(self, eps: float, n: int):
        super().__init__(n)
        if not abs(eps) < 0.5:
            raise ConfigInvalid(f"perturbed operator needs |eps| < 1/2, got {eps}")
        self.eps = float(eps)

    def evaluate(self, m: SymMatrix) -> float:
        self._check(m)
        return m.trace() + self.eps * math.sin(m[0, 0])

    def gradient(self, m: SymMatrix) -> SymMatrix:
        self._check(m)
        grad = np.eye(self.n)
        grad[0, 0] += self.eps * math.cos(m[0, 0])
        return SymMatrix(grad)

    def evaluate_batch(self, hessians: np.ndarray) -> np.ndarray:
        stack = self._check_batch(hessians)
        return np.trace(stack, axis1=1, axis2=2) + self.eps * np.sin(stack[:, 0, 0])

    def __repr__(self) -> str:
        return f"PerturbedLinear(eps={self.eps}, n={self.n})"


def op_eval(op: EllipticOperator, m: SymMatrix) -> float:
    return op.evaluate(m)


def op_grad(op: EllipticOperator, m: SymMatrix) -> SymMatrix:
    return op.gradient(m)


def op_grad_fd(op: EllipticOperator, m: SymMatrix, h: float = FD_STEPS["operator_gradient"]) -> SymMatrix:
    """Central differences over the symmetric coordinates; off-diagonal steps move (i,j) and (j,i) together"""
    n = op.n
    base = m.array
    grad = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            step = np.zeros((n, n))
            step[i, j] = step[j, i] = h
            diff = op.evaluate(SymMatrix(base + step)) - op.evaluate(SymMatrix(base - step))
            if i == j:
                grad[i, i] = diff / (2.0 * h)
            else:
                grad[i, j] = grad[j, i] = diff / (4.0 * h)
    return SymMatrix(grad)


def ellipticity_range(op: EllipticOperator, samples: Sequence[SymMatrix]) -> Tuple[float, float]:
    """Smallest and largest eigenvalue of the gradient over the sample set"""
    if not samples:
        raise HomsolError("ellipticity_range needs at least one sample matrix")
    mu_min, mu_max = math.inf, -math.inf
    for m in samples:
        values = eig_sym(op.gradient(m)).values
        mu_min = min(mu_min, float(values[0]))
        mu_max = max(mu_max, float(values[-1]))
    if mu_min <= 0:
        logger.warning("empirical ellipticity window reaches %.3g for %r", mu_min, op)
    return mu_min, mu_max


def check_f_at_zero(op: EllipticOperator) -> float:
    """F(0)"""
    return op.evaluate(SymMatrix.zeros(op.n))


def gradient_check(op: EllipticOperator, samples: Sequence[SymMatrix], h: float = FD_STEPS["operator_gradient"]) -> float:
    """Worst relative Frobenius gap between the analytic and finite-difference gradients"""
    worst = 0.0
    for m in samples:
        analytic = op.gradient(m)
        numeric = op_grad_fd(op, m, h)
        gap = (analytic - numeric).frobenius() / max(analytic.frobenius(), 1e-300)
        worst = max(worst, gap)
    return worst


def random_symmetric_matrices(n: int, count: int, bound: float, rng: np.random.Generator) -> List[SymMatrix]:
    """Symmetric matrices with entries uniform in [-bound, bound]"""
    matrices = []
    for _ in range(count):
        raw = rng.uniform(-bound, bound, size=(n, n))
        upper = np.triu(raw)
        matrices.append(SymMatrix(upper + np.triu(upper, 1).T))
    return matrices

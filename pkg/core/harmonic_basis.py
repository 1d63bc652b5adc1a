"""
Harmonic Basis Module
Homogeneous harmonic polynomials as the exact rational kernel of the Laplacian
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, prod
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import DimensionMismatch, HomsolError, NotHomogeneous
from core.poly_core import Exponent, Multinomial, monomials_of_degree

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HarmonicBasis:
    """Basis of the degree-d harmonic polynomials in n variables"""

    n: int
    d: int
    elements: Tuple[Multinomial, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Multinomial]:
        return iter(self.elements)

    def __getitem__(self, index: int) -> Multinomial:
        return self.elements[index]

    def as_strings(self) -> List[str]:
        return [str(h) for h in self.elements]


def harmonic_dimension(n: int, d: int) -> int:
    """C(n+d-1, n-1) - C(n+d-3, n-1)"""
    if n < 1 or d < 0:
        raise HomsolError(f"harmonic_dimension needs n >= 1 and d >= 0, got n={n}, d={d}")
    lower = comb(n + d - 3, n - 1) if d >= 2 else 0
    return comb(n + d - 1, n - 1) - lower


def laplacian_matrix(n: int, d: int) -> List[List[Fraction]]:
    """Matrix of the Laplacian from degree-d to degree-(d-2) monomial coordinates (graded-lex)"""
    columns = monomials_of_degree(n, d)
    rows = monomials_of_degree(n, d - 2)
    row_index = {exponent: i for i, exponent in enumerate(rows)}
    matrix = [[Fraction(0)] * len(columns) for _ in rows]
    for j, exponent in enumerate(columns):
        for i, power in enumerate(exponent):
            if power >= 2:
                lowered = exponent[:i] + (power - 2,) + exponent[i + 1:]
                matrix[row_index[lowered]][j] += power * (power - 1)
    return matrix


def row_echelon(matrix: Sequence[Sequence[Fraction]], ncols: Optional[int] = None) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row-echelon form over the rationals; returns (nonzero rows, pivot columns)"""
    m = [list(row) for row in matrix]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots: List[int] = []
    pivot_row = 0
    for col in range(ncols):
        if pivot_row == len(m):
            break
        found = next((r for r in range(pivot_row, len(m)) if m[r][col] != 0), None)
        if found is None:
            continue
        m[pivot_row], m[found] = m[found], m[pivot_row]
        lead = m[pivot_row][col]
        m[pivot_row] = [value / lead for value in m[pivot_row]]
        for r in range(len(m)):
            factor = m[r][col]
            if r != pivot_row and factor != 0:
                m[r] = [a - factor * b for a, b in zip(m[r], m[pivot_row])]
        pivots.append(col)
        pivot_row += 1
    return m[:pivot_row], pivots


def nullspace(matrix: Sequence[Sequence[Fraction]], ncols: int) -> List[List[Fraction]]:
    """Exact kernel basis, one vector per free column"""
    reduced, pivots = row_echelon(matrix, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    kernel = []
    for f in free:
        vector = [Fraction(0)] * ncols
        vector[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            vector[p] = -row[f]
        kernel.append(vector)
    return kernel


@lru_cache(maxsize=None)
def harmonic_basis(n: int, d: int) -> HarmonicBasis:
    """Exact harmonic basis, canonicalized by the row-echelon form of the kernel"""
    if n < 2:
        raise DimensionMismatch(f"harmonic_basis needs n >= 2, got {n}")
    if d < 0 or int(d) != d:
        raise HomsolError(f"harmonic_basis needs a nonnegative integer degree, got {d}")
    d = int(d)
    columns = monomials_of_degree(n, d)
    kernel = nullspace(laplacian_matrix(n, d), len(columns))
    canonical, _ = row_echelon(kernel, len(columns))
    elements = tuple(
        Multinomial(n, {exponent: c for exponent, c in zip(columns, row) if c != 0}, exact=True)
        for row in canonical
    )
    logger.debug("harmonic basis n=%d d=%d has %d elements", n, d, len(elements))
    return HarmonicBasis(n, d, elements)


def bombieri_weight(exponent: Exponent) -> Fraction:
    """<x^a, x^a> = a!/|a|!"""
    return Fraction(prod(factorial(e) for e in exponent), factorial(sum(exponent)))


def project_to_harmonic(p: Multinomial) -> Multinomial:
    """Orthogonal projection onto the harmonic polynomials of the same degree (Bombieri inner product)"""
    if p.is_zero():
        return p
    if not p.is_homogeneous():
        raise NotHomogeneous(f"cannot project a polynomial mixing degrees {sorted(p.degrees())}")
    n, d = p.nvars, p.degree
    basis = harmonic_basis(n, d)
    columns = monomials_of_degree(n, d)
    weights = [bombieri_weight(e) for e in columns]
    if not p.exact:
        b = np.array([[float(h.coefficient(e)) for h in basis] for e in columns])
        w = np.array([float(v) for v in weights])
        target = np.array([float(p.coefficient(e)) for e in columns])
        gram = b.T @ (w[:, None] * b)
        coefficients = np.linalg.solve(gram, b.T @ (w * target))
        projected = b @ coefficients
        return Multinomial(n, dict(zip(columns, projected.tolist())), exact=False)

    b = [[h.coefficient(e) for h in basis] for e in columns]
    k = len(basis)
    gram = [[sum(weights[r] * b[r][i] * b[r][j] for r in range(len(columns))) for j in range(k)] for i in range(k)]
    rhs = [sum(weights[r] * b[r][i] * p.coefficient(columns[r]) for r in range(len(columns))) for i in range(k)]
    augmented = [gram[i] + [rhs[i]] for i in range(k)]
    reduced, _ = row_echelon(augmented, k)
    coefficients = [row[k] for row in reduced]
    projected = {}
    for r, exponent in enumerate(columns):
        value = sum(b[r][i] * coefficients[i] for i in range(k))
        if value != 0:
            projected[exponent] = value
    return Multinomial(n, projected, exact=True)

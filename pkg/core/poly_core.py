"""
Polynomial Core Module
Sparse multivariate polynomials (exact rational or float coefficients),
dense symmetric matrices and the cyclic Jacobi eigensolver
"""

import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.config import EIGEN, TOLERANCES
from core.errors import (
    DimensionMismatch,
    EigenNonConvergence,
    HomsolError,
    NotSPD,
    NotSymmetric,
    ParseError,
)

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Coefficient = Union[Fraction, float]


def _grlex_key(exponent: Exponent) -> Tuple:
    # highest total degree first, then lexicographically largest
    return (-sum(exponent), tuple(-e for e in exponent))


def _is_exact_scalar(value) -> bool:
    return isinstance(value, (int, Fraction, np.integer))


def _coerce(value, exact: bool) -> Coefficient:
    if exact:
        if isinstance(value, np.integer):
            value = int(value)
        return Fraction(value)
    return float(value)


def monomials_of_degree(nvars: int, degree: int) -> List[Exponent]:
    """All exponent vectors of a given total degree, in graded-lex order"""
    if degree < 0:
        return []
    if nvars == 1:
        return [(degree,)]
    result = []
    for first in range(degree, -1, -1):
        for rest in monomials_of_degree(nvars - 1, degree - first):
            result.append((first,) + rest)
    return result


class Multinomial:
    """Immutable sparse polynomial in x1..xn: exponent vector -> coefficient"""

    __slots__ = ("_nvars", "_terms", "_exact")

    def __init__(self, nvars: int, terms: Optional[Mapping[Sequence[int], object]] = None, exact: bool = True):
        if nvars < 1:
            raise DimensionMismatch(f"nvars must be positive, got {nvars}")
        cleaned: Dict[Exponent, Coefficient] = {}
        for exponent, value in (terms or {}).items():
            key = tuple(int(e) for e in exponent)
            if len(key) != nvars or any(e < 0 for e in key):
                raise DimensionMismatch(f"exponent {exponent} invalid for {nvars} variables")
            coefficient = _coerce(value, exact) + cleaned.get(key, 0)
            if coefficient != 0:
                cleaned[key] = coefficient
            else:
                cleaned.pop(key, None)
        self._nvars = nvars
        self._terms = cleaned
        self._exact = exact

    @classmethod
    def constant(cls, nvars: int, value=1, exact: bool = True) -> "Multinomial":
        return cls(nvars, {(0,) * nvars: value}, exact)

    @classmethod
    def variable(cls, nvars: int, index: int, exact: bool = True) -> "Multinomial":
        """The coordinate x_{index+1} (index is zero-based)"""
        exponent = [0] * nvars
        exponent[index] = 1
        return cls(nvars, {tuple(exponent): 1}, exact)

    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def terms(self) -> Mapping[Exponent, Coefficient]:
        return MappingProxyType(self._terms)

    def sorted_terms(self) -> List[Tuple[Exponent, Coefficient]]:
        return sorted(self._terms.items(), key=lambda item: _grlex_key(item[0]))

    def coefficient(self, exponent: Sequence[int]) -> Coefficient:
        return self._terms.get(tuple(exponent), Fraction(0) if self._exact else 0.0)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Largest total degree (0 for the zero polynomial)"""
        return max((sum(e) for e in self._terms), default=0)

    def degrees(self) -> set:
        return {sum(e) for e in self._terms}

    def is_homogeneous(self, degree: Optional[int] = None) -> bool:
        found = self.degrees()
        if not found:
            return True
        if len(found) > 1:
            return False
        return degree is None or found == {degree}

    def max_abs_coefficient(self) -> float:
        return max((abs(float(c)) for c in self._terms.values()), default=0.0)

    def to_float(self) -> "Multinomial":
        if not self._exact:
            return self
        return Multinomial(self._nvars, self._terms, exact=False)

    def chop(self, tol: float) -> "Multinomial":
        """Drop coefficients with magnitude at most tol"""
        kept = {e: c for e, c in self._terms.items() if abs(c) > tol}
        return Multinomial(self._nvars, kept, self._exact)

    def almost_equal(self, other: "Multinomial", tol: float) -> bool:
        return (self - other).max_abs_coefficient() <= tol

    def derivative(self, index: int) -> "Multinomial":
        """Partial derivative with respect to x_{index+1}"""
        result = {}
        for exponent, c in self._terms.items():
            power = exponent[index]
            if power == 0:
                continue
            lowered = exponent[:index] + (power - 1,) + exponent[index + 1:]
            result[lowered] = c * power
        return Multinomial(self._nvars, result, self._exact)

    def _check_compatible(self, other: "Multinomial") -> None:
        if other.nvars != self._nvars:
            raise DimensionMismatch(f"polynomials in {self._nvars} and {other.nvars} variables")

    def __add__(self, other) -> "Multinomial":
        if not isinstance(other, Multinomial):
            other = Multinomial.constant(self._nvars, other, exact=_is_exact_scalar(other))
        self._check_compatible(other)
        exact = self._exact and other.exact
        merged: Dict[Exponent, Coefficient] = {e: _coerce(c, exact) for e, c in self._terms.items()}
        for exponent, c in other.terms.items():
            merged[exponent] = merged.get(exponent, 0) + _coerce(c, exact)
        return Multinomial(self._nvars, merged, exact)

    __radd__ = __add__

    def __neg__(self) -> "Multinomial":
        return Multinomial(self._nvars, {e: -c for e, c in self._terms.items()}, self._exact)

    def __sub__(self, other) -> "Multinomial":
        return self + (-other)

    def __rsub__(self, other) -> "Multinomial":
        return (-self) + other

    def __mul__(self, other) -> "Multinomial":
        if not isinstance(other, Multinomial):
            exact = self._exact and _is_exact_scalar(other)
            scalar = _coerce(other, exact)
            return Multinomial(self._nvars, {e: _coerce(c, exact) * scalar for e, c in self._terms.items()}, exact)
        self._check_compatible(other)
        exact = self._exact and other.exact
        product: Dict[Exponent, Coefficient] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                product[key] = product.get(key, 0) + _coerce(c1, exact) * _coerce(c2, exact)
        return Multinomial(self._nvars, product, exact)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Multinomial":
        result = Multinomial.constant(self._nvars, 1, self._exact)
        for _ in range(power):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Multinomial):
            return NotImplemented
        return self._nvars == other.nvars and self._terms == dict(other.terms)

    def __hash__(self) -> int:
        return hash((self._nvars, frozenset(self._terms.items())))

    def __iter__(self) -> Iterator[Tuple[Exponent, Coefficient]]:
        return iter(self.sorted_terms())

    def __len__(self) -> int:
        return len(self._terms)

    def __str__(self) -> str:
        return format_polynomial(self)

    def __repr__(self) -> str:
        mode = "exact" if self._exact else "float"
        return f"Multinomial({self._nvars}, {format_polynomial(self)!r}, {mode})"


# ---------------------------------------------------------------------------
# Text format: terms joined by +/-, each term <coeff>*x<i>^<k>
# ---------------------------------------------------------------------------

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?")
_VARIABLE = re.compile(r"x(\d+)(?:\^(\d+))?")


def _format_coefficient(value: Coefficient) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


def format_polynomial(p: Multinomial) -> str:
    """Canonical text form, graded-lex term order"""
    if p.is_zero():
        return "0"
    parts = []
    for position, (exponent, c) in enumerate(p.sorted_terms()):
        negative = c < 0
        magnitude = -c if negative else c
        monomial = "*".join(
            f"x{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(exponent) if e > 0
        )
        if monomial and magnitude == 1:
            body = monomial
        elif monomial:
            body = f"{_format_coefficient(magnitude)}*{monomial}"
        else:
            body = _format_coefficient(magnitude)
        if position == 0:
            parts.append(("-" if negative else "") + body)
        else:
            parts.append((" - " if negative else " + ") + body)
    return "".join(parts)


def _parse_number(token: str, exact: bool) -> Coefficient:
    if exact:
        return Fraction(token)
    if "/" in token:
        return float(Fraction(token))
    return float(token)


def parse_polynomial(text: str, nvars: Optional[int] = None, exact: Optional[bool] = None) -> Multinomial:
    """Parse the polynomial text format; float mode when any coefficient has '.' or an exponent"""
    raw_terms: List[Tuple[int, List[str], Dict[int, int]]] = []
    pos = 0
    length = len(text)

    def skip_ws(i: int) -> int:
        while i < length and text[i].isspace():
            i += 1
        return i

    pos = skip_ws(pos)
    if pos == length:
        raise ParseError("empty polynomial", text, pos)
    first = True
    while pos < length:
        sign = 1
        if text[pos] in "+-":
            sign = -1 if text[pos] == "-" else 1
            pos = skip_ws(pos + 1)
        elif not first:
            raise ParseError("expected '+' or '-'", text, pos)
        numbers: List[str] = []
        powers: Dict[int, int] = {}
        expect_factor = True
        while expect_factor:
            if pos >= length:
                raise ParseError("expected a number or variable", text, pos)
            number = _NUMBER.match(text, pos)
            variable = _VARIABLE.match(text, pos)
            if number:
                numbers.append(number.group(0))
                pos = number.end()
            elif variable:
                index = int(variable.group(1))
                if index < 1:
                    raise ParseError("variables are numbered from x1", text, pos)
                powers[index] = powers.get(index, 0) + int(variable.group(2) or 1)
                pos = variable.end()
            else:
                raise ParseError("expected a number or variable", text, pos)
            pos = skip_ws(pos)
            if pos < length and text[pos] == "*":
                pos = skip_ws(pos + 1)
            else:
                # juxtaposed factors multiply: 3x1^2, x1x2
                expect_factor = bool(_NUMBER.match(text, pos) or _VARIABLE.match(text, pos))
        raw_terms.append((sign, numbers, powers))
        first = False
        pos = skip_ws(pos)

    if exact is None:
        exact = not any(any(ch in tok for ch in ".eE") for _, nums, _ in raw_terms for tok in nums)
    highest = max((max(powers) for _, _, powers in raw_terms if powers), default=1)
    if nvars is None:
        nvars = highest
    elif highest > nvars:
        raise ParseError(f"variable x{highest} exceeds declared nvars={nvars}", text, None)

    result = Multinomial(nvars, {}, exact)
    for sign, numbers, powers in raw_terms:
        coefficient = _coerce(sign, exact)
        for token in numbers:
            coefficient *= _parse_number(token, exact)
        exponent = [0] * nvars
        for index, power in powers.items():
            exponent[index - 1] = power
        result = result + Multinomial(nvars, {tuple(exponent): coefficient}, exact)
    return result


# ---------------------------------------------------------------------------
# Symmetric matrices
# ---------------------------------------------------------------------------


class SymMatrix:
    """Immutable dense symmetric real matrix"""

    __slots__ = ("_data",)

    def __init__(self, entries, atol: Optional[float] = None):
        data = np.array(entries, dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] < 1:
            raise DimensionMismatch(f"expected a square matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise HomsolError("matrix entries must be finite")
        scale = 1.0 + float(np.max(np.abs(data)))
        tol = (TOLERANCES["symmetry"] if atol is None else atol) * scale
        if float(np.max(np.abs(data - data.T))) > tol:
            raise NotSymmetric("matrix is not symmetric")
        data = 0.5 * (data + data.T)
        data.setflags(write=False)
        self._data = data

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> "SymMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def diag(cls, values: Iterable[float]) -> "SymMatrix":
        return cls(np.diag(np.asarray(list(values), dtype=float)))

    @classmethod
    def from_upper(cls, n: int, upper: Sequence[float]) -> "SymMatrix":
        """Build from the row-major upper triangle (n(n+1)/2 values)"""
        if len(upper) != n * (n + 1) // 2:
            raise DimensionMismatch(f"{len(upper)} values cannot fill an upper triangle of size {n}")
        data = np.zeros((n, n))
        data[np.triu_indices(n)] = upper
        return cls(data + np.triu(data, 1).T)

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._data

    def upper(self) -> Tuple[float, ...]:
        return tuple(self._data[np.triu_indices(self.n)].tolist())

    def to_list(self) -> List[List[float]]:
        return self._data.tolist()

    def trace(self) -> float:
        return float(np.trace(self._data))

    def frobenius(self) -> float:
        return float(np.linalg.norm(self._data))

    def inner(self, other: "SymMatrix") -> float:
        """tr(self . other)"""
        return float(np.sum(self._data * other.array))

    def __getitem__(self, index):
        return self._data[index]

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self._data + np.asarray(other.array if isinstance(other, SymMatrix) else other))

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self._data - np.asarray(other.array if isinstance(other, SymMatrix) else other))

    def __mul__(self, scalar: float) -> "SymMatrix":
        return SymMatrix(self._data * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SymMatrix":
        return SymMatrix(-self._data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return np.array_equal(self._data, other.array)

    def __hash__(self) -> int:
        return hash(self._data.tobytes())

    def __repr__(self) -> str:
        return f"SymMatrix({self._data.tolist()})"


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """values ascending, vectors column-wise orthonormal"""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> SymMatrix:
        return self.apply(lambda v: v)

    def apply(self, func: Callable[[np.ndarray], np.ndarray]) -> SymMatrix:
        """Q diag(func(values)) Q^T"""
        q = self.vectors
        return SymMatrix((q * func(self.values)) @ q.T)

    def reconstruction_error(self, m: SymMatrix) -> float:
        return float(np.linalg.norm(self.reconstruct().array - m.array))

    def orthogonality_error(self) -> float:
        q = self.vectors
        return float(np.linalg.norm(q.T @ q - np.eye(q.shape[1])))


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))


def eig_sym(m: SymMatrix, max_sweeps: int = EIGEN["max_sweeps"], rtol: float = EIGEN["off_diagonal_rtol"]) -> SpectralDecomposition:
    """Cyclic Jacobi eigendecomposition"""
    n = m.n
    a = np.array(m.array, dtype=float)
    v = np.eye(n)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return SpectralDecomposition(np.zeros(n), np.eye(n))
    threshold = rtol * norm
    sweep = 0
    while _off_diagonal_norm(a) > threshold:
        if sweep == max_sweeps:
            raise EigenNonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                sign = 1.0 if theta >= 0 else -1.0
                t = sign / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                pair = [p, q]
                a[:, pair] = a[:, pair] @ rot
                a[pair, :] = rot.T @ a[pair, :]
                a[p, q] = a[q, p] = 0.0
                v[:, pair] = v[:, pair] @ rot
        sweep += 1
    logger.debug("Jacobi converged after %d sweeps (n=%d)", sweep, n)
    diagonal = np.diag(a)
    order = np.argsort(diagonal, kind="stable")
    return SpectralDecomposition(diagonal[order].copy(), v[:, order].copy())


def _spectrum_checked(a: SymMatrix) -> SpectralDecomposition:
    decomposition = eig_sym(a)
    largest = decomposition.values[-1]
    smallest = decomposition.values[0]
    if largest <= 0 or smallest <= TOLERANCES["spd_ratio"] * largest:
        raise NotSPD(f"matrix is not positive definite (eigenvalues {smallest:.3g} .. {largest:.3g})")
    return decomposition


def spd_inv_sqrt(a: SymMatrix) -> SymMatrix:
    """A^{-1/2} for symmetric positive definite A"""
    return _spectrum_checked(a).apply(lambda v: 1.0 / np.sqrt(v))


def spd_sqrt(a: SymMatrix) -> SymMatrix:
    """A^{1/2} for symmetric positive definite A"""
    return _spectrum_checked(a).apply(np.sqrt)


# ---------------------------------------------------------------------------
# Calculus and evaluation
# ---------------------------------------------------------------------------


def _as_point(p: Multinomial, x) -> np.ndarray:
    point = np.asarray(x, dtype=float).reshape(-1)
    if point.size != p.nvars:
        raise DimensionMismatch(f"point of length {point.size} for polynomial in {p.nvars} variables")
    return point


def poly_eval(p: Multinomial, x) -> float:
    """Value at x by direct monomial summation"""
    point = _as_point(p, x)
    total = 0.0
    for exponent, c in p.terms.items():
        total += float(c) * math.prod(point[i] ** e for i, e in enumerate(exponent) if e)
    return float(total)


def poly_eval_batch(p: Multinomial, points) -> np.ndarray:
    """Values at each row of an (N, nvars) array"""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != p.nvars:
        raise DimensionMismatch(f"points of shape {pts.shape} for polynomial in {p.nvars} variables")
    values = np.zeros(pts.shape[0])
    for exponent, c in p.terms.items():
        values += float(c) * np.prod(pts ** np.asarray(exponent), axis=1)
    return values


def poly_laplacian(p: Multinomial) -> Multinomial:
    """Sum of pure second partials"""
    result: Dict[Exponent, Coefficient] = {}
    for exponent, c in p.terms.items():
        for i, power in enumerate(exponent):
            if power < 2:
                continue
            lowered = exponent[:i] + (power - 2,) + exponent[i + 1:]
            result[lowered] = result.get(lowered, 0) + c * power * (power - 1)
    return Multinomial(p.nvars, result, p.exact)


@lru_cache(maxsize=512)
def _gradient_polys(p: Multinomial) -> Tuple[Multinomial, ...]:
    return tuple(p.derivative(i) for i in range(p.nvars))


@lru_cache(maxsize=512)
def _hessian_polys(p: Multinomial) -> Tuple[Tuple[Multinomial, ...], ...]:
    grads = _gradient_polys(p)
    return tuple(tuple(grads[i].derivative(j) for j in range(p.nvars)) for i in range(p.nvars))


def poly_gradient_at(p: Multinomial, x) -> np.ndarray:
    point = _as_point(p, x)
    return np.array([poly_eval(g, point) for g in _gradient_polys(p)])


def poly_hessian_at(p: Multinomial, x) -> SymMatrix:
    """Matrix of second partials at x"""
    point = _as_point(p, x)
    n = p.nvars
    hess = np.zeros((n, n))
    polys = _hessian_polys(p)
    for i in range(n):
        for j in range(i, n):
            hess[i, j] = hess[j, i] = poly_eval(polys[i][j], point)
    return SymMatrix(hess)


def poly_gradient_batch(p: Multinomial, points) -> np.ndarray:
    """(N, n) gradients"""
    return np.stack([poly_eval_batch(g, points) for g in _gradient_polys(p)], axis=1)


def poly_hessian_batch(p: Multinomial, points) -> np.ndarray:
    """(N, n, n) Hessians"""
    pts = np.asarray(points, dtype=float)
    n = p.nvars
    polys = _hessian_polys(p)
    hess = np.zeros((pts.shape[0], n, n))
    for i in range(n):
        for j in range(i, n):
            values = poly_eval_batch(polys[i][j], pts)
            hess[:, i, j] = values
            hess[:, j, i] = values
    return hess


def _matrix_rows(b, n: int) -> Tuple[List[List[Coefficient]], bool]:
    if isinstance(b, SymMatrix):
        rows, exact = b.array.tolist(), False
    elif isinstance(b, np.ndarray):
        exact = b.dtype.kind in "iu" or (b.dtype.kind == "O" and all(_is_exact_scalar(v) for v in b.flat))
        rows = b.tolist()
    else:
        rows = [list(row) for row in b]
        exact = all(_is_exact_scalar(v) for row in rows for v in row)
    if len(rows) != n or any(len(row) != n for row in rows):
        raise DimensionMismatch(f"matrix must be {n}x{n}")
    return [[_coerce(v, exact) for v in row] for row in rows], exact


def poly_compose_linear(p: Multinomial, b) -> Multinomial:
    """The polynomial x -> p(Bx), expanded"""
    n = p.nvars
    rows, matrix_exact = _matrix_rows(b, n)
    exact = p.exact and matrix_exact
    forms = []
    for i in range(n):
        form = {}
        for j in range(n):
            exponent = [0] * n
            exponent[j] = 1
            form[tuple(exponent)] = rows[i][j]
        forms.append(Multinomial(n, form, exact))
    powers: Dict[Tuple[int, int], Multinomial] = {}

    def power_of(i: int, k: int) -> Multinomial:
        if (i, k) not in powers:
            powers[(i, k)] = Multinomial.constant(n, 1, exact) if k == 0 else power_of(i, k - 1) * forms[i]
        return powers[(i, k)]

    result = Multinomial(n, {}, exact)
    for exponent, c in p.sorted_terms():
        term = Multinomial.constant(n, c, exact)
        for i, k in enumerate(exponent):
            if k:
                term = term * power_of(i, k)
        result = result + term
    return result


def poly_operator_trace(p: Multinomial, a) -> Multinomial:
    """sum_ij A_ij d_i d_j p, the constant-coefficient operator tr(A D^2 p)"""
    n = p.nvars
    rows, matrix_exact = _matrix_rows(a, n)
    exact = p.exact and matrix_exact
    polys = _hessian_polys(p)
    result = Multinomial(n, {}, exact)
    for i in range(n):
        for j in range(n):
            if rows[i][j] != 0:
                result = result + polys[i][j] * rows[i][j]
    return result

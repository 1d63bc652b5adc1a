"""
Homogeneous Functions Module
u(x) = |x|^d g(x/|x|) with polynomial, solid-harmonic, grid and coefficient profiles;
Hessian scaling law, Laplacian split and Euler identity
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from app.config import FD_STEPS, TOLERANCES
from core.errors import DimensionMismatch, GridMismatch, NotHomogeneous, NotUnitVector, OriginEvaluation, StencilOutOfRange
from core.finite_diff import fd_gradient, fd_hessian_batch
from core.harmonic_basis import harmonic_basis
from core.poly_core import (
    Multinomial,
    SymMatrix,
    poly_eval_batch,
    poly_gradient_batch,
    poly_hessian_batch,
)
from core.spherical_spectrum import SphereGrid, build_lb, predicted_eigenvalue, sphere_quadrature

logger = logging.getLogger(__name__)

_cached_lb = lru_cache(maxsize=8)(build_lb)


def radial_power_hessian(m: float, p: Multinomial, points) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values, gradients and Hessians of |x|^m p(x) at each row of points"""
    y = np.asarray(points, dtype=float)
    n = y.shape[1]
    r = np.sqrt(np.sum(y * y, axis=1))
    pv = poly_eval_batch(p, y)
    pg = poly_gradient_batch(p, y)
    ph = poly_hessian_batch(p, y)
    rm = r ** m
    values = rm * pv
    if m == 0:
        return values, pg, ph
    rm2 = r ** (m - 2)
    rm4 = r ** (m - 4)
    grads = (m * rm2 * pv)[:, None] * y + rm[:, None] * pg
    outer_mixed = y[:, :, None] * pg[:, None, :] + pg[:, :, None] * y[:, None, :]
    outer_y = y[:, :, None] * y[:, None, :]
    hess = (
        rm[:, None, None] * ph
        + (m * rm2)[:, None, None] * outer_mixed
        + pv[:, None, None] * ((m * rm2)[:, None, None] * np.eye(n) + (m * (m - 2) * rm4)[:, None, None] * outer_y)
    )
    return values, grads, hess


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolynomialProfile:
    """u is the homogeneous polynomial itself"""

    poly: Multinomial

    @property
    def n(self) -> int:
        return self.poly.nvars


@dataclass(frozen=True)
class SolidProfile:
    """g is the restriction of a homogeneous polynomial P; u = |x|^(d - deg P) P(x)"""

    poly: Multinomial

    @property
    def n(self) -> int:
        return self.poly.nvars

    def solid_terms(self) -> List[Tuple[float, Multinomial]]:
        return [(1.0, self.poly)]


@dataclass(frozen=True, eq=False)
class ProfileBasis:
    """Orthonormal (normalized sphere measure) restrictions of harmonic polynomials, l = 0..lmax"""

    n: int
    lmax: int
    elements: Tuple[Multinomial, ...]
    degrees: Tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.elements)

    def block(self, ell: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.degrees) == ell)

    def evaluate(self, points) -> np.ndarray:
        """(N, size) basis values; points are taken to lie on the sphere"""
        return np.stack([poly_eval_batch(p, points) for p in self.elements], axis=1)


@dataclass(frozen=True, eq=False)
class CoefProfile:
    """g = sum_k c_k P_k over a profile basis"""

    basis: ProfileBasis
    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float).reshape(-1)
        if coefficients.size != self.basis.size:
            raise DimensionMismatch(f"{coefficients.size} coefficients for a basis of {self.basis.size}")
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def n(self) -> int:
        return self.basis.n

    def solid_terms(self) -> List[Tuple[float, Multinomial]]:
        return [(float(c), p) for c, p in zip(self.coefficients, self.basis.elements) if c != 0.0]


@dataclass(frozen=True, eq=False)
class GridProfile:
    """Samples of g on a sphere grid, interpolated by cubic splines"""

    grid: SphereGrid
    values: np.ndarray
    _interpolant: object = field(init=False, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != self.grid.size:
            raise GridMismatch(f"{values.size} samples for a grid of {self.grid.size} points")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_interpolant", self._build_interpolant())

    @classmethod
    def from_function(cls, grid: SphereGrid, func) -> "GridProfile":
        return cls(grid, func(grid.points()))

    @property
    def n(self) -> int:
        return self.grid.n

    def _build_interpolant(self):
        phi = self.grid.longitudes()
        if self.grid.n == 2:
            return CubicSpline(np.append(phi, 2.0 * np.pi), np.append(self.values, self.values[0]), bc_type="periodic")
        pad = 3
        table = self.values.reshape(self.grid.resolution)
        phi_ext = np.concatenate([phi[-pad:] - 2.0 * np.pi, phi, phi[:pad] + 2.0 * np.pi])
        table_ext = np.concatenate([table[:, -pad:], table, table[:, :pad]], axis=1)
        return RectBivariateSpline(self.grid.colatitudes(), phi_ext, table_ext, kx=3, ky=3, s=0)

    def evaluate(self, unit_points) -> np.ndarray:
        """g at unit vectors (N, n)"""
        pts = np.asarray(unit_points, dtype=float)
        phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
        if self.grid.n == 2:
            return self._interpolant(phi)
        theta = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
        colatitudes = self.grid.colatitudes()
        if np.any(theta < colatitudes[0]) or np.any(theta > colatitudes[-1]):
            raise StencilOutOfRange(
                f"colatitude outside the interpolable band [{colatitudes[0]:.4f}, {colatitudes[-1]:.4f}]"
            )
        return self._interpolant.ev(theta, phi)


Profile = Union[PolynomialProfile, SolidProfile, GridProfile, CoefProfile]


# ---------------------------------------------------------------------------
# Homogeneous functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HomogeneousFunction:
    """u(x) = w(Sx), w(y) = |y|^d g(y/|y|); S defaults to the identity"""

    n: int
    degree: float
    profile: Profile
    transform: Optional[SymMatrix] = None
    validate: bool = True

    def __post_init__(self):
        if self.profile.n != self.n:
            raise DimensionMismatch(f"profile lives in n={self.profile.n}, function declared in n={self.n}")
        if self.transform is not None and self.transform.n != self.n:
            raise DimensionMismatch(f"transform is {self.transform.n}x{self.transform.n}, expected n={self.n}")
        if isinstance(self.profile, SolidProfile) and not self.profile.poly.is_homogeneous():
            raise NotHomogeneous("solid profile polynomial must be homogeneous")
        if self.validate and isinstance(self.profile, PolynomialProfile):
            poly = self.profile.poly
            if not poly.is_homogeneous():
                raise NotHomogeneous(f"polynomial mixes degrees {sorted(poly.degrees())}")
            if not poly.is_zero() and abs(poly.degree - self.degree) > TOLERANCES["integer"]:
                raise NotHomogeneous(f"polynomial has degree {poly.degree}, declared d = {self.degree}")

    @classmethod
    def from_polynomial(cls, poly: Multinomial, transform: Optional[SymMatrix] = None) -> "HomogeneousFunction":
        return cls(poly.nvars, float(poly.degree), PolynomialProfile(poly), transform)

    @property
    def eigenvalue(self) -> float:
        return predicted_eigenvalue(self.n, self.degree)

    def _check_points(self, points) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.n:
            raise DimensionMismatch(f"points of dimension {x.shape[1]} for n={self.n}")
        if np.any(np.linalg.norm(x, axis=1) < TOLERANCES["origin"]):
            raise OriginEvaluation("homogeneous functions are not evaluated at the origin")
        y = x if self.transform is None else x @ self.transform.array
        return x, y

    def _base_values(self, y: np.ndarray) -> np.ndarray:
        profile = self.profile
        if isinstance(profile, PolynomialProfile):
            return poly_eval_batch(profile.poly, y)
        r = np.linalg.norm(y, axis=1)
        if isinstance(profile, GridProfile):
            return r ** self.degree * profile.evaluate(y / r[:, None])
        values = np.zeros(y.shape[0])
        for c, p in profile.solid_terms():
            values += c * r ** (self.degree - p.degree) * poly_eval_batch(p, y)
        return values

    def _base_hessians(self, y: np.ndarray) -> np.ndarray:
        profile = self.profile
        r = np.linalg.norm(y, axis=1)
        if isinstance(profile, PolynomialProfile):
            poly = profile.poly
            if poly.is_zero() or poly.degree != self.degree:
                return poly_hessian_batch(poly, y)
            theta = y / r[:, None]
            return (r ** (self.degree - 2))[:, None, None] * poly_hessian_batch(poly, theta)
        if isinstance(profile, GridProfile):
            theta = y / r[:, None]
            hess = fd_hessian_batch(self._base_values, theta, FD_STEPS["hessian"])
            return (r ** (self.degree - 2))[:, None, None] * hess
        hess = np.zeros((y.shape[0], self.n, self.n))
        for c, p in profile.solid_terms():
            hess += c * radial_power_hessian(self.degree - p.degree, p, y)[2]
        return hess

    def value_batch(self, points) -> np.ndarray:
        _, y = self._check_points(points)
        return self._base_values(y)

    def hessian_batch(self, points) -> np.ndarray:
        """(N, n, n) Hessians"""
        _, y = self._check_points(points)
        hess = self._base_hessians(y)
        if self.transform is not None:
            s = self.transform.array
            hess = np.einsum("ij,njk,kl->nil", s, hess, s)
        return hess

    def __call__(self, x) -> float:
        return float(self.value_batch(x)[0])


def eval_extension(u: HomogeneousFunction, x) -> float:
    """|x|^d g(x/|x|)"""
    return float(u.value_batch(x)[0])


def hessian_homogeneous(u: HomogeneousFunction, x) -> SymMatrix:
    """D^2 u(x) = |x|^(d-2) D^2 u(x/|x|)"""
    return SymMatrix(u.hessian_batch(x)[0])


@dataclass(frozen=True)
class LaplaceSplit:
    """Delta u(theta) = lam g(theta) + Delta_S g(theta)"""

    lam: float
    radial_term: float
    spherical_term: float
    cartesian_trace: float

    @property
    def total(self) -> float:
        return self.radial_term + self.spherical_term


def laplace_split(u: HomogeneousFunction, theta) -> LaplaceSplit:
    """Radial and spherical parts of the Laplacian at a unit vector"""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if abs(float(np.linalg.norm(theta)) - 1.0) > TOLERANCES["unit_vector"]:
        raise NotUnitVector(f"|theta| = {np.linalg.norm(theta):.15g}")
    lam = predicted_eigenvalue(u.n, u.degree)
    g = eval_extension(u, theta)
    trace = float(np.trace(u.hessian_batch(theta)[0]))
    radial = lam * g
    if isinstance(u.profile, GridProfile) and u.transform is None:
        grid = u.profile.grid
        applied = GridProfile(grid, _cached_lb(grid).apply(u.profile.values))
        spherical = float(applied.evaluate(theta[None, :])[0])
    else:
        spherical = trace - radial
    return LaplaceSplit(lam, radial, spherical, trace)


def euler_identity_residual(u: HomogeneousFunction, x) -> float:
    """|x . grad u(x) - d u(x)| with a central-difference gradient"""
    x = np.asarray(x, dtype=float).reshape(-1)
    grad = fd_gradient(lambda z: eval_extension(u, z), x, FD_STEPS["gradient"])
    return abs(float(x @ grad) - u.degree * eval_extension(u, x))


def sample_profile(u: HomogeneousFunction, grid: SphereGrid) -> GridProfile:
    """Restriction of u to the grid points"""
    if grid.n != u.n:
        raise GridMismatch(f"grid for n={grid.n}, function in n={u.n}")
    return GridProfile(grid, u.value_batch(grid.points()))


@lru_cache(maxsize=32)
def build_profile_basis(n: int, lmax: int) -> ProfileBasis:
    """Harmonic-polynomial profiles for l = 0..lmax, orthonormal under the mean over the sphere"""
    elements: List[Multinomial] = []
    degrees: List[int] = []
    for ell in range(lmax + 1):
        block = [h.to_float() for h in harmonic_basis(n, ell)]
        points, weights = sphere_quadrature(n, 2 * ell)
        values = np.stack([poly_eval_batch(p, points) for p in block], axis=1)
        gram = values.T @ (weights[:, None] * values)
        inverse = np.linalg.inv(np.linalg.cholesky(gram))
        for row in inverse:
            combined = Multinomial(n, {}, exact=False)
            for weight, p in zip(row, block):
                if weight != 0.0:
                    combined = combined + p * float(weight)
            elements.append(combined)
            degrees.append(ell)
    logger.debug("profile basis n=%d lmax=%d has %d elements", n, lmax, len(elements))
    return ProfileBasis(n, lmax, tuple(elements), tuple(degrees))


def expand_profile(u: HomogeneousFunction, basis: ProfileBasis) -> np.ndarray:
    """Coefficients of g over the profile basis (exact when g is a polynomial of degree <= lmax)"""
    if basis.n != u.n:
        raise DimensionMismatch(f"basis for n={basis.n}, function in n={u.n}")
    extra = max(basis.lmax, int(math.ceil(abs(u.degree))))
    points, weights = sphere_quadrature(u.n, basis.lmax + extra)
    g = u.value_batch(points)
    return basis.evaluate(points).T @ (weights * g)


def kelvin_element(h: Multinomial, n: int, transform: Optional[SymMatrix] = None) -> HomogeneousFunction:
    """Singular harmonic |y|^(2-n-2l) h(y), y = Sx, of degree 2 - n - l"""
    if not h.is_homogeneous():
        raise NotHomogeneous("Kelvin transform needs a homogeneous harmonic polynomial")
    return HomogeneousFunction(n, float(2 - n - h.degree), SolidProfile(h.to_float()), transform)

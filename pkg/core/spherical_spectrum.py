"""
Spherical Spectrum Module
Finite-volume Laplace-Beltrami operator on the circle and on S^2,
its low spectrum, and product quadrature on the sphere
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from app.config import SPECTRUM
from core.analytics import cluster_eigenvalues
from core.errors import ConfigInvalid, DimensionMismatch, GridMismatch, GridTooLargeForDense, ResolutionTooLow

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SphereGrid:
    """Uniform circle (n=2) or staggered latitude-longitude grid (n=3)"""

    n: int
    resolution: Tuple[int, ...]

    def __post_init__(self):
        if self.n == 2 and len(self.resolution) == 1:
            return
        if self.n == 3 and len(self.resolution) == 2:
            return
        raise DimensionMismatch(f"grid resolution {self.resolution} does not fit n={self.n}")

    @classmethod
    def circle(cls, m: int) -> "SphereGrid":
        return cls(2, (int(m),))

    @classmethod
    def latlon(cls, nlat: int, nlon: int) -> "SphereGrid":
        return cls(3, (int(nlat), int(nlon)))

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def nlon(self) -> int:
        return self.resolution[-1]

    @property
    def nlat(self) -> int:
        return self.resolution[0] if self.n == 3 else 1

    def longitudes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.nlon) / self.nlon

    def colatitudes(self) -> np.ndarray:
        """theta_j = pi (j + 1/2) / nlat; no point sits on a pole"""
        return np.pi * (np.arange(self.nlat) + 0.5) / self.nlat

    def points(self) -> np.ndarray:
        """(size, n) unit vectors, latitude-major ordering"""
        phi = self.longitudes()
        if self.n == 2:
            return np.stack([np.cos(phi), np.sin(phi)], axis=1)
        theta, phi = np.meshgrid(self.colatitudes(), phi, indexing="ij")
        return np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
        ).reshape(-1, 3)

    def cell_areas(self) -> np.ndarray:
        dphi = 2.0 * np.pi / self.nlon
        if self.n == 2:
            return np.full(self.nlon, dphi)
        dtheta = np.pi / self.nlat
        return np.repeat(np.sin(self.colatitudes()) * dtheta * dphi, self.nlon)

    def label(self) -> str:
        return "x".join(str(r) for r in self.resolution)


@dataclass(frozen=True, eq=False)
class DiscreteLB:
    """L = W^{-1} S with S symmetric; application in flux form"""

    grid: SphereGrid
    off_diagonal: sp.csr_matrix
    row_sums: np.ndarray
    weights: np.ndarray

    @property
    def matrix(self) -> sp.csr_matrix:
        return (self.off_diagonal - sp.diags(self.row_sums)).tocsr()

    def apply(self, g: np.ndarray) -> np.ndarray:
        values = np.asarray(g, dtype=float)
        if values.shape != (self.grid.size,):
            raise GridMismatch(f"expected {self.grid.size} samples, got shape {values.shape}")
        return self.off_diagonal @ values - self.row_sums * values

    def symmetrized(self) -> sp.csr_matrix:
        """W^{1/2} L W^{-1/2}"""
        root = np.sqrt(self.weights)
        return (sp.diags(root) @ self.matrix @ sp.diags(1.0 / root)).tocsr()

    def symmetry_error(self) -> float:
        b = self.symmetrized()
        return float(abs(b - b.T).max())


def _circle_stiffness(grid: SphereGrid) -> sp.coo_matrix:
    m = grid.nlon
    h = 2.0 * np.pi / m
    p = np.arange(m)
    q = (p + 1) % m
    w = np.full(m, 1.0 / h)
    return sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([p, q]), np.concatenate([q, p]))), shape=(m, m))


def _sphere_stiffness(grid: SphereGrid) -> sp.coo_matrix:
    """Symmetric flux couplings on the staggered latitude-longitude grid

    Even and odd azimuthal modes are told apart by the half-turn partner
    (j, phi + pi). Even modes see the plain finite-volume faces. Odd modes see
    the latitude faces scaled by 1 + rho, with rho = -h^2 / (4 sin^2 theta - h^2),
    plus a coupling between half-turn partners of each ring. The first ring's
    coupling is the flux across the pole; the ring couplings are set so that
    sin(theta) e^{i phi} is reproduced exactly.
    """
    nlat, nlon = grid.resolution
    half = nlon // 2
    dtheta = np.pi / nlat
    dphi = 2.0 * np.pi / nlon
    theta = grid.colatitudes()
    sin_ring = np.sin(theta)
    lat, lon = np.meshgrid(np.arange(nlat), np.arange(nlon), indexing="ij")
    rows, cols, data = [], [], []

    # longitude faces
    p = (lat * nlon + lon).ravel()
    q = (lat * nlon + (lon + 1) % nlon).ravel()
    lon_face = dtheta / (sin_ring * dphi)
    w = np.repeat(lon_face, nlon)
    rows += [p, q]
    cols += [q, p]
    data += [w, w]

    # latitude faces, split into a straight and a half-turn coupling
    sin_face = np.sin(np.pi * (np.arange(nlat - 1) + 1.0) / nlat)
    even_face = sin_face * dphi / dtheta
    odd_face = even_face * (1.0 - dtheta ** 2 / (4.0 * sin_face ** 2 - dtheta ** 2))
    inner = lat[:-1], lon[:-1]
    p = (inner[0] * nlon + inner[1]).ravel()
    for shift, w in ((0, 0.5 * (even_face + odd_face)), (half, 0.5 * (even_face - odd_face))):
        q = ((inner[0] + 1) * nlon + (inner[1] + shift) % nlon).ravel()
        w = np.repeat(w, nlon)
        rows += [p, q]
        cols += [q, p]
        data += [w, w]

    # half-turn couplings within each ring
    area = sin_ring * dtheta * dphi
    upper = np.append(odd_face, 0.0)
    lower = np.insert(odd_face, 0, 0.0)
    step = np.diff(sin_ring)
    flux = (upper * np.append(step, 0.0) - lower * np.insert(step, 0, 0.0)) / area
    azimuthal = lon_face * (2.0 - 2.0 * np.cos(dphi)) / area
    potential = (flux - azimuthal * sin_ring + 2.0 * sin_ring) / sin_ring
    ring = 0.5 * (potential * area + (upper - np.append(even_face, 0.0)) + (lower - np.insert(even_face, 0, 0.0)))
    p = (lat * nlon + lon).ravel()
    q = (lat * nlon + (lon + half) % nlon).ravel()
    rows.append(p)
    cols.append(q)
    data.append(np.repeat(ring, nlon))

    size = grid.size
    return sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))


def build_lb(grid: SphereGrid) -> DiscreteLB:
    """Discrete Laplace-Beltrami operator on the grid"""
    if min(grid.resolution) < SPECTRUM["min_resolution"]:
        raise ResolutionTooLow(
            f"grid {grid.label()} is below {SPECTRUM['min_resolution']} points per dimension"
        )
    if grid.n == 3 and grid.nlon % 2:
        raise ConfigInvalid(f"grid {grid.label()} needs an even longitude count for the polar coupling")
    stiffness = _circle_stiffness(grid) if grid.n == 2 else _sphere_stiffness(grid)
    weights = grid.cell_areas()
    off_diagonal = (sp.diags(1.0 / weights) @ stiffness.tocsr()).tocsr()
    row_sums = off_diagonal @ np.ones(grid.size)
    logger.debug("built Laplace-Beltrami on %s grid (%d points, nnz=%d)", grid.label(), grid.size, off_diagonal.nnz)
    return DiscreteLB(grid, off_diagonal, row_sums, weights)


def lowest_eigenvalues(lb: DiscreteLB, k: int) -> List[float]:
    """k smallest eigenvalues of -L, ascending, by dense symmetric eigensolve"""
    size = lb.grid.size
    if size > SPECTRUM["dense_cap"]:
        raise GridTooLargeForDense(f"grid of {size} points exceeds the dense cap {SPECTRUM['dense_cap']}")
    if k < 1 or k > size:
        raise ConfigInvalid(f"k must lie in 1..{size}, got {k}")
    b = -lb.symmetrized().toarray()
    b = 0.5 * (b + b.T)
    values = scipy.linalg.eigh(b, eigvals_only=True, subset_by_index=[0, k - 1])
    return [float(v) for v in values]


def predicted_eigenvalue(n: int, degree: float) -> float:
    """lambda = d (d + n - 2)"""
    return degree * (degree + n - 2)


def spectrum_summary(lb: DiscreteLB, k: int, rtol: float = SPECTRUM["cluster_rtol"]) -> Dict:
    """Eigenvalues, their clusters and the nearest l(l+n-2) for each cluster"""
    values = lowest_eigenvalues(lb, k)
    clusters = cluster_eigenvalues(values, rtol=rtol)
    n = lb.grid.n
    rows = []
    for record in clusters.to_dict("records"):
        ell = _nearest_degree(n, record["value"])
        target = predicted_eigenvalue(n, ell)
        rows.append({
            "value": record["value"],
            "multiplicity": int(record["multiplicity"]),
            "degree": ell,
            "predicted": target,
            "relative_error": abs(record["value"] - target) / target if target else abs(record["value"]),
        })
    return {"grid": lb.grid.label(), "n": n, "eigenvalues": values, "clusters": rows}


def _nearest_degree(n: int, value: float) -> int:
    # positive root of l^2 + (n-2) l - value = 0
    root = (-(n - 2) + np.sqrt((n - 2) ** 2 + 4.0 * max(value, 0.0))) / 2.0
    return int(round(root))


def profile_eigencheck(g, d: float, lb: Optional[DiscreteLB] = None) -> float:
    """||L g + d(d+n-2) g||_inf / ||g||_inf for a grid profile"""
    if lb is None:
        lb = build_lb(g.grid)
    elif lb.grid != g.grid:
        raise GridMismatch(f"profile on {g.grid.label()} but operator on {lb.grid.label()}")
    values = np.asarray(g.values, dtype=float)
    residual = lb.apply(values) + predicted_eigenvalue(lb.grid.n, d) * values
    scale = float(np.max(np.abs(values)))
    worst = float(np.max(np.abs(residual)))
    return worst / scale if scale > 0 else worst


def sphere_quadrature(n: int, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Points and weights (summing to 1) exact for polynomials up to the given degree on S^{n-1}"""
    nlon = degree + 1
    phi = 2.0 * np.pi * np.arange(nlon) / nlon
    if n == 2:
        points = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return points, np.full(nlon, 1.0 / nlon)
    if n != 3:
        raise DimensionMismatch(f"sphere quadrature is available for n = 2, 3 (got {n})")
    nodes, gauss_weights = np.polynomial.legendre.leggauss(degree // 2 + 1)
    z, angle = np.meshgrid(nodes, phi, indexing="ij")
    ring = np.sqrt(1.0 - z * z)
    points = np.stack([ring * np.cos(angle), ring * np.sin(angle), z], axis=-1).reshape(-1, 3)
    weights = np.repeat(gauss_weights / 2.0, nlon) / nlon
    return points, weights

"""
Test homogeneous extensions, their Hessians, the Laplacian split and the profile basis
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.errors import DimensionMismatch, GridMismatch, NotHomogeneous, NotUnitVector, OriginEvaluation, StencilOutOfRange
from core.homogeneous import (
    CoefProfile,
    GridProfile,
    HomogeneousFunction,
    PolynomialProfile,
    SolidProfile,
    build_profile_basis,
    euler_identity_residual,
    eval_extension,
    expand_profile,
    hessian_homogeneous,
    kelvin_element,
    laplace_split,
    radial_power_hessian,
    sample_profile,
)
from core.finite_diff import fd_hessian
from core.harmonic_basis import harmonic_dimension
from core.poly_core import Multinomial, SymMatrix, parse_polynomial, poly_eval_batch, poly_hessian_at
from core.spherical_spectrum import SphereGrid, sphere_quadrature


def poly_function(text, nvars=None):
    return HomogeneousFunction.from_polynomial(parse_polynomial(text, nvars=nvars))


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def test_eval_extension_examples():
    u = poly_function("x1^3 - 3*x1*x2^2")
    assert eval_extension(u, [2.0, 0.0]) == pytest.approx(8.0)

    theta = unit([0.3, -0.8])
    assert eval_extension(u, theta) == pytest.approx(theta[0] ** 3 - 3 * theta[0] * theta[1] ** 2)

    inverse_radius = HomogeneousFunction(3, -1.0, SolidProfile(Multinomial.constant(3, 1)))
    assert eval_extension(inverse_radius, [0.0, 0.0, 2.0]) == pytest.approx(0.5)
    print("✅ Homogeneous extension test passed")


def test_origin_is_rejected():
    u = poly_function("x1*x2")
    with pytest.raises(OriginEvaluation):
        eval_extension(u, [0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        eval_extension(u, [1.0, 0.0, 0.0])


def test_declared_degree_must_match_polynomial():
    with pytest.raises(NotHomogeneous):
        HomogeneousFunction(2, 2.0, PolynomialProfile(parse_polynomial("x1^3")))
    with pytest.raises(NotHomogeneous):
        HomogeneousFunction(2, 3.0, PolynomialProfile(parse_polynomial("x1^3 + x2")))
    loose = HomogeneousFunction(2, 2.0, PolynomialProfile(parse_polynomial("x1^3")), validate=False)
    assert loose.degree == 2.0


def test_hessian_matches_polynomial_hessian():
    rng = np.random.default_rng(4)
    for text in ("x1^3 - 3*x1*x2^2", "x1*x2*x3 + x3^3", "x1^4 - 6*x1^2*x2^2 + x2^4"):
        p = parse_polynomial(text)
        u = HomogeneousFunction.from_polynomial(p)
        for x in rng.uniform(-2.0, 2.0, size=(20, p.nvars)):
            expected = poly_hessian_at(p, x).array
            got = hessian_homogeneous(u, x).array
            assert np.linalg.norm(got - expected) <= 1e-8 * (1.0 + np.linalg.norm(expected))


def test_degree_two_hessian_is_radially_constant():
    u = poly_function("x1^2 - 3*x1*x2 + 2*x2^2")
    x = np.array([0.6, -0.2])
    assert hessian_homogeneous(u, x) == hessian_homogeneous(u, 5.0 * x)


def test_inverse_radius_hessian():
    u = HomogeneousFunction(3, -1.0, SolidProfile(Multinomial.constant(3, 1)))
    assert np.allclose(hessian_homogeneous(u, [1.0, 0.0, 0.0]).array, np.diag([2.0, -1.0, -1.0]), atol=1e-14)


def test_radial_power_hessian_against_finite_differences():
    p = parse_polynomial("x1^2*x2 - 1/3*x2^3").to_float()
    x = np.array([[0.7, -1.1]])
    values, grads, hess = radial_power_hessian(-2.5, p, x)

    def f(z):
        r = np.linalg.norm(z)
        return r ** -2.5 * poly_eval_batch(p, z[None, :])[0]

    assert values[0] == pytest.approx(f(x[0]))
    assert np.allclose(hess[0], fd_hessian(f, x[0], 1e-4), rtol=1e-5, atol=1e-6)


def test_transform_applies_congruence():
    p = parse_polynomial("x1^2 - x2^2")
    s = SymMatrix.diag([1.0, 0.5])
    u = HomogeneousFunction.from_polynomial(p, transform=s)
    x = np.array([1.3, 0.4])
    assert eval_extension(u, x) == pytest.approx(1.3 ** 2 - 0.2 ** 2)
    assert np.allclose(hessian_homogeneous(u, x).array, np.diag([2.0, -0.5]))


def test_laplace_split_examples():
    rng = np.random.default_rng(8)
    harmonic = poly_function("x1^3 - 3*x1*x2^2", nvars=3)
    constant = HomogeneousFunction(3, 0.0, PolynomialProfile(Multinomial.constant(3, 1)))
    for _ in range(10):
        theta = unit(rng.standard_normal(3))
        split = laplace_split(harmonic, theta)
        assert split.lam == 12.0
        assert abs(split.total) < 1e-12
        assert split.spherical_term == pytest.approx(-12.0 * eval_extension(harmonic, theta), abs=1e-12)

        flat = laplace_split(constant, theta)
        assert flat.radial_term == 0.0
        assert flat.spherical_term == 0.0

    with pytest.raises(NotUnitVector):
        laplace_split(harmonic, [1.0, 1.0, 0.0])
    print("✅ Laplacian split test passed")


def test_laplace_split_on_grid_profile_uses_discrete_operator():
    grid = SphereGrid.latlon(48, 96)
    u = poly_function("x1^2 - x2^2", nvars=3)
    g = sample_profile(u, grid)
    sampled = HomogeneousFunction(3, 2.0, g)
    theta = unit([0.5, 0.2, 0.4])
    split = laplace_split(sampled, theta)
    exact = laplace_split(u, theta)
    assert split.spherical_term == pytest.approx(exact.spherical_term, abs=2e-2)


def test_euler_identity_examples():
    rng = np.random.default_rng(2)
    u = poly_function("x1*x2*x3 + x1^3")
    for x in rng.uniform(-2.0, 2.0, size=(10, 3)):
        assert euler_identity_residual(u, x) <= 1e-6

    constant = HomogeneousFunction(2, 0.0, PolynomialProfile(Multinomial.constant(2, 1)))
    assert euler_identity_residual(constant, [0.3, 1.2]) == 0.0

    mismatched = HomogeneousFunction(3, 2.0, PolynomialProfile(parse_polynomial("x1^3", nvars=3)), validate=False)
    assert euler_identity_residual(mismatched, [1.0, 0.0, 0.0]) == pytest.approx(1.0, abs=1e-6)


def test_grid_profile_interpolation():
    grid = SphereGrid.circle(64)
    g = GridProfile.from_function(grid, lambda pts: pts[:, 0] ** 2 - pts[:, 1] ** 2)
    angles = np.linspace(0.05, 2 * np.pi, 37)
    points = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    assert np.max(np.abs(g.evaluate(points) - np.cos(2 * angles))) < 1e-4

    sphere = SphereGrid.latlon(24, 48)
    zonal = GridProfile.from_function(sphere, lambda pts: pts[:, 2])
    with pytest.raises(StencilOutOfRange):
        zonal.evaluate(np.array([[0.0, 0.0, 1.0]]))
    with pytest.raises(GridMismatch):
        GridProfile(grid, np.zeros(10))


def test_grid_profile_function_matches_polynomial():
    grid = SphereGrid.latlon(48, 96)
    u = poly_function("x1^2 - x2^2", nvars=3)
    sampled = HomogeneousFunction(3, 2.0, sample_profile(u, grid))
    x = np.array([0.9, 0.3, -0.6])
    assert eval_extension(sampled, x) == pytest.approx(eval_extension(u, x), abs=1e-4)
    assert np.allclose(hessian_homogeneous(sampled, x).array, hessian_homogeneous(u, x).array, atol=5e-2)


@pytest.mark.parametrize("n, lmax", [(2, 4), (3, 3)])
def test_profile_basis_is_orthonormal(n, lmax):
    basis = build_profile_basis(n, lmax)
    assert basis.size == sum(harmonic_dimension(n, ell) for ell in range(lmax + 1))
    points, weights = sphere_quadrature(n, 2 * lmax)
    values = basis.evaluate(points)
    gram = values.T @ (weights[:, None] * values)
    assert np.allclose(gram, np.eye(basis.size), atol=1e-10)
    assert list(basis.block(0)) == [0]


def test_expand_profile_recovers_harmonic_block():
    basis = build_profile_basis(2, 4)
    u = poly_function("x1^3 - 3*x1*x2^2")
    coefficients = expand_profile(u, basis)
    outside = np.asarray(basis.degrees) != 3
    assert np.max(np.abs(coefficients[outside])) < 1e-12
    # mean of cos^2(3 phi) over the circle is 1/2
    assert np.linalg.norm(coefficients) == pytest.approx(np.sqrt(0.5))

    rebuilt = HomogeneousFunction(2, 3.0, CoefProfile(basis, coefficients))
    x = np.array([1.1, -0.4])
    assert eval_extension(rebuilt, x) == pytest.approx(eval_extension(u, x))
    assert np.allclose(hessian_homogeneous(rebuilt, x).array, hessian_homogeneous(u, x).array)


def test_kelvin_element_is_harmonic():
    h = parse_polynomial("x1", nvars=3)
    u = kelvin_element(h, 3)
    assert u.degree == -2.0
    x = np.array([0.4, 1.0, -0.3])
    assert eval_extension(u, x) == pytest.approx(0.4 / np.linalg.norm(x) ** 3)
    assert abs(hessian_homogeneous(u, x).trace()) < 1e-12

"""
Test polynomial arithmetic, the text format, symmetric matrices and the Jacobi eigensolver
"""

import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.errors import DimensionMismatch, NotSPD, NotSymmetric, ParseError
from core.finite_diff import fd_gradient
from core.poly_core import (
    Multinomial,
    SymMatrix,
    eig_sym,
    format_polynomial,
    monomials_of_degree,
    parse_polynomial,
    poly_compose_linear,
    poly_eval,
    poly_eval_batch,
    poly_gradient_at,
    poly_hessian_at,
    poly_hessian_batch,
    poly_laplacian,
    poly_operator_trace,
    spd_inv_sqrt,
    spd_sqrt,
)


def P(text, nvars=None):
    return parse_polynomial(text, nvars=nvars)


def test_monomials_are_graded_lex():
    assert monomials_of_degree(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(monomials_of_degree(3, 3)) == 10
    assert monomials_of_degree(3, 0) == [(0, 0, 0)]
    assert monomials_of_degree(2, -1) == []
    print("✅ Monomial ordering test passed")


def test_parse_and_format():
    p = P("x1^3 - 3*x1*x2^2")
    assert p.nvars == 2
    assert p.exact
    assert p.coefficient((1, 2)) == -3
    assert str(p) == "x1^3 - 3*x1*x2^2"

    q = P("x1^2*x2 - 1/3*x2^3")
    assert q.coefficient((0, 3)) == Fraction(-1, 3)
    assert format_polynomial(q) == "x1^2*x2 - 1/3*x2^3"

    f = P("0.5*x1 + 2")
    assert not f.exact
    assert f.coefficient((1,)) == 0.5
    assert str(f) == "0.5*x1 + 2.0"

    assert str(P("0", nvars=3)) == "0"
    assert P("x2", nvars=3).nvars == 3
    assert P("-x1 + x1").is_zero()
    print("✅ Polynomial text format test passed")


@pytest.mark.parametrize("text, position", [
    ("", 0),
    ("x1 +", 4),
    ("x1 ^2", 3),
    ("x0", 0),
    ("2*?", 2),
])
def test_parse_errors_carry_position(text, position):
    with pytest.raises(ParseError) as info:
        parse_polynomial(text)
    assert info.value.position == position


@pytest.mark.parametrize("text, canonical", [
    ("3x1^2", "3*x1^2"),
    ("x1x2", "x1*x2"),
    ("2*x1x2^2", "2*x1*x2^2"),
    ("x1 x2 - 1/2x3", "x1*x2 - 1/2*x3"),
])
def test_juxtaposed_factors_multiply(text, canonical):
    p = P(text)
    assert format_polynomial(p) == canonical
    assert P(canonical) == p
    assert P(format_polynomial(p)) == p


def test_parse_rejects_variable_beyond_nvars():
    with pytest.raises(ParseError):
        parse_polynomial("x3", nvars=2)


def test_arithmetic_and_derivatives():
    x1 = Multinomial.variable(2, 0)
    x2 = Multinomial.variable(2, 1)
    p = (x1 + x2) ** 2
    assert p == P("x1^2 + 2*x1*x2 + x2^2")
    assert p - P("x1^2 + x2^2") == 2 * x1 * x2
    assert p.degree == 2
    assert p.is_homogeneous(2)
    assert not (p + 1).is_homogeneous()
    assert p.derivative(0) == 2 * x1 + 2 * x2
    assert (x1 * 0.5).exact is False
    assert hash(P("x1*x2")) == hash(x1 * x2)

    with pytest.raises(DimensionMismatch):
        _ = x1 + Multinomial.variable(3, 0)
    print("✅ Arithmetic test passed")


def test_chop_and_almost_equal():
    p = P("x1^2 + 1e-14*x1*x2")
    assert p.chop(1e-12) == P("x1^2", nvars=2).to_float()
    assert p.almost_equal(P("x1^2", nvars=2), 1e-12)


def test_poly_eval_examples():
    assert poly_eval(P("x1^2 + x2^2"), [3, 4]) == 25
    assert poly_eval(Multinomial(3), [1, 2, 3]) == 0
    assert poly_eval(P("x1*x2*x3"), [1, 2, 3]) == 6

    points = np.array([[3.0, 4.0], [1.0, -1.0]])
    assert np.allclose(poly_eval_batch(P("x1^2 + x2^2"), points), [25.0, 2.0])
    with pytest.raises(DimensionMismatch):
        poly_eval(P("x1*x2"), [1, 2, 3])


def test_poly_laplacian_examples():
    assert poly_laplacian(P("x1^2 + x2^2")) == Multinomial.constant(2, 4)
    assert poly_laplacian(P("x1^2 - x2^2")).is_zero()
    assert poly_laplacian(P("x1^3")) == P("6*x1")


def test_poly_hessian_examples():
    assert np.array_equal(poly_hessian_at(P("x1*x2"), [0.3, -2.0]).array, [[0, 1], [1, 0]])
    assert np.array_equal(poly_hessian_at(P("x1^2 + x2^2"), [5.0, 1.0]).array, 2 * np.eye(2))
    assert np.array_equal(poly_hessian_at(P("x1^3 - 3*x1*x2^2"), [1, 0]).array, [[6, 0], [0, -6]])
    assert np.allclose(poly_gradient_at(P("x1^3 - 3*x1*x2^2"), [1, 1]), [0.0, -6.0])

    rng = np.random.default_rng(3)
    points = rng.standard_normal((5, 3))
    p = P("x1*x2*x3 + x1^3")
    batch = poly_hessian_batch(p, points)
    for point, hess in zip(points, batch):
        assert np.allclose(hess, poly_hessian_at(p, point).array)
    print("✅ Hessian test passed")


def test_poly_compose_linear_examples():
    assert poly_compose_linear(P("x1^2", nvars=2), [[2, 0], [0, 2]]) == P("4*x1^2", nvars=2)
    assert poly_compose_linear(P("x1*x2"), [[1, 1], [0, 1]]) == P("x1*x2 + x2^2")

    angle = 0.7
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    rotated = poly_compose_linear(P("x1^2 + x2^2"), rotation)
    assert rotated.almost_equal(P("x1^2 + x2^2"), 1e-12)
    assert poly_compose_linear(P("x1*x2"), [[1, 1], [0, 1]]).exact


def test_poly_operator_trace():
    assert poly_operator_trace(P("x1^2 - x2^2"), [[1, 0], [0, 1]]).is_zero()
    assert poly_operator_trace(P("x1^2 - x2^2"), [[1, 0], [0, 4]]) == Multinomial.constant(2, -6)
    assert poly_operator_trace(P("x1*x2"), [[0, 1], [1, 0]]) == Multinomial.constant(2, 2)


def test_symmatrix_validation():
    m = SymMatrix([[1.0, 2.0], [2.0, 3.0]])
    assert m.upper() == (1.0, 2.0, 3.0)
    assert SymMatrix.from_upper(2, [1.0, 2.0, 3.0]) == m
    assert m.trace() == 4.0
    assert m.inner(SymMatrix.identity(2)) == 4.0
    assert (m - m) == SymMatrix.zeros(2)
    with pytest.raises(NotSymmetric):
        SymMatrix([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DimensionMismatch):
        SymMatrix([[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        m.array[0, 0] = 5.0


@pytest.mark.parametrize("entries, expected", [
    (np.eye(3), [1.0, 1.0, 1.0]),
    ([[2.0, 0.0], [0.0, -1.0]], [-1.0, 2.0]),
    ([[0.0, 1.0], [1.0, 0.0]], [-1.0, 1.0]),
])
def test_eig_sym_examples(entries, expected):
    decomposition = eig_sym(SymMatrix(entries))
    assert np.allclose(decomposition.values, expected, atol=1e-14)


def test_eig_sym_reconstructs_random_matrices():
    rng = np.random.default_rng(11)
    for n in (2, 3, 5):
        raw = rng.standard_normal((n, n))
        m = SymMatrix(raw + raw.T)
        decomposition = eig_sym(m)
        assert np.all(np.diff(decomposition.values) >= 0)
        assert decomposition.reconstruction_error(m) < 1e-10 * (1 + m.frobenius())
        assert decomposition.orthogonality_error() < 1e-12
        assert np.allclose(decomposition.values, np.linalg.eigvalsh(m.array))
    print("✅ Jacobi eigensolver test passed")


def test_spd_roots():
    assert np.allclose(spd_inv_sqrt(SymMatrix.identity(3)).array, np.eye(3))
    assert np.allclose(spd_inv_sqrt(SymMatrix.diag([4.0, 9.0])).array, np.diag([0.5, 1.0 / 3.0]))

    a = SymMatrix([[2.0, 0.5], [0.5, 1.0]])
    root = spd_sqrt(a)
    assert np.allclose(root.array @ root.array, a.array)
    inv_root = spd_inv_sqrt(a)
    assert np.allclose(inv_root.array @ a.array @ inv_root.array, np.eye(2))

    with pytest.raises(NotSPD):
        spd_inv_sqrt(SymMatrix([[1.0, 2.0], [2.0, 1.0]]))


def random_polynomial(rng, nvars, max_degree, exact=True):
    terms = {}
    for degree in range(max_degree + 1):
        for exponent in monomials_of_degree(nvars, degree):
            if rng.random() < 0.5:
                terms[exponent] = int(rng.integers(-3, 4))
    p = Multinomial(nvars, terms)
    return p if exact else p.to_float()


def rational_rotation(rng):
    """Rotation of R^3 with rational entries, from an integer quaternion"""
    a, b, c, d = (int(v) for v in rng.integers(-3, 4, size=4))
    norm = a * a + b * b + c * c + d * d
    if norm == 0:
        a, norm = 1, 1
    rows = [
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
    ]
    return [[Fraction(v, norm) for v in row] for row in rows]


def random_rotation(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def test_laplacian_commutes_with_rotations():
    rng = np.random.default_rng(21)
    for _ in range(20):
        p = random_polynomial(rng, 3, 4)
        rotation = rational_rotation(rng)
        rotated = poly_compose_linear(p, rotation)
        assert rotated.exact
        assert poly_laplacian(rotated) == poly_compose_linear(poly_laplacian(p), rotation)

    for n in (2, 3, 4):
        for _ in range(10):
            p = random_polynomial(rng, n, 5, exact=False)
            rotation = random_rotation(rng, n)
            lhs = poly_laplacian(poly_compose_linear(p, rotation))
            rhs = poly_compose_linear(poly_laplacian(p), rotation)
            assert lhs.almost_equal(rhs, 1e-9 * (1.0 + rhs.max_abs_coefficient()))
    print("✅ Rotation invariance test passed")


def test_hessian_matches_central_differences():
    rng = np.random.default_rng(22)
    h = 1e-5
    for _ in range(40):
        n = int(rng.integers(1, 4))
        p = random_polynomial(rng, n, int(rng.integers(0, 6)))
        x = rng.uniform(-1.0, 1.0, size=n)
        columns = [fd_gradient(lambda y, i=i: poly_gradient_at(p, y)[i], x, h) for i in range(n)]
        assert np.allclose(poly_hessian_at(p, x).array, np.array(columns), atol=1e-6, rtol=0.0)


def test_eig_sym_on_many_random_matrices():
    rng = np.random.default_rng(23)
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        raw = rng.standard_normal((n, n)) * 10.0 ** rng.uniform(-3, 3)
        m = SymMatrix(raw + raw.T)
        decomposition = eig_sym(m)
        scale = 1.0 + m.frobenius()
        assert np.all(np.diff(decomposition.values) >= 0)
        assert decomposition.reconstruction_error(m) < 1e-10 * scale
        assert decomposition.orthogonality_error() < 1e-11
        assert np.allclose(decomposition.values, np.linalg.eigvalsh(m.array), rtol=0.0, atol=1e-10 * scale)

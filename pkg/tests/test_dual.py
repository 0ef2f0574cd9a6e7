import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tbaudit import dual as D

finite = st.floats(-3.0, 3.0, allow_nan=False)


@given(finite)
def test_scalar_derivative_of_elementary_functions(x):
    assert math.isclose(D.derivative(D.sin, x), math.cos(x), abs_tol=1e-12)
    assert math.isclose(D.derivative(D.exp, x), math.exp(x), rel_tol=1e-12)
    assert math.isclose(D.derivative(lambda t: t * t * t, x), 3 * x * x, abs_tol=1e-12)


@given(st.floats(0.1, 5.0))
def test_log_sqrt_and_division(x):
    assert math.isclose(D.derivative(D.log, x), 1 / x, rel_tol=1e-12)
    assert math.isclose(D.derivative(D.sqrt, x), 0.5 / math.sqrt(x), rel_tol=1e-12)
    assert math.isclose(D.derivative(lambda t: 1.0 / t, x), -1 / (x * x), rel_tol=1e-12)


@given(finite)
def test_nested_second_derivative(x):
    # d²/dx² sin(x) x² = 2 sin x + 4 x cos x − x² sin x
    def f(t):
        return D.sin(t) * t * t

    second = D.derivative(lambda t: D.jvp(f, t, 1.0), x)
    expect = 2 * math.sin(x) + 4 * x * math.cos(x) - x * x * math.sin(x)
    assert math.isclose(second, expect, abs_tol=1e-10)


def test_nested_tags_do_not_confuse_perturbations():
    # d/dx [x * d/dy (x + y)] = 1, the classic perturbation-confusion check
    def inner(x):
        return x * D.jvp(lambda y: x + y, np.asarray(1.0), 1.0)

    assert D.derivative(inner, 2.0) == 1.0


@settings(max_examples=25)
@given(st.lists(finite, min_size=3, max_size=3))
def test_jacobian_of_matrix_vector_map_matches_matrix(v):
    A = np.array([[1.0, 2.0, 0.5], [0.0, -1.0, 3.0]])
    J = D.primal(D.jacobian(lambda x: D.einsum("ij,j->i", A, x), np.asarray(v)))
    np.testing.assert_allclose(J, A.T, atol=1e-14)  # derivative index first


def test_inverse_derivative_matches_formula():
    A0 = np.array([[2.0, 0.3], [0.1, 1.5]])
    dA = np.array([[0.2, -0.1], [0.4, 0.0]])
    got = D.primal(D.jvp(lambda t: D.inv(A0 + t * dA), np.asarray(0.0), 1.0))
    Ai = np.linalg.inv(A0)
    np.testing.assert_allclose(got, -Ai @ dA @ Ai, atol=1e-14)


def test_jacobian_agrees_with_finite_differences(rng):
    def f(x):
        return D.stack([D.sin(x[0]) * x[1], D.exp(x[1]) / (1.0 + x[0] * x[0])])

    x = rng.uniform(-1, 1, 2)
    J = D.primal(D.jacobian(f, x))
    h = 1e-6
    fd = np.stack([(D.primal(f(x + h * e)) - D.primal(f(x - h * e))) / (2 * h) for e in np.eye(2)])
    np.testing.assert_allclose(J, fd, atol=1e-8)

import numpy as np
import pytest

from conftest import points
from tbaudit import dual as D
from tbaudit.base import builtin_metric, christoffel, covariant_derivative_vector
from tbaudit.bundle import (
    BundlePoint,
    cg_metric,
    cg_metric_at,
    cg_metric_inverse_at,
    coordinate_metric,
    frame_inverse,
    frame_matrix,
    lift_components,
    lift_vector,
    structure_coefficients,
    structure_coefficients_closed_form,
)
from tbaudit.fields import named_field


def test_frame_matrix_inverse_and_shape(core_metric):
    m = core_metric
    n = m.dim
    for p in points(m, 4):
        A = D.primal(frame_matrix(m, p))
        B = D.primal(frame_inverse(m, p))
        np.testing.assert_allclose(A @ B, np.eye(2 * n), atol=1e-13)
        gam = D.primal(christoffel(m, p.x))
        # X_(i) = ∂_i − y^s Γ^h_si ∂_h̄
        np.testing.assert_allclose(A[n:, :n], -np.einsum("s,hsi->hi", p.y, gam), atol=1e-13)
        np.testing.assert_array_equal(A[:n, :n], np.eye(n))


def test_structure_coefficients_match_closed_form(core_metric):
    m = core_metric
    for p in points(m, 4):
        num = D.primal(structure_coefficients(m, p))
        closed = D.primal(structure_coefficients_closed_form(m, p))
        np.testing.assert_allclose(num, closed, atol=1e-12)
        np.testing.assert_allclose(num, -num.swapaxes(1, 2), atol=1e-13)


def test_cg_metric_blocks(core_metric):
    m = core_metric
    for p in points(m, 4):
        blocks = cg_metric_at(m, p)
        g, y = p.g, p.y
        yl = g @ y
        alpha = 1 + y @ g @ y
        np.testing.assert_allclose(blocks.hh, g)
        np.testing.assert_allclose(blocks.vv, (g + np.outer(yl, yl)) / alpha, atol=1e-14)
        inv = cg_metric_inverse_at(m, p)
        np.testing.assert_allclose(blocks.assemble() @ inv.assemble(), np.eye(2 * m.dim), atol=1e-12)
        assert np.all(np.linalg.eigvalsh(blocks.assemble()) > 0)


def test_coordinate_metric_against_hand_assembly(core_metric):
    m = core_metric
    n = m.dim
    for p in points(m, 3):
        g = p.g
        gam = D.primal(christoffel(m, p.x))
        L = np.einsum("s,hsi->hi", p.y, gam)
        yl = g @ p.y
        H = (g + np.outer(yl, yl)) / (1 + yl @ p.y)
        expect = np.block([[g + L.T @ H @ L, L.T @ H], [H @ L, H]])
        np.testing.assert_allclose(D.primal(coordinate_metric(m, p)), expect, atol=1e-12)
        assert expect.shape == (2 * n, 2 * n)


def test_lift_components_by_kind():
    m = builtin_metric("sphere", [1.0])
    fld = named_field("linear", m)
    p = BundlePoint.at(m, [1.0, 0.3], [0.4, -0.7])
    X = D.primal(fld(p.x))
    nab = D.primal(covariant_derivative_vector(m, fld, p.x))
    v = lift_vector(m, p, fld, "vertical")
    h = lift_vector(m, p, fld, "horizontal")
    c = lift_vector(m, p, fld, "complete")
    np.testing.assert_allclose(v.components, np.r_[0, 0, X])
    np.testing.assert_allclose(h.components, np.r_[X, 0, 0])
    np.testing.assert_allclose(c.components, np.r_[X, p.y @ nab], atol=1e-14)
    with pytest.raises(ValueError):
        lift_components(m, fld, "diagonal")


def test_bundle_point_shape_check():
    m = builtin_metric("euclidean", [2])
    with pytest.raises(ValueError):
        BundlePoint.at(m, [0.0, 0.0], [1.0])


def test_adapted_frame_metric_is_pullback_of_coordinate_metric(core_metric):
    m = core_metric
    for p in points(m, 3):
        A = D.primal(frame_matrix(m, p))
        Gc = D.primal(coordinate_metric(m, p))
        np.testing.assert_allclose(A.T @ Gc @ A, D.primal(cg_metric(m, p)), atol=1e-12)

import math

import numpy as np
import pytest

from conftest import points
from tbaudit import dual as D
from tbaudit.base import builtin_metric, riemann
from tbaudit.bundle import BundlePoint, cg_metric, frame_inverse, frame_matrix
from tbaudit.claims import Context
from tbaudit.curvature import (
    antisymmetry_residual,
    bundle_curvature,
    bundle_curvature_eq17,
    curvature_claims,
    flatness_audit,
    pair_symmetry_residual,
    sectional_curvature,
)
from tbaudit.geodesic import BaseJets, coordinate_connection_jet


def coordinate_curvature_fd(m, p, h=1e-5):
    """Adapted-frame curvature from finite differences of induced-coordinate Christoffels."""
    n = m.dim
    z = np.concatenate([p.x, p.y])

    def gam(w):
        return coordinate_connection_jet(BaseJets.at(m, w[:n]), w[n:])

    G0 = gam(z)
    dG = np.stack([(gam(z + h * e) - gam(z - h * e)) / (2 * h) for e in np.eye(2 * n)])  # [a, d, b, c]
    half = dG.transpose(1, 0, 2, 3) + np.einsum("dae,ebc->dabc", G0, G0)
    Rc = half - half.swapaxes(1, 2)
    A = D.primal(frame_matrix(m, p))
    B = D.primal(frame_inverse(m, p))
    return np.einsum("ed,dabc,ai,bj,ck->eijk", B, Rc, A, A, A)


@pytest.mark.parametrize("name,params", [("sphere", [1.0]), ("hyperbolic_half_plane", []), ("euclidean", [2])])
def test_oracle_curvature_matches_coordinate_computation(name, params):
    m = builtin_metric(name, params)
    for p in points(m, 2, y_max=1.5):
        oracle = D.primal(bundle_curvature(m, p))
        np.testing.assert_allclose(oracle, coordinate_curvature_fd(m, p), atol=1e-6)


@pytest.mark.parametrize("rho", [0.0, 0.5, 1.0, 2.0])
def test_vertical_plane_curvature_over_flat_base(rho):
    m = builtin_metric("euclidean", [2])
    p = BundlePoint.at(m, [0.3, -0.2], [rho, 0.0])
    k = sectional_curvature(m, p, [0, 0, 1, 0], [0, 0, 0, 1])
    assert math.isclose(k, 3.0 / (1 + rho**2) ** 2, rel_tol=1e-9)


def test_table_identities(core_metric):
    m = core_metric
    for p in points(m, 4):
        table = bundle_curvature_eq17(m, p).values
        G = D.primal(cg_metric(m, p))
        assert antisymmetry_residual(table) <= 1e-10
        assert pair_symmetry_residual(G, table) <= 1e-8
        bianchi = table + table.transpose(0, 2, 3, 1) + table.transpose(0, 3, 1, 2)
        assert np.abs(bianchi).max() <= 1e-10


def test_horizontal_block_on_zero_section_is_base_curvature():
    m = builtin_metric("sphere", [1.0])
    for x in ([0.7, 0.1], [1.9, -2.0]):
        p = BundlePoint.at(m, x, [0.0, 0.0])
        table = bundle_curvature_eq17(m, p).values
        np.testing.assert_allclose(table[:2, :2, :2, :2], D.primal(riemann(m, p.x)), atol=1e-8)


def test_curvature_from_corrected_connection_matches_oracle(core_metric):
    m = core_metric
    for p in points(m, 2):
        oracle = D.primal(bundle_curvature(m, p))
        np.testing.assert_allclose(D.primal(bundle_curvature(m, p, "corrected")), oracle, atol=1e-9)


def test_mixed_block_on_zero_section():
    # documents the hvh_v discrepancy: at y = 0 the oracle is ½ R^h_jki
    m = builtin_metric("sphere", [1.0])
    p = BundlePoint.at(m, [1.0, 0.4], [0.0, 0.0])
    table = bundle_curvature_eq17(m, p).values
    R = D.primal(riemann(m, p.x))
    np.testing.assert_allclose(table[2:, :2, 2:, :2], 0.5 * R.transpose(0, 1, 3, 2), atol=1e-10)
    # and the vertical-vertical-horizontal block carries R itself
    np.testing.assert_allclose(table[:2, 2:, 2:, :2], R, atol=1e-10)


def test_flatness_only_for_one_dimensional_flat_base():
    m1 = builtin_metric("euclidean", [1])
    rec = flatness_audit(m1, points(m1, 5))
    assert rec.base_flat and rec.bundle_flat and rec.consistent
    m2 = builtin_metric("flat_torus", [2])
    rec = flatness_audit(m2, points(m2, 5))
    assert rec.base_flat and not rec.bundle_flat and not rec.consistent


def test_claim_ids_and_degenerate_plane():
    ids = [c.id for c in curvature_claims()]
    assert ids[0] == "eq17.closed_form" and len(ids) == len(set(ids)) == 10
    m = builtin_metric("euclidean", [2])
    with pytest.raises(ValueError):
        sectional_curvature(m, points(m, 1)[0], [1, 0, 0, 0], [2, 0, 0, 0])


def test_zero_blocks_hold_where_published(core_metric):
    m = core_metric
    by_id = {c.id: c for c in curvature_claims()}
    for p in points(m, 3):
        c = Context(m, p)
        for ident in ("eq18.vvh_zero", "eq18.hvv_zero", "eq18.hhh_v", "eq18.hvh_h"):
            assert by_id[ident].residual(c) <= 1e-8, ident

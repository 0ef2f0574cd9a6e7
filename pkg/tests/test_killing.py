import numpy as np
import pytest

from conftest import points
from tbaudit import dual as D
from tbaudit.base import builtin_metric
from tbaudit.bundle import BundlePoint, coordinate_metric, frame_matrix, lift_components
from tbaudit.claims import Context, blocks
from tbaudit.fields import named_field
from tbaudit.killing import (
    complete_lie_blocks,
    horizontal_lie_blocks,
    killing_classify,
    lie_derivative_closed_form,
    lie_derivative_oracle_at,
)


def lie_fd(m, p, kind, fld, h=1e-5):
    """Adapted-frame ``L_V g`` from central differences in induced coordinates."""
    n = m.dim
    comps = lift_components(m, fld, kind)

    def at(z):
        q = BundlePoint.at(m, z[:n], z[n:])
        G = D.primal(coordinate_metric(m, q))
        V = D.primal(frame_matrix(m, q)) @ D.primal(comps(q))
        return G, V

    z = np.concatenate([p.x, p.y])
    G, V = at(z)
    dG, dV = [], []
    for e in np.eye(2 * n):
        (Gp, Vp), (Gm, Vm) = at(z + h * e), at(z - h * e)
        dG.append((Gp - Gm) / (2 * h))
        dV.append((Vp - Vm) / (2 * h))
    dG, dV = np.stack(dG), np.stack(dV)  # [c, a, b], [a, c]
    L = np.einsum("c,cab->ab", V, dG) + dV @ G + (dV @ G).T
    A = D.primal(frame_matrix(m, p))
    return A.T @ L @ A


@pytest.mark.parametrize("kind", ["complete", "horizontal", "vertical"])
@pytest.mark.parametrize("name,params", [("sphere", [1.0]), ("hyperbolic_half_plane", []), ("euclidean", [2])])
def test_lie_oracle_matches_finite_differences(name, params, kind):
    m = builtin_metric(name, params)
    fld = named_field("linear", m)
    for p in points(m, 2):
        np.testing.assert_allclose(lie_derivative_oracle_at(m, p, lift_components(m, fld, kind)),
                                   lie_fd(m, p, kind, fld), atol=1e-7)


def test_translation_lifts_are_killing():
    m = builtin_metric("euclidean", [2])
    fld = named_field("constant", m)
    for p in points(m, 6):
        c = Context(m, p, fld)
        assert np.abs(c.lie("complete")).max() <= 1e-12
        assert np.abs(c.lie("horizontal")).max() <= 1e-12
        # a constant field on a flat base: every published block vanishes too
        for blk in complete_lie_blocks(c).values():
            assert np.abs(blk).max() <= 1e-12


def test_complete_lift_of_rotation_is_killing_but_horizontal_is_not():
    m = builtin_metric("sphere", [1.0])
    rec = killing_classify(m, points(m, 6), named_field("killing", m))
    assert rec.base_killing and not rec.cov_deriv_zero
    assert rec.complete_lift_killing and rec.max_complete_lie <= 1e-7
    assert not rec.horizontal_lift_killing
    assert not rec.prop3a_consistent
    assert rec.prop3b_consistent
    assert rec.max_printed_complete_lie > 0.1


def test_horizontal_mixed_blocks_have_opposite_curvature_sign():
    # recorded discrepancy: the oracle equals the published hv/vh blocks with
    # the curvature term negated
    m = builtin_metric("sphere", [1.0])
    fld = named_field("killing", m)
    for p in points(m, 4):
        c = Context(m, p, fld)
        oracle = blocks(c.lie("horizontal"), 2)
        printed = horizontal_lie_blocks(c)
        for blk in ("hv", "vh"):
            np.testing.assert_allclose(oracle[blk], -printed[blk], atol=1e-10)
        for blk in ("hh", "vv"):
            np.testing.assert_allclose(oracle[blk], printed[blk], atol=1e-10)


def test_one_dimensional_vertical_block():
    # n = 1: the oracle vertical block is 2 X' while the published one is 0
    m = builtin_metric("euclidean", [1])
    fld = named_field("linear", m)
    p = BundlePoint.at(m, [0.3], [1.2])
    c = Context(m, p, fld)
    xp = c.nabX[0, 0]
    assert abs(c.lie("complete")[1, 1] - 2 * xp) < 1e-12
    assert abs(complete_lie_blocks(c)["vv"][0, 0]) < 1e-12


def test_closed_form_assembly_and_kind_check():
    m = builtin_metric("sphere", [1.0])
    fld = named_field("killing", m)
    p = points(m, 1)[0]
    assert lie_derivative_closed_form(m, p, fld, "horizontal").shape == (4, 4)
    with pytest.raises(ValueError):
        lie_derivative_closed_form(m, p, fld, "vertical")

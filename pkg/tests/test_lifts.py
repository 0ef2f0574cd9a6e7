import numpy as np
import pytest

from conftest import points
from tbaudit import dual as D
from tbaudit.base import builtin_metric
from tbaudit.bundle import (
    BundlePoint,
    LIFT_KINDS,
    covector_lift_components,
    frame_inverse,
    frame_matrix,
    lift_covector,
    lower_lift,
)
from tbaudit.claims import PASS, Context
from tbaudit.fields import fields_for, named_field
from tbaudit.lifts import (
    audit_claims,
    closedness_check,
    covector_lift_claims,
    parallel_lift_check,
    registry,
)


def test_registry_ids_are_unique():
    ids = [c.id for c in registry() + covector_lift_claims()]
    assert len(ids) == len(set(ids)) == 40


@pytest.mark.parametrize("kind", LIFT_KINDS)
def test_lowered_lift_equals_covector_lift(core_metric, kind):
    m = core_metric
    for fld in fields_for(m):
        for p in points(m, 5):
            if not fld.defined_at(p.x):
                continue
            got = lower_lift(m, p, fld, kind)
            want = lift_covector(m, p, fld, kind).components
            np.testing.assert_allclose(got, want, atol=1e-12)


def _exterior_derivative_fd(m, p, kind, fld, h=1e-6):
    """``dω(X_β, X_γ)`` from central differences of coordinate components."""
    n = m.dim
    comps = covector_lift_components(m, fld, kind)

    def coord(z):
        q = BundlePoint.at(m, z[:n], z[n:])
        return D.primal(frame_inverse(m, q)).T @ D.primal(comps(q))

    z = np.concatenate([p.x, p.y])
    J = np.stack([(coord(z + h * e) - coord(z - h * e)) / (2 * h) for e in np.eye(2 * n)])  # [a, b]
    d = J - J.T
    A = D.primal(frame_matrix(m, p))
    return A.T @ d @ A


@pytest.mark.parametrize("kind", LIFT_KINDS)
def test_rotation_oracle_agrees_with_exterior_derivative(kind):
    # the rotation is connection independent, so this checks the oracle
    # connection without using it
    for name, params in [("sphere", [1.0]), ("hyperbolic_half_plane", [])]:
        m = builtin_metric(name, params)
        fld = named_field("linear", m)
        for p in points(m, 3):
            rot = Context(m, p, fld).rotation_colift(kind)
            np.testing.assert_allclose(rot, _exterior_derivative_fd(m, p, kind, fld), atol=2e-7)


def test_parallel_field_has_parallel_lifts():
    m = builtin_metric("flat_torus", [2])
    rec = parallel_lift_check(m, points(m, 10), named_field("constant", m))
    assert rec.base_parallel and rec.complete_parallel and rec.horizontal_parallel
    assert rec.equivalence_holds
    assert max(rec.max_complete, rec.max_horizontal) <= 1e-10


def test_rotation_field_on_sphere_is_not_parallel():
    m = builtin_metric("sphere", [1.0])
    rec = parallel_lift_check(m, points(m, 10), named_field("killing", m))
    assert not rec.base_parallel
    assert rec.equivalence_holds
    assert max(rec.max_complete, rec.max_horizontal) >= 0.1


def test_closed_gradient_with_flat_hessian_has_non_closed_complete_lift():
    # counterexample recorded in the expected-verdict ledger for prop2
    m = builtin_metric("euclidean", [2])
    rec = closedness_check(m, points(m, 6), named_field("gradient", m))
    assert rec.base_closed and rec.second_cov_deriv_zero
    assert not rec.complete_lift_closed
    assert not rec.implication_holds
    assert rec.horizontal_equivalence_holds


def test_one_dimensional_base_passes_most_lift_claims():
    m = builtin_metric("euclidean", [1])
    results = audit_claims(m, points(m, 6), fields_for(m))
    failing = {r.id for r in results if r.verdict != PASS}
    assert failing == {"eq13.B", "eq13.C"}

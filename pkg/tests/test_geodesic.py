import numpy as np
import pytest

from tbaudit.base import builtin_metric
from tbaudit.bundle import BundlePoint
from tbaudit.geodesic import (
    BaseJets,
    GeodesicState,
    coordinate_connection,
    coordinate_connection_jet,
    energy,
    geodesic_from,
    geodesic_integrate,
)


@pytest.mark.parametrize("name,params", [("sphere", [1.0]), ("hyperbolic_half_plane", []), ("euclidean", [3])])
def test_jet_connection_equals_koszul_transform(name, params, rng):
    m = builtin_metric(name, params)
    lo, hi = map(np.asarray, m.box)
    x = rng.uniform(lo, hi)
    y = rng.uniform(-1.5, 1.5, m.dim)
    a = coordinate_connection(m, BundlePoint.at(m, x, y))
    b = coordinate_connection_jet(BaseJets.at(m, x), y)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_flat_one_dimensional_geodesic_is_a_line():
    m = builtin_metric("euclidean", [1])
    start = geodesic_from(m, [0.2], [-0.4], [1.0, 0.7])
    traj = geodesic_integrate(m, start, 1e-3, 1000)
    t = np.asarray(traj.times)
    line = start.q + np.outer(t, start.v)
    assert np.abs(traj.q - line).max() <= 1e-12
    assert traj.complete and traj.energy_drift() <= 1e-14


def _endpoint(m, start, dt, total):
    return geodesic_integrate(m, start, dt, int(round(total / dt))).q[-1]


def test_rk4_is_fourth_order_on_sphere():
    m = builtin_metric("sphere", [1.0])
    start = geodesic_from(m, [1.2, 0.1], [0.3, -0.2], [0.4, 0.3, -0.5, 0.6])
    ref = _endpoint(m, start, 0.0125, 1.0)
    e1 = np.abs(_endpoint(m, start, 0.2, 1.0) - ref).max()
    e2 = np.abs(_endpoint(m, start, 0.1, 1.0) - ref).max()
    assert 10 < e1 / e2 < 24  # 2⁴ = 16


def test_energy_conserved_on_sphere():
    m = builtin_metric("sphere", [1.0])
    start = geodesic_from(m, [1.2, 0.1], [0.3, -0.2], [0.4, 0.3, -0.5, 0.6])
    traj = geodesic_integrate(m, start, 1e-2, 300)
    assert traj.complete
    assert traj.energy_drift() <= 1e-8
    assert abs(traj.energies[0] - energy(m, start.q, start.v)) < 1e-13


def test_methods_agree_along_trajectory():
    m = builtin_metric("hyperbolic_half_plane")
    start = geodesic_from(m, [0.0, 1.0], [0.5, 0.1], [0.3, 0.2, -0.1, 0.4])
    a = geodesic_integrate(m, start, 0.05, 5, connection="jet")
    b = geodesic_integrate(m, start, 0.05, 5, connection="koszul")
    np.testing.assert_allclose(a.q, b.q, atol=1e-12)


def test_leaving_the_chart_stops_integration():
    m = builtin_metric("hyperbolic_half_plane")
    # straight down in the y coordinate of the chart with growing speed
    start = geodesic_from(m, [0.0, 0.05], [0.0, 0.0], [0.0, -1.0, 0.0, 0.0])
    traj = geodesic_integrate(m, start, 0.05, 200)
    assert not traj.complete
    assert traj.exit_index is not None and len(traj.times) == traj.exit_index


def test_csv_layout():
    m = builtin_metric("euclidean", [2])
    traj = geodesic_integrate(m, geodesic_from(m, [0, 0], [0, 0], [1, 0, 0, 1]), 0.5, 2)
    lines = traj.to_csv().strip().splitlines()
    assert lines[0] == "t,x1,x2,y1,y2,v1,v2,v3,v4,energy"
    assert len(lines) == 4
    assert [float(v) for v in lines[-1].split(",")][:5] == [1.0, 1.0, 0.0, 0.0, 1.0]


def test_argument_validation():
    m = builtin_metric("euclidean", [1])
    start = GeodesicState(np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        geodesic_integrate(m, start, 0.0, 3)
    with pytest.raises(ValueError):
        geodesic_integrate(m, start, 0.1, -1)
    with pytest.raises(ValueError):
        geodesic_integrate(m, start, 0.1, 3, connection="euler")
    with pytest.raises(ValueError):
        geodesic_integrate(m, GeodesicState(np.zeros(3), np.ones(3)), 0.1, 3)

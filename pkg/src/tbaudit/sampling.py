"""Seeded sampling of bundle points."""

from __future__ import annotations

import numpy as np

from . import dual as D
from .base import ChartedMetric
from .bundle import BundlePoint

DEFAULT_Y_MAX = 3.0


def sample_base_points(m: ChartedMetric, count: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = (np.asarray(b, dtype=float) for b in m.box)
    pts = []
    while len(pts) < count:
        x = rng.uniform(lo, hi)
        if m.contains(x):
            pts.append(x)
    return np.array(pts).reshape(count, m.dim)


def sample_fiber(g: np.ndarray, y_max: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the g-ball ``{y : g(y, y) ≤ y_max²}``."""
    n = g.shape[0]
    u = rng.standard_normal(n)
    u *= y_max * rng.uniform() ** (1.0 / n) / np.linalg.norm(u)
    L = np.linalg.cholesky(g)
    return np.linalg.solve(L.T, u)


def sample_bundle_points(
    m: ChartedMetric, count: int, seed: int, y_max: float = DEFAULT_Y_MAX
) -> list[BundlePoint]:
    rng = np.random.default_rng(seed)
    out = []
    for x in sample_base_points(m, count, rng):
        g = D.primal(m(x))
        out.append(BundlePoint.at(m, x, sample_fiber(g, y_max, rng)))
    return out

"""Riemannian calculus on a single chart of the base manifold.

Index layout used throughout the package:

* ``christoffel(m, x)[h, j, i]`` is the coefficient of ``∂_h`` in ``∇_{∂_j} ∂_i``.
* ``riemann(m, x)[h, j, i, k]`` is the ``∂_h`` component of ``R(∂_j, ∂_i) ∂_k``
  with ``R(X, Y) = ∇_X ∇_Y − ∇_Y ∇_X − ∇_[X,Y]``.
* Derivative arrays put the derivative index first: ``nabla[i, h] = ∇_i X^h``.

Every kernel accepts plain float arrays or :class:`~tbaudit.dual.Dual`
arrays, so derivatives of any of these quantities are again one ``jvp`` away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import dual as D

#: Recorded sign of the stored curvature relative to the Ricci identity
#: ``(∇_i∇_j − ∇_j∇_i) ω_k = −CONVENTION_SIGN · R^m_{ijk} ω_m``.
CONVENTION_SIGN = 1

#: Distance kept from chart singularities (sphere poles, half-plane boundary).
DOMAIN_MARGIN = 1e-3


class GeometryError(ValueError):
    """Raised for invalid metrics, points outside a chart, or singular data."""


@dataclass(frozen=True)
class ChartedMetric:
    """A metric ``g_ij(x)`` on one coordinate chart."""

    name: str
    dim: int
    eval: Callable[[Any], Any] = field(repr=False)
    domain_check: Callable[[np.ndarray], bool] = field(repr=False)
    # sampling box (lower, upper) for chart-interior points
    box: tuple[tuple[float, ...], tuple[float, ...]] = field(repr=False)
    params: tuple[float, ...] = ()

    def __call__(self, x: Any) -> Any:
        g = self.eval(x)
        # exact symmetry by construction
        return (g + g.T) * 0.5

    def contains(self, x: Any) -> bool:
        return bool(self.domain_check(D.primal(x)))

    def require(self, x: Any) -> None:
        if not self.contains(x):
            raise GeometryError(f"point {D.primal(x)} outside the {self.name} chart")


# -- builtin catalog ---------------------------------------------------------
def _euclidean(n: int) -> ChartedMetric:
    eye = np.eye(n)
    return ChartedMetric(
        name="euclidean",
        dim=n,
        eval=lambda x: eye.copy(),
        domain_check=lambda x: bool(np.all(np.isfinite(x))),
        box=((-2.0,) * n, (2.0,) * n),
        params=(float(n),),
    )


def _sphere(radius: float) -> ChartedMetric:
    r2 = radius * radius

    def g(x):
        s = D.sin(x[0])
        return D.diag([r2, r2 * s * s])

    def ok(x):
        return bool(DOMAIN_MARGIN < x[0] < math.pi - DOMAIN_MARGIN)

    return ChartedMetric(
        name="sphere",
        dim=2,
        eval=g,
        domain_check=ok,
        box=((0.3, -math.pi), (math.pi - 0.3, math.pi)),
        params=(radius,),
    )


def _hyperbolic_half_plane() -> ChartedMetric:
    def g(x):
        c = 1.0 / (x[1] * x[1])
        return D.diag([c, c])

    def ok(x):
        return bool(x[1] > DOMAIN_MARGIN)

    return ChartedMetric(
        name="hyperbolic_half_plane",
        dim=2,
        eval=g,
        domain_check=ok,
        box=((-2.0, 0.5), (2.0, 3.0)),
    )


def _flat_torus(n: int, radii: Sequence[float]) -> ChartedMetric:
    gdiag = np.diag(np.asarray(radii, dtype=float) ** 2)
    return ChartedMetric(
        name="flat_torus",
        dim=n,
        eval=lambda x: gdiag.copy(),
        domain_check=lambda x: bool(np.all(np.isfinite(x))),
        box=((0.0,) * n, (2 * math.pi,) * n),
        params=(float(n), *map(float, radii)),
    )


BUILTIN_METRICS = ("euclidean", "sphere", "hyperbolic_half_plane", "flat_torus")


def builtin_metric(name: str, params: Sequence[float] = ()) -> ChartedMetric:
    """Look up a catalog metric.

    ``euclidean`` and ``flat_torus`` take the dimension as first parameter
    (default 2); ``flat_torus`` optionally takes one radius per angle.
    ``sphere`` takes the radius (default 1). ``hyperbolic_half_plane`` takes
    no parameters.
    """
    params = list(params)
    if name == "euclidean":
        n = int(params[0]) if params else 2
        if n < 1:
            raise GeometryError("dimension must be positive")
        return _euclidean(n)
    if name == "sphere":
        radius = float(params[0]) if params else 1.0
        if not radius > 0:
            raise GeometryError("sphere radius must be positive")
        return _sphere(radius)
    if name == "hyperbolic_half_plane":
        return _hyperbolic_half_plane()
    if name == "flat_torus":
        n = int(params[0]) if params else 2
        if n < 1:
            raise GeometryError("dimension must be positive")
        radii = params[1:] or [1.0] * n
        if len(radii) != n or any(not r > 0 for r in radii):
            raise GeometryError("flat_torus needs one positive radius per dimension")
        return _flat_torus(n, radii)
    raise GeometryError(f"unknown metric {name!r}; expected one of {BUILTIN_METRICS}")


# -- tables ------------------------------------------------------------------
@dataclass(frozen=True)
class ChristoffelTable:
    values: np.ndarray


@dataclass(frozen=True)
class CurvatureTable:
    mixed: np.ndarray
    convention_sign: int = CONVENTION_SIGN

    def lowered(self, g: np.ndarray) -> np.ndarray:
        return lower_riemann(g, self.mixed)


# -- kernels -----------------------------------------------------------------
def metric_derivatives(m: ChartedMetric, x: Any) -> Any:
    """``dg[k, i, j] = ∂_k g_ij``."""
    return D.jacobian(m, x)


def christoffel(m: ChartedMetric, x: Any) -> Any:
    g = m(x)
    ginv = D.inv(g)
    dg = metric_derivatives(m, x)
    # first kind: low[m, j, i] = ½(∂_j g_mi + ∂_i g_mj − ∂_m g_ji)
    low = (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg) * 0.5
    gam = D.einsum("hm,mji->hji", ginv, low)
    return (gam + gam.swapaxes(1, 2)) * 0.5


def riemann(m: ChartedMetric, x: Any) -> Any:
    gam = christoffel(m, x)
    dgam = D.jacobian(lambda z: christoffel(m, z), x)
    # half[h, j, i, k] = ∂_j Γ^h_ik + Γ^h_jm Γ^m_ik, antisymmetrized in (j, i)
    half = dgam.transpose(1, 0, 2, 3) + D.einsum("hjm,mik->hjik", gam, gam)
    return half - half.swapaxes(1, 2)


def lower_first(g: Any, r: Any) -> Any:
    """``L[a, j, i, k] = g_am R^m_jik`` = g(R(∂_j, ∂_i)∂_k, ∂_a)."""
    return D.einsum("am,mjik->ajik", g, r)


def lower_riemann(g: Any, r: Any) -> Any:
    """Fully lowered ``R_abcd = g(R(∂_c, ∂_d)∂_b, ∂_a)``.

    With this layout a space of constant curvature K has
    ``R_abcd = K (g_ac g_bd − g_ad g_bc)``.
    """
    return lower_first(g, r).transpose(0, 3, 1, 2)


def raise_riemann(ginv: Any, low: Any) -> Any:
    """Inverse of :func:`lower_riemann`."""
    return D.einsum("hm,mkji->hjik", ginv, low)


def mixed_riemann(g: Any, ginv: Any, r: Any) -> Any:
    """``M[h, i, k, j] = g^{ht} g_{js} R^s_{tik}`` (upper index first, last index lowered)."""
    return D.einsum("ht,jtik->hikj", ginv, lower_first(g, r))


def sectional_curvature_base(m: ChartedMetric, x: Any, u: Any, v: Any) -> float:
    g = D.primal(m(x))
    low = lower_riemann(g, D.primal(riemann(m, x)))
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    den = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    if den <= 1e-12:
        raise GeometryError("degenerate plane")
    return float(np.einsum("abcd,a,b,c,d->", low, u, v, u, v) / den)


def _field_values(field: Callable[[Any], Any], x: Any) -> Any:
    return D.asarray(field(x))


def covariant_derivative_vector(m: ChartedMetric, field: Callable, x: Any) -> Any:
    """``∇_i X^h`` as ``[i, h]``."""
    gam = christoffel(m, x)
    X = _field_values(field, x)
    J = D.jacobian(lambda z: _field_values(field, z), x)
    return J + D.einsum("him,m->ih", gam, X)


def covariant_derivative_covector(m: ChartedMetric, field: Callable, x: Any) -> Any:
    """``∇_i ω_j`` as ``[i, j]`` for a covector field ``ω``."""
    gam = christoffel(m, x)
    w = _field_values(field, x)
    J = D.jacobian(lambda z: _field_values(field, z), x)
    return J - D.einsum("mij,m->ij", gam, w)


def second_covariant_derivative_covector(m: ChartedMetric, field: Callable, x: Any) -> Any:
    """``∇_i ∇_j ω_k`` as ``[i, j, k]``."""
    gam = christoffel(m, x)
    first = covariant_derivative_covector(m, field, x)
    J = D.jacobian(lambda z: covariant_derivative_covector(m, field, z), x)
    return (
        J
        - D.einsum("mij,mk->ijk", gam, first)
        - D.einsum("mik,jm->ijk", gam, first)
    )


def second_covariant_derivative_vector(m: ChartedMetric, field: Callable, x: Any) -> Any:
    """``∇_i ∇_k X^h`` as ``[i, k, h]``."""
    gam = christoffel(m, x)
    first = covariant_derivative_vector(m, field, x)
    J = D.jacobian(lambda z: covariant_derivative_vector(m, field, z), x)
    return (
        J
        - D.einsum("mik,mh->ikh", gam, first)
        + D.einsum("him,km->ikh", gam, first)
    )


def covariant_derivative_riemann(m: ChartedMetric, x: Any) -> Any:
    """``∇_a R^h_{bcd}`` as ``[a, h, b, c, d]``."""
    gam = christoffel(m, x)
    r = riemann(m, x)
    J = D.jacobian(lambda z: riemann(m, z), x)
    return (
        J
        + D.einsum("hae,ebcd->ahbcd", gam, r)
        - D.einsum("eab,hecd->ahbcd", gam, r)
        - D.einsum("eac,hbed->ahbcd", gam, r)
        - D.einsum("ead,hbce->ahbcd", gam, r)
    )


def lower_field(m: ChartedMetric, field: Callable) -> Callable:
    """Associated covector field ``X_i = g_is X^s``."""

    def covector(x):
        return D.einsum("is,s->i", m(x), _field_values(field, x))

    return covector


def ricci_identity_residual(m: ChartedMetric, covector: Callable, x: Any) -> float:
    """Max of ``(∇_i∇_j − ∇_j∇_i) ω_k + sign · R^m_{ijk} ω_m`` over all indices."""
    second = D.primal(second_covariant_derivative_covector(m, covector, x))
    r = D.primal(riemann(m, x))
    w = D.primal(_field_values(covector, x))
    lhs = second - second.transpose(1, 0, 2)
    res = lhs + CONVENTION_SIGN * np.einsum("mijk,m->ijk", r, w)
    return float(np.max(np.abs(res)))


def metric_compatibility_residual(m: ChartedMetric, x: Any) -> float:
    """Max ``|∇_k g_ij|`` using the computed Christoffel symbols."""
    g = D.primal(m(x))
    dg = D.primal(metric_derivatives(m, x))
    gam = D.primal(christoffel(m, x))
    nab = dg - np.einsum("mki,mj->kij", gam, g) - np.einsum("mkj,im->kij", gam, g)
    return float(np.max(np.abs(nab)))


# -- evaluated-at-a-point wrappers --------------------------------------------
def christoffel_at(m: ChartedMetric, x: Sequence[float]) -> ChristoffelTable:
    x = np.asarray(x, dtype=float)
    m.require(x)
    try:
        return ChristoffelTable(D.primal(christoffel(m, x)))
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"metric not invertible at {x}") from exc


def riemann_at(m: ChartedMetric, x: Sequence[float]) -> CurvatureTable:
    x = np.asarray(x, dtype=float)
    m.require(x)
    try:
        return CurvatureTable(D.primal(riemann(m, x)))
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"metric not invertible at {x}") from exc


def mixed_riemann_at(m: ChartedMetric, x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    m.require(x)
    g = D.primal(m(x))
    return mixed_riemann(g, np.linalg.inv(g), D.primal(riemann(m, x)))

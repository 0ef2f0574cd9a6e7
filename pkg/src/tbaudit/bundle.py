"""Tangent-bundle points, the adapted frame, and the Cheeger-Gromoll metric.

Bundle arrays use ``2n`` indices: ``0..n-1`` are the horizontal frame fields
``X_(i) = ∂_i − y^s Γ^h_si ∂_h̄`` and ``n..2n-1`` the vertical ones
``X_(ī) = ∂_ī``. Induced coordinates are ``z = (x, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np

from . import dual as D
from .base import CONVENTION_SIGN, ChartedMetric, christoffel, covariant_derivative_vector, riemann


@dataclass(frozen=True)
class BundlePoint:
    """A point ``(x, y)`` of TM together with ``g_ij(x)``.

    ``x`` and ``y`` may be dual arrays when a kernel is being differentiated.
    """

    x: Any
    y: Any
    g: Any

    @classmethod
    def at(cls, m: ChartedMetric, x: Any, y: Any) -> "BundlePoint":
        if not D.is_dual(x):
            x = np.asarray(x, dtype=float)
        if not D.is_dual(y):
            y = np.asarray(y, dtype=float)
        if D.shape(x) != (m.dim,) or D.shape(y) != (m.dim,):
            raise ValueError(f"expected x and y of length {m.dim}")
        return cls(x, y, m(x))

    @property
    def dim(self) -> int:
        return D.shape(self.x)[0]

    @cached_property
    def z(self) -> Any:
        return D.concatenate([self.x, self.y])

    @cached_property
    def y_lower(self) -> Any:
        return D.einsum("ji,i->j", self.g, self.y)

    @cached_property
    def r2(self) -> Any:
        return D.einsum("j,j->", self.y_lower, self.y)

    @cached_property
    def alpha(self) -> Any:
        return 1.0 + self.r2

    @cached_property
    def ginv(self) -> Any:
        return D.inv(self.g)

    def primal(self) -> "BundlePoint":
        return BundlePoint(D.primal(self.x), D.primal(self.y), D.primal(self.g))


def point_from_z(m: ChartedMetric, z: Any) -> BundlePoint:
    n = m.dim
    return BundlePoint.at(m, z[:n], z[n:])


def bundle_jvp(f: Callable[[BundlePoint], Any], m: ChartedMetric, p: BundlePoint, v: Any) -> Any:
    """Derivative of ``f`` at ``p`` along the induced-coordinate vector ``v``."""
    return D.jvp(lambda z: f(point_from_z(m, z)), p.z, v)


# -- adapted frame -------------------------------------------------------------
@dataclass(frozen=True)
class AdaptedFrame:
    """Columns are the frame fields in induced coordinates."""

    matrix: np.ndarray

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def frame_matrix(m: ChartedMetric, p: BundlePoint) -> Any:
    n = m.dim
    gam = christoffel(m, p.x)
    lower_left = -D.einsum("s,hsi->hi", p.y, gam)
    eye, zero = np.eye(n), np.zeros((n, n))
    return D.block([[eye, zero], [lower_left, eye]])


def frame_inverse(m: ChartedMetric, p: BundlePoint) -> Any:
    n = m.dim
    gam = christoffel(m, p.x)
    lower_left = D.einsum("s,hsi->hi", p.y, gam)
    eye, zero = np.eye(n), np.zeros((n, n))
    return D.block([[eye, zero], [lower_left, eye]])


def frame_derivative(m: ChartedMetric, p: BundlePoint, f: Callable[[BundlePoint], Any]) -> Any:
    """``D_α f`` for every frame field, stacked with ``α`` first."""
    A = frame_matrix(m, p)
    return D.stack([bundle_jvp(f, m, p, A[:, a]) for a in range(2 * m.dim)])


def adapted_frame_at(m: ChartedMetric, p: BundlePoint) -> AdaptedFrame:
    m.require(p.x)
    return AdaptedFrame(D.primal(frame_matrix(m, p)))


# -- structure coefficients ----------------------------------------------------
@dataclass(frozen=True)
class StructureCoefficients:
    """``omega[ε, α, β]`` with ``[X_α, X_β] = Ω^ε_αβ X_ε``."""

    omega: np.ndarray


def structure_coefficients(m: ChartedMetric, p: BundlePoint) -> Any:
    """Frame commutators computed numerically from directional derivatives."""
    A = frame_matrix(m, p)
    N = 2 * m.dim
    # dA[a][:, b] is the derivative of column b along frame field a
    dA = [bundle_jvp(lambda q: frame_matrix(m, q), m, p, A[:, a]) for a in range(N)]
    rows = []
    for a in range(N):
        rows.append(D.stack([dA[a][:, b] - dA[b][:, a] for b in range(N)], axis=1))
    comm = D.stack(rows, axis=1)  # comm[c, a, b] in induced coordinates
    return D.einsum("ec,cab->eab", frame_inverse(m, p), comm)


def structure_coefficients_closed_form(
    m: ChartedMetric, p: BundlePoint, sign: int = CONVENTION_SIGN
) -> Any:
    """``Ω^h̄_{i j̄} = Γ^h_ji`` and ``Ω^h̄_ij = −sign · y^s R^h_ijs``; the rest vanish."""
    n = m.dim
    gam = christoffel(m, p.x)
    r = riemann(m, p.x)
    hv = gam.transpose(0, 2, 1)  # [h, i, j] = Γ^h_ji
    hh = -sign * D.einsum("hijs,s->hij", r, p.y)
    zero = np.zeros((n, n, n))
    top = D.concatenate([D.concatenate([zero, zero], axis=2)] * 2, axis=1)
    bottom = D.concatenate(
        [D.concatenate([hh, hv], axis=2), D.concatenate([-hv.swapaxes(1, 2), zero], axis=2)],
        axis=1,
    )
    return D.concatenate([top, bottom], axis=0)


def structure_coefficients_at(m: ChartedMetric, p: BundlePoint) -> StructureCoefficients:
    m.require(p.x)
    return StructureCoefficients(D.primal(structure_coefficients(m, p)))


# -- Cheeger-Gromoll metric ----------------------------------------------------
@dataclass(frozen=True)
class BundleMetricBlocks:
    hh: np.ndarray
    hv: np.ndarray
    vv: np.ndarray

    def assemble(self) -> np.ndarray:
        return np.block([[self.hh, self.hv], [self.hv.T, self.vv]])


def vertical_block(p: BundlePoint) -> Any:
    return (p.g + D.einsum("j,i->ji", p.y_lower, p.y_lower)) / p.alpha


def vertical_block_inverse(p: BundlePoint) -> Any:
    return p.ginv * p.alpha - D.einsum("j,i->ji", p.y, p.y)


def cg_metric(m: ChartedMetric, p: BundlePoint) -> Any:
    """The full ``2n × 2n`` metric in the adapted frame."""
    zero = np.zeros((m.dim, m.dim))
    return D.block([[p.g, zero], [zero, vertical_block(p)]])


def cg_metric_inverse(m: ChartedMetric, p: BundlePoint) -> Any:
    zero = np.zeros((m.dim, m.dim))
    return D.block([[p.ginv, zero], [zero, vertical_block_inverse(p)]])


def cg_metric_at(m: ChartedMetric, p: BundlePoint) -> BundleMetricBlocks:
    m.require(p.x)
    q = p.primal()
    vv = D.primal(vertical_block(q))
    return BundleMetricBlocks(q.g, np.zeros_like(q.g), (vv + vv.T) * 0.5)


def cg_metric_inverse_at(m: ChartedMetric, p: BundlePoint) -> BundleMetricBlocks:
    m.require(p.x)
    q = p.primal()
    vv = D.primal(vertical_block_inverse(q))
    return BundleMetricBlocks(np.linalg.inv(q.g), np.zeros_like(q.g), (vv + vv.T) * 0.5)


def coordinate_metric(m: ChartedMetric, p: BundlePoint) -> Any:
    """The Cheeger-Gromoll metric in induced coordinates ``(x, y)``."""
    B = frame_inverse(m, p)
    return D.einsum("ab,ac,cd->bd", B, cg_metric(m, p), B)


def gamma_pairing(m: ChartedMetric, p: BundlePoint, X: Sequence[float]) -> float:
    """``y^j g_ji X^i``."""
    return float(D.primal(D.einsum("j,j->", p.y_lower, D.asarray(X))))


# -- lifts ----------------------------------------------------------------------
LIFT_KINDS = ("vertical", "complete", "horizontal")


@dataclass(frozen=True)
class LiftedVector:
    horizontal_part: np.ndarray
    vertical_part: np.ndarray
    kind: str
    base_field: Callable = None

    @property
    def components(self) -> np.ndarray:
        return np.concatenate([self.horizontal_part, self.vertical_part])


LiftedCovector = LiftedVector


def _check_kind(kind: str) -> None:
    if kind not in LIFT_KINDS:
        raise ValueError(f"unknown lift kind {kind!r}")


def lift_components(m: ChartedMetric, field: Callable, kind: str) -> Callable[[BundlePoint], Any]:
    """Adapted-frame components of a lifted vector field, as a function on TM."""
    _check_kind(kind)

    def comps(p: BundlePoint):
        X = D.asarray(field(p.x))
        zero = np.zeros(m.dim)
        if kind == "vertical":
            return D.concatenate([zero, X])
        if kind == "horizontal":
            return D.concatenate([X, zero])
        nab = covariant_derivative_vector(m, field, p.x)
        return D.concatenate([X, D.einsum("s,sh->h", p.y, nab)])

    return comps


def covector_lift_components(
    m: ChartedMetric, field: Callable, kind: str
) -> Callable[[BundlePoint], Any]:
    """Adapted-coframe components of the lifted associated covector field."""
    _check_kind(kind)

    def comps(p: BundlePoint):
        X = D.asarray(field(p.x))
        Xl = D.einsum("is,s->i", p.g, X)
        zero = np.zeros(m.dim)
        if kind == "horizontal":
            return D.concatenate([Xl, zero])
        if kind == "vertical":
            vert = (Xl + p.y_lower * D.einsum("t,t->", Xl, p.y)) / p.alpha
            return D.concatenate([zero, vert])
        nab = covariant_derivative_vector(m, field, p.x)
        # ∇_n X_i y^n, lowered with g (metric compatible)
        dyl = D.einsum("n,ns,is->i", p.y, nab, p.g)
        vert = (dyl + p.y_lower * D.einsum("t,t->", dyl, p.y)) / p.alpha
        return D.concatenate([Xl, vert])

    return comps


def lift_vector(m: ChartedMetric, p: BundlePoint, field: Callable, kind: str) -> LiftedVector:
    c = D.primal(lift_components(m, field, kind)(p))
    n = m.dim
    return LiftedVector(c[:n], c[n:], kind, field)


def lift_covector(m: ChartedMetric, p: BundlePoint, field: Callable, kind: str) -> LiftedCovector:
    c = D.primal(covector_lift_components(m, field, kind)(p))
    n = m.dim
    return LiftedVector(c[:n], c[n:], kind, field)


def lower_lift(m: ChartedMetric, p: BundlePoint, field: Callable, kind: str) -> np.ndarray:
    """CG-lowering of a lifted vector; compare with :func:`lift_covector`."""
    G = D.primal(cg_metric(m, p))
    return G @ D.primal(lift_components(m, field, kind)(p))

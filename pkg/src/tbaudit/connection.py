"""Levi-Civita connection of the Cheeger-Gromoll metric in the adapted frame.

``gamma[γ, α, β]`` is the ``X_γ`` component of ``∇_{X_α} X_β``. Three sources:

* ``oracle``: anholonomic Koszul formula from the frame metric blocks and the
  numerically computed frame commutators. This is the ground truth.
* ``closed_form``: the published coefficient families, evaluated as printed.
* ``corrected``: the published families with the vertical-vertical block
  replaced by the Levi-Civita connection of the fiber metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import dual as D
from .base import CONVENTION_SIGN, ChartedMetric, christoffel, mixed_riemann, riemann
from .bundle import (
    BundlePoint,
    bundle_jvp,
    cg_metric,
    frame_derivative,
    frame_matrix,
    structure_coefficients,
)

SOURCES = ("oracle", "closed_form", "corrected")


@dataclass(frozen=True)
class BundleConnectionTable:
    values: np.ndarray
    source: str


def koszul_connection(m: ChartedMetric, p: BundlePoint) -> Any:
    G = cg_metric(m, p)
    A = frame_matrix(m, p)
    N = 2 * m.dim
    dG = D.stack([bundle_jvp(lambda q: cg_metric(m, q), m, p, A[:, a]) for a in range(N)])
    omega = structure_coefficients(m, p)
    om = D.einsum("ce,eab->cab", G, omega)  # g([X_a, X_b], X_c)
    # first kind: low[c, a, b] = g(∇_a X_b, X_c)
    low = (
        dG.transpose(2, 0, 1)  # D_a g_bc
        + dG.transpose(2, 1, 0)  # D_b g_ac
        - dG  # D_c g_ab
        + om
        - om.transpose(2, 1, 0)  # g([X_a, X_c], X_b)
        - om.transpose(2, 0, 1)  # g([X_b, X_c], X_a)
    ) * 0.5
    return D.einsum("ec,cab->eab", D.inv(G), low)


def _fiber_pieces(p: BundlePoint):
    n = D.shape(p.y)[0]
    eye = np.eye(n)
    yl, y, a = p.y_lower, p.y, p.alpha
    # sym[h, j, i] = y_j δ^h_i + y_i δ^h_j
    sym = D.einsum("j,hi->hji", yl, eye) + D.einsum("i,hj->hji", yl, eye)
    gy = D.einsum("ji,h->hji", p.g, y)
    yyy = D.einsum("j,i,h->hji", yl, yl, y)
    return sym, gy, yyy, a


def vertical_vertical_printed(p: BundlePoint) -> Any:
    """Published vertical-vertical family ``Γ^h̄_{j̄ ī}`` as ``[h, j, i]``."""
    sym, gy, yyy, a = _fiber_pieces(p)
    return -sym / a + gy * ((1.0 + a) / a) - yyy / a


def vertical_vertical_corrected(p: BundlePoint) -> Any:
    """Christoffel symbols of the fiber metric ``(g + y♭ ⊗ y♭)/α`` as ``[h, j, i]``."""
    sym, gy, yyy, a = _fiber_pieces(p)
    return -sym / a + gy * ((1.0 + a) / (a * a)) + yyy / (a * a)


def closed_form_families(m: ChartedMetric, p: BundlePoint, sign: int = CONVENTION_SIGN) -> dict:
    """The eight published families, each ``[upper, first lower, second lower]``."""
    gam = christoffel(m, p.x)
    r = riemann(m, p.x) * sign
    M = mixed_riemann(p.g, p.ginv, r)
    a = p.alpha
    n = m.dim
    zero = np.zeros((n, n, n))
    return {
        "hh_h": gam,
        "hh_v": -0.5 * D.einsum("hjik,k->hji", r, p.y),
        # Γ^h_{j ī} = −(1/2α) R^{h.}_{.jki} y^k
        "hv_h": -D.einsum("hjki,k->hji", M, p.y) / (2.0 * a),
        "hv_v": gam,
        # Γ^h_{j̄ i} = −(1/2α) R^{h.}_{.ikj} y^k
        "vh_h": -D.einsum("hikj,k->hji", M, p.y) / (2.0 * a),
        "vh_v": zero,
        "vv_h": zero,
        "vv_v": vertical_vertical_printed(p),
    }


def assemble(families: dict) -> Any:
    """Place the eight ``n × n × n`` families into a ``2n × 2n × 2n`` table."""
    f = families

    def plane(upper):
        return D.concatenate(
            [
                D.concatenate([f[f"hh_{upper}"], f[f"hv_{upper}"]], axis=2),
                D.concatenate([f[f"vh_{upper}"], f[f"vv_{upper}"]], axis=2),
            ],
            axis=1,
        )

    return D.concatenate([plane("h"), plane("v")], axis=0)


def closed_form_connection(
    m: ChartedMetric, p: BundlePoint, sign: int = CONVENTION_SIGN, corrected: bool = False
) -> Any:
    fam = closed_form_families(m, p, sign)
    if corrected:
        fam["vv_v"] = vertical_vertical_corrected(p)
    return assemble(fam)


def connection(m: ChartedMetric, p: BundlePoint, source: str = "oracle") -> Any:
    if source == "oracle":
        return koszul_connection(m, p)
    if source == "closed_form":
        return closed_form_connection(m, p)
    if source == "corrected":
        return closed_form_connection(m, p, corrected=True)
    raise ValueError(f"unknown connection source {source!r}")


def split_families(table: np.ndarray, n: int) -> dict:
    """Inverse of :func:`assemble`."""
    sl = {"h": slice(0, n), "v": slice(n, 2 * n)}
    out = {}
    for lo1 in "hv":
        for lo2 in "hv":
            for up in "hv":
                out[f"{lo1}{lo2}_{up}"] = table[sl[up], sl[lo1], sl[lo2]]
    return out


# -- evaluated-at-a-point wrappers --------------------------------------------
def koszul_connection_at(m: ChartedMetric, p: BundlePoint) -> BundleConnectionTable:
    m.require(p.x)
    return BundleConnectionTable(D.primal(koszul_connection(m, p)), "oracle")


def closed_form_connection_at(m: ChartedMetric, p: BundlePoint) -> BundleConnectionTable:
    m.require(p.x)
    return BundleConnectionTable(D.primal(closed_form_connection(m, p)), "closed_form")


def corrected_vertical_vertical_at(m: ChartedMetric, p: BundlePoint) -> np.ndarray:
    m.require(p.x)
    return D.primal(vertical_vertical_corrected(p))


def metric_compatibility_residual(m: ChartedMetric, p: BundlePoint, gamma: np.ndarray) -> float:
    """Max ``|D_a g_bc − Γ^e_ab g_ec − Γ^e_ac g_be|`` in the adapted frame."""
    G = D.primal(cg_metric(m, p))
    dG = D.primal(frame_derivative(m, p, lambda q: cg_metric(m, q)))
    res = dG - np.einsum("eab,ec->abc", gamma, G) - np.einsum("eac,be->abc", gamma, G)
    return float(np.max(np.abs(res)))


def torsion_residual(m: ChartedMetric, p: BundlePoint, gamma: np.ndarray, omega=None) -> float:
    """Max ``|Γ^c_ab − Γ^c_ba − Ω^c_ab|``."""
    if omega is None:
        omega = D.primal(structure_coefficients(m, p))
    return float(np.max(np.abs(gamma - gamma.transpose(0, 2, 1) - omega)))


# -- covariant derivatives on TM --------------------------------------------------
def bundle_covariant_derivative(
    m: ChartedMetric,
    p: BundlePoint,
    field: Callable[[BundlePoint], Any],
    source: str = "oracle",
    gamma: Any = None,
) -> Any:
    """``∇_β X^α`` of a vector field on TM given by adapted-frame components, as ``[β, α]``."""
    if gamma is None:
        gamma = connection(m, p, source)
    X = D.asarray(field(p))
    return frame_derivative(m, p, field) + D.einsum("abd,d->ba", gamma, X)


def bundle_covariant_derivative_covector(
    m: ChartedMetric,
    p: BundlePoint,
    field: Callable[[BundlePoint], Any],
    source: str = "oracle",
    gamma: Any = None,
) -> Any:
    """``∇_β ω_γ`` of a covector field on TM, as ``[β, γ]``."""
    if gamma is None:
        gamma = connection(m, p, source)
    w = D.asarray(field(p))
    return frame_derivative(m, p, field) - D.einsum("ebc,e->bc", gamma, w)


def pin_convention_sign(m: ChartedMetric, points) -> tuple[int, dict]:
    """Choose the curvature sign that makes ``Γ^h̄_ji = −½ R^h_jik y^k`` match the oracle.

    Returns the chosen sign and the max residual of that family for each sign.
    """
    n = m.dim
    worst = {1: 0.0, -1: 0.0}
    for p in points:
        ref = D.primal(koszul_connection(m, p))[n:, :n, :n]
        for s in (1, -1):
            fam = D.primal(closed_form_families(m, p, s)["hh_v"])
            worst[s] = max(worst[s], float(np.max(np.abs(fam - ref))))
    sign = 1 if worst[1] <= worst[-1] else -1
    return sign, worst

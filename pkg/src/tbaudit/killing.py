"""Lie derivatives of the Cheeger-Gromoll metric along lifted vector fields."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import dual as D
from .base import ChartedMetric
from .bundle import BundlePoint, bundle_jvp, coordinate_metric, frame_matrix
from .claims import Claim, Context, blocks

KILLING_TOL = 1e-7


def lie_derivative_oracle(
    m: ChartedMetric, p: BundlePoint, components: Callable[[BundlePoint], Any]
) -> Any:
    """``L_V g`` in the adapted frame, computed in induced coordinates.

    ``components`` gives the adapted-frame components of ``V``. The metric
    is pulled back to coordinates, differentiated with
    ``(L_V g)_ab = V^c ∂_c g_ab + g_cb ∂_a V^c + g_ac ∂_b V^c``, and pushed
    forward again.
    """
    N = 2 * m.dim

    def vec(q):
        return D.einsum("ab,b->a", frame_matrix(m, q), D.asarray(components(q)))

    Gc = coordinate_metric(m, p)
    V = vec(p)
    along = bundle_jvp(lambda q: coordinate_metric(m, q), m, p, V)
    eye = np.eye(N)
    JV = D.stack([bundle_jvp(vec, m, p, eye[a]) for a in range(N)])  # [a, c] = ∂_a V^c
    JG = D.einsum("ac,cb->ab", JV, Gc)
    L = along + JG + JG.T
    A = frame_matrix(m, p)
    return D.einsum("ai,ab,bj->ij", A, L, A)


def lie_derivative_oracle_at(m: ChartedMetric, p: BundlePoint, components) -> np.ndarray:
    L = D.primal(lie_derivative_oracle(m, p, components))
    return (L + L.T) * 0.5


# -- published forms ---------------------------------------------------------------
def _skew_yy(c: Context, t: np.ndarray) -> np.ndarray:
    ty = t @ c.y
    return np.outer(ty, c.yl) - np.outer(c.yl, ty)


def _M_ikj(c: Context) -> np.ndarray:
    return np.einsum("mikj,k,m->ij", c.M, c.y, c.Xl)


def _M_jki(c: Context) -> np.ndarray:
    return np.einsum("mjki,k,m->ij", c.M, c.y, c.Xl)


def complete_lie_blocks(c: Context, gbar: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Printed blocks ``A1, B1, C1, D1`` for ``L_{^C X}``."""
    gbar = c.vvp if gbar is None else gbar
    nab = c.nabXl
    a1 = nab + nab.T
    t = np.einsum("int,n->it", c.nnXl, c.y)
    ty = t @ c.y
    b1 = (
        np.einsum("inj,n->ij", c.nnXl, c.y)
        + np.outer(ty, c.yl)
        + np.outer(c.yl, ty)
        - _M_ikj(c)
    ) / c.alpha
    c1 = -_M_jki(c) / c.alpha
    v = c.Xdot + c.yl * (c.Xdot @ c.y)
    # printed bracket equals −α times the fiber-connection family
    bracket = -c.alpha * gbar
    d1 = (nab - nab.T + _skew_yy(c, nab)) / c.alpha + np.einsum("mij,m->ij", bracket, 2.0 * v) / c.alpha**2
    return {"hh": a1, "hv": b1, "vh": c1, "vv": d1}


def horizontal_lie_blocks(c: Context) -> dict[str, np.ndarray]:
    nab = c.nabXl
    return {
        "hh": nab + nab.T,
        "hv": -_M_ikj(c) / c.alpha,
        "vh": -_M_jki(c) / c.alpha,
        "vv": np.zeros((c.n, c.n)),
    }


def lie_derivative_closed_form(m: ChartedMetric, p: BundlePoint, field: Callable, kind: str) -> np.ndarray:
    c = Context(m, p, field)
    if kind == "complete":
        b = complete_lie_blocks(c)
    elif kind == "horizontal":
        b = horizontal_lie_blocks(c)
    else:
        raise ValueError("kind must be 'complete' or 'horizontal'")
    return np.block([[b["hh"], b["hv"]], [b["vh"], b["vv"]]])


def lie_claims() -> list[Claim]:
    c_loc = "Lie derivative of the metric along the complete lift"
    h_loc = "Lie derivative of the metric along the horizontal lift"

    def oracle(kind, blk):
        return lambda c: blocks(c.lie(kind), c.n)[blk]

    quotes_c = {
        "hh": r"A_1 = \nabla_i X_j + \nabla_j X_i",
        "hv": r"B_1 = \frac1\alpha[\nabla_i\nabla_n X_j y^n + (g_{js}\nabla_i\nabla_n X_t"
        r" + g_{is}\nabla_j\nabla_n X_t) y^s y^t y^n - R^{m.}_{.ikj} y^k X_m]",
        "vh": r"C_1 = -\frac1\alpha R^{m.}_{.jki} y^k X_m",
        "vv": r"D_1 = \frac1\alpha[(\nabla_i X_j - \nabla_j X_i) + (g_{js}\nabla_i X_t - g_{is}\nabla_j X_t)"
        r" y^s y^t] + [(y_i\delta^m_j + y_j\delta^m_i) - (1+\alpha) g_{ij} y^m + y_i y_j y^m]"
        r" \frac{2(\nabla X_m + g_{ms} X_t y^s y^t)}{\alpha^2}",
    }
    quotes_h = {
        "hh": r"\nabla_i X_j + \nabla_j X_i",
        "hv": r"-\frac1\alpha R^{m.}_{.ikj} y^k X_m",
        "vh": r"-\frac1\alpha R^{m.}_{.jki} y^k X_m",
        "vv": r"0",
    }
    names = {"hh": "A1", "hv": "B1", "vh": "C1", "vv": "D1"}
    out = []
    for blk, label in names.items():
        out.append(
            Claim(
                f"eq15.{label}", c_loc, quotes_c[blk],
                lambda c, b=blk: complete_lie_blocks(c)[b], oracle("complete", blk),
                canonical_reading=(
                    "\\nabla X_m and X_t in the last factor read as \\nabla_n X_m y^n and \\nabla_n X_t y^n"
                    if blk == "vv" else ""
                ),
                evaluate_corrected=(
                    (lambda c: complete_lie_blocks(c, c.vvc)["vv"]) if blk == "vv" else None
                ),
            )
        )
    for blk in names:
        out.append(
            Claim(
                f"eq16.{blk}", h_loc, quotes_h[blk],
                lambda c, b=blk: horizontal_lie_blocks(c)[b], oracle("horizontal", blk),
            )
        )
    return out


# -- classification --------------------------------------------------------------------
@dataclass(frozen=True)
class KillingRecord:
    base_killing: bool
    cov_deriv_zero: bool
    second_cov_deriv_zero: bool
    complete_lift_killing: bool
    horizontal_lift_killing: bool
    prop3a_consistent: bool
    prop3b_consistent: bool
    max_complete_lie: float
    max_horizontal_lie: float
    max_printed_complete_lie: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def killing_classify(
    m: ChartedMetric, points: Sequence[BundlePoint], fld: Callable, tol: float = KILLING_TOL
) -> KillingRecord:
    """Classify a base field from oracle quantities over the sample set."""
    base = cov = second = comp = hor = printed = 0.0
    for p in points:
        c = Context(m, p, fld)
        base = max(base, np.abs(c.nabXl + c.nabXl.T).max())
        cov = max(cov, np.abs(c.nabX).max())
        second = max(second, np.abs(c.nnX).max())
        comp = max(comp, np.abs(c.lie("complete")).max())
        hor = max(hor, np.abs(c.lie("horizontal")).max())
        b = complete_lie_blocks(c)
        printed = max(printed, max(np.abs(v).max() for v in b.values()))
    bk, cz, sz = base <= tol, cov <= tol, second <= tol
    ck, hk = comp <= tol, hor <= tol
    return KillingRecord(
        base_killing=bk,
        cov_deriv_zero=cz,
        second_cov_deriv_zero=sz,
        complete_lift_killing=ck,
        horizontal_lift_killing=hk,
        prop3a_consistent=ck == (bk and cz),
        prop3b_consistent=hk == (bk and sz),
        max_complete_lie=float(comp),
        max_horizontal_lie=float(hor),
        max_printed_complete_lie=float(printed),
    )

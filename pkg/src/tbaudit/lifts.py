"""Covariant derivatives of lifted fields and their rotations, as audited claims.

Vector-field claims return ``[i, h]`` (derivative index first); covector
claims return ``[i, j]``. Block letters name the adapted-frame type of the
derivative index then of the component index, e.g. ``vh`` is ``∇_ī X^h``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import dual as D
from .base import ChartedMetric
from .bundle import BundlePoint
from .claims import Accumulator, Claim, ClaimResult, Context, TOL_FAIL, TOL_PASS, blocks

PARALLEL_TOL = 1e-8
CLOSED_TOL = 1e-8


# -- recurring terms ------------------------------------------------------------
def _W(c: Context) -> np.ndarray:
    """``X_h + g_hs X_t y^s y^t``."""
    return c.Xl + c.yl * (c.Xl @ c.y)


def _V(c: Context) -> np.ndarray:
    """``∇_n X_h y^n + g_hs ∇_n X_t y^n y^s y^t``."""
    return c.Xdot + c.yl * (c.Xdot @ c.y)


def _V_literal(c: Context) -> np.ndarray:
    """``∇_n X_h y^n + g_hs X_t y^s y^t`` (no derivative on the second term)."""
    return c.Xdot + c.yl * (c.Xl @ c.y)


def _RyW(c: Context, w: np.ndarray) -> np.ndarray:
    """``R^h_ijk y^k w_h`` as ``[i, j]``."""
    return np.einsum("hijk,k,h->ij", c.R, c.y, w)


def _M_ikj(c: Context) -> np.ndarray:
    """``R^{m.}_{.ikj} y^k X_m`` as ``[i, j]``."""
    return np.einsum("mikj,k,m->ij", c.M, c.y, c.Xl)


def _M_jki(c: Context) -> np.ndarray:
    """``R^{m.}_{.jki} y^k X_m`` as ``[i, j]``."""
    return np.einsum("mjki,k,m->ij", c.M, c.y, c.Xl)


def _M_vec_ikm(c: Context) -> np.ndarray:
    """``R^{h.}_{.ikm} y^k X^m`` as ``[i, h]``."""
    return np.einsum("hikm,k,m->ih", c.M, c.y, c.X)


def _M_vec_mki(c: Context) -> np.ndarray:
    """``R^{h.}_{.mki} y^k X^m`` as ``[i, h]``."""
    return np.einsum("hmki,k,m->ih", c.M, c.y, c.X)


def _R_vec_imk(c: Context) -> np.ndarray:
    """``R^h_imk y^k X^m`` as ``[i, h]``."""
    return np.einsum("himk,k,m->ih", c.R, c.y, c.X)


def _fiber_contract_vec(gbar: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``Γ̄^h_{im} v^m`` as ``[i, h]``."""
    return np.einsum("him,m->ih", gbar, v)


def _skew_yy(c: Context, t: np.ndarray) -> np.ndarray:
    """``(g_js t_i^. − g_is t_j^.) y^s`` contracted: ``y_j (t y)_i − y_i (t y)_j``."""
    ty = t @ c.y
    return np.outer(ty, c.yl) - np.outer(c.yl, ty)


def _zero(c: Context) -> np.ndarray:
    return np.zeros((c.n, c.n))


def _oracle_vec(kind: str, block: str):
    return lambda c: blocks(c.nabla_lift(kind), c.n)[block]


def _oracle_cov(kind: str, block: str):
    return lambda c: blocks(c.nabla_colift(kind), c.n)[block]


def _oracle_rot(kind: str, block: str):
    return lambda c: blocks(c.rotation_colift(kind), c.n)[block]


# -- registry ---------------------------------------------------------------------
def _vertical_vector_claims() -> list[Claim]:
    loc = "covariant derivative of the vertical lift"
    return [
        Claim(
            "eq4.line1", loc, r"\nabla_i {}^V X^h = -\frac{1}{2\alpha} R^{h.}_{.ikm} y^k X^m",
            lambda c: -_M_vec_ikm(c) / (2 * c.alpha), _oracle_vec("vertical", "hh"),
        ),
        Claim(
            "eq4.line2", loc, r"\nabla_{\bar i} {}^V X^h = 0",
            _zero, _oracle_vec("vertical", "vh"),
        ),
        Claim(
            "eq4.line3", loc, r"\nabla_i {}^V X^{\bar h} = \nabla_i X^h",
            lambda c: c.nabX, _oracle_vec("vertical", "hv"),
        ),
        Claim(
            "eq4.line4", loc,
            r"\nabla_{\bar i} {}^V X^{\bar h} = [-\frac1\alpha(y_i\delta^h_m + y_m\delta^h_i)"
            r" + \frac{1+\alpha}{\alpha} g_{im} y^h - \frac1\alpha y_i y_m y^h] X^h",
            lambda c: _fiber_contract_vec(c.vvp, c.X), _oracle_vec("vertical", "vv"),
            canonical_reading="repeated X^h read as X^m (contraction over m)",
            evaluate_corrected=lambda c: _fiber_contract_vec(c.vvc, c.X),
        ),
    ]


def _complete_vector_claims() -> list[Claim]:
    loc = "covariant derivative of the complete lift"
    return [
        Claim(
            "eq5.line1", loc,
            r"\nabla_i {}^C X^h = \nabla_i X^h - \frac{1}{2\alpha} R^{h.}_{.ikm} y^k X^m",
            lambda c: c.nabX - _M_vec_ikm(c) / (2 * c.alpha), _oracle_vec("complete", "hh"),
        ),
        Claim(
            "eq5.line2", loc, r"\nabla_{\bar i} {}^C X^h = -\frac{1}{2\alpha} R^{h.}_{.mki} y^k X^m",
            lambda c: -_M_vec_mki(c) / (2 * c.alpha), _oracle_vec("complete", "vh"),
        ),
        Claim(
            "eq5.line3", loc,
            r"\nabla_i {}^C X^{\bar h} = \nabla_i\nabla_k X^h y^k - \frac12 R^h_{imk} y^k X^m",
            lambda c: np.einsum("ikh,k->ih", c.nnX, c.y) - 0.5 * _R_vec_imk(c),
            _oracle_vec("complete", "hv"),
        ),
        Claim(
            "eq5.line4", loc,
            r"\nabla_{\bar i} {}^C X^{\bar h} = \nabla_i X^h + [-\frac1\alpha(y_i\delta^h_m"
            r" + y_m\delta^h_i) + \frac{1+\alpha}{\alpha} g_{im} y^h - \frac1\alpha y_i y_m y^h] X^h",
            lambda c: c.nabX + _fiber_contract_vec(c.vvp, c.X), _oracle_vec("complete", "vv"),
            canonical_reading="repeated X^h read as X^m (contraction over m)",
            evaluate_corrected=lambda c: c.nabX + _fiber_contract_vec(c.vvc, c.X),
        ),
    ]


def _horizontal_vector_claims() -> list[Claim]:
    loc = "covariant derivative of the horizontal lift"
    return [
        Claim(
            "eq6.line1", loc, r"\nabla_i {}^H X^h = \nabla_i X^h",
            lambda c: c.nabX, _oracle_vec("horizontal", "hh"),
        ),
        Claim(
            "eq6.line2", loc, r"\nabla_{\bar i} {}^H X^h = -\frac{1}{2\alpha} R^{h.}_{.mki} y^k X^m",
            lambda c: -_M_vec_mki(c) / (2 * c.alpha), _oracle_vec("horizontal", "vh"),
        ),
        Claim(
            "eq6.line3", loc, r"\nabla_i {}^H X^{\bar h} = -\frac12 R^h_{imk} y^k X^m",
            lambda c: -0.5 * _R_vec_imk(c), _oracle_vec("horizontal", "hv"),
        ),
        Claim(
            "eq6.line4", loc, r"\nabla_{\bar i} {}^H X^{\bar h} = 0",
            _zero, _oracle_vec("horizontal", "vv"),
        ),
    ]


def _vertical_covector_claims() -> list[Claim]:
    loc = "covariant derivative of the vertical lift of the associated covector"
    return [
        Claim(
            "eq8.line1", loc,
            r"\nabla_i {}^V X_j = -\frac{1}{2\alpha} R^h_{ijk} y^k (X_h + g_{hs} X_t y^s y^t)",
            lambda c: -_RyW(c, _W(c)) / (2 * c.alpha), _oracle_cov("vertical", "hh"),
        ),
        Claim(
            "eq8.line2", loc,
            r"\nabla_i {}^V X_{\bar j} = \frac1\alpha(\nabla_i X_j + \nabla_i X_t g_{js} y^s y^t)",
            lambda c: (c.nabXl + np.outer(c.nabXl @ c.y, c.yl)) / c.alpha,
            _oracle_cov("vertical", "hv"),
            canonical_reading="'\\nabla iX_t' read as \\nabla_i X_t",
        ),
        Claim(
            "eq8.line3", loc, r"\nabla_{\bar i} {}^V X_j = 0",
            _zero, _oracle_cov("vertical", "vh"),
        ),
        Claim(
            "eq8.line4", loc,
            r"\nabla_{\bar i} {}^V X_{\bar j} = [-(y_i\delta^h_j + y_j\delta^h_i) + (1+\alpha) g_{ij} y^h"
            r" - y_i y_j y^h] \frac{X_h + g_{hs} X_t y^s y^t}{\alpha^2}",
            lambda c: np.einsum("hij,h->ij", c.alpha * c.vvp, _W(c)) / c.alpha**2,
            _oracle_cov("vertical", "vv"),
            evaluate_corrected=lambda c: np.einsum("hij,h->ij", c.alpha * c.vvc, _W(c)) / c.alpha**2,
        ),
    ]


def _complete_covector_line4(c: Context, gbar: np.ndarray, v: np.ndarray) -> np.ndarray:
    first = (c.nabXl + np.outer(c.nabXl @ c.y, c.yl)) / c.alpha
    return first + np.einsum("hij,h->ij", -c.alpha * gbar, v) / c.alpha**2


def _complete_covector_claims() -> list[Claim]:
    loc = "covariant derivative of the complete lift of the associated covector"
    line4_quote = (
        r"\nabla_{\bar i} {}^C X_{\bar j} = \frac1\alpha(\nabla_i X_j + g_{js}\nabla_i X_t y^s y^t)"
        r" + [(y_i\delta^h_j + y_j\delta^h_i) - (1+\alpha) g_{ij} y^h + y_i y_j y^h]"
        r" \frac{\nabla X_h + g_{ms} X_t y^s y^t}{\alpha^2}"
    )
    return [
        Claim(
            "eq9.line1", loc,
            r"\nabla_i {}^C X_j = \nabla_i X_j - \frac{1}{2\alpha} R^h_{ijk} y^k"
            r" (\nabla X_h + g_{hs} \nabla X_t y^s y^t)",
            lambda c: c.nabXl - _RyW(c, _V(c)) / (2 * c.alpha), _oracle_cov("complete", "hh"),
            canonical_reading="\\nabla X_h read as \\nabla_n X_h y^n",
        ),
        Claim(
            "eq9.line2", loc,
            r"\nabla_i {}^C X_{\bar j} = \frac1\alpha(\nabla_i\nabla_n X_j y^n + g_{js}\nabla_i\nabla_n X_t"
            r" y^s y^t y^n) - \frac{1}{2\alpha} R^{m.}_{.ikj} y^k X_m",
            lambda c: (
                np.einsum("inj,n->ij", c.nnXl, c.y)
                + np.outer(np.einsum("int,n,t->i", c.nnXl, c.y, c.y), c.yl)
            ) / c.alpha
            - _M_ikj(c) / (2 * c.alpha),
            _oracle_cov("complete", "hv"),
        ),
        Claim(
            "eq9.line3", loc, r"\nabla_{\bar i} {}^C X_j = -\frac{1}{2\alpha} R^{m.}_{.jki} y^k X_m",
            lambda c: -_M_jki(c) / (2 * c.alpha), _oracle_cov("complete", "vh"),
        ),
        Claim(
            "eq9.line4", loc, line4_quote,
            lambda c: _complete_covector_line4(c, c.vvp, _V(c)), _oracle_cov("complete", "vv"),
            canonical_reading="bracket factor read as \\nabla_n X_h y^n + g_hs \\nabla_n X_t y^n y^s y^t",
            evaluate_corrected=lambda c: _complete_covector_line4(c, c.vvc, _V(c)),
        ),
        Claim(
            "eq9.line4.alt", loc, line4_quote,
            lambda c: _complete_covector_line4(c, c.vvp, _V_literal(c)),
            _oracle_cov("complete", "vv"),
            canonical_reading="bracket factor read literally: \\nabla_n X_h y^n + g_hs X_t y^s y^t",
            evaluate_corrected=lambda c: _complete_covector_line4(c, c.vvc, _V_literal(c)),
        ),
    ]


def _horizontal_covector_claims() -> list[Claim]:
    loc = "covariant derivative of the horizontal lift of the associated covector"
    return [
        Claim(
            "eq10.line1", loc, r"\nabla_i {}^H X_j = \nabla_i X_j",
            lambda c: c.nabXl, _oracle_cov("horizontal", "hh"),
        ),
        Claim(
            "eq10.line2", loc, r"\nabla_i {}^H X_{\bar j} = -\frac{1}{2\alpha} R^{m.}_{.ikj} y^k X_m",
            lambda c: -_M_ikj(c) / (2 * c.alpha), _oracle_cov("horizontal", "hv"),
        ),
        Claim(
            "eq10.line3", loc, r"\nabla_{\bar i} {}^H X_j = -\frac{1}{2\alpha} R^{m.}_{.jki} y^k X_m",
            lambda c: -_M_jki(c) / (2 * c.alpha), _oracle_cov("horizontal", "vh"),
        ),
        Claim(
            "eq10.line4", loc, r"\nabla_{\bar i} {}^H X_{\bar j} = 0",
            _zero, _oracle_cov("horizontal", "vv"),
        ),
    ]


def _rotation_claims() -> list[Claim]:
    def skew(a):
        return a - a.T

    h_loc = "rotation of the horizontal lift of the associated covector"
    c_loc = "rotation of the complete lift of the associated covector"
    v_loc = "rotation of the vertical lift of the associated covector"

    def d_block(c: Context) -> np.ndarray:
        return (skew(c.nabXl) + _skew_yy(c, c.nabXl)) / c.alpha

    return [
        Claim("eq11.A", h_loc, r"A = \nabla_i X_j - \nabla_j X_i",
              lambda c: skew(c.nabXl), _oracle_rot("horizontal", "hh")),
        Claim("eq11.B", h_loc, r"B = 0", _zero, _oracle_rot("horizontal", "hv")),
        Claim("eq11.C", h_loc, r"C = 0", _zero, _oracle_rot("horizontal", "vh")),
        Claim("eq11.D", h_loc, r"D = 0", _zero, _oracle_rot("horizontal", "vv")),
        Claim(
            "eq12.A", c_loc,
            r"A = (\nabla_i X_j - \nabla_j X_i) - \frac1\alpha R^h_{ijk} y^k"
            r" (\nabla X_h + g_{hs}\nabla X_t y^s y^t)",
            lambda c: skew(c.nabXl) - _RyW(c, _V(c)) / c.alpha, _oracle_rot("complete", "hh"),
            canonical_reading="\\nabla X_h read as \\nabla_n X_h y^n",
        ),
        Claim(
            "eq12.B", c_loc,
            r"B = \frac1\alpha(\nabla_i\nabla_n X_j y^n + (g_{js}\nabla_i\nabla_n X_t"
            r" - g_{is}\nabla_j\nabla_n X_t) y^s y^t y^n)",
            lambda c: (
                np.einsum("inj,n->ij", c.nnXl, c.y)
                + _skew_yy(c, np.einsum("int,n->it", c.nnXl, c.y))
            ) / c.alpha,
            _oracle_rot("complete", "hv"),
        ),
        Claim("eq12.C", c_loc, r"C = 0", _zero, _oracle_rot("complete", "vh")),
        Claim(
            "eq12.D", c_loc,
            r"D = \frac1\alpha[(\nabla_i X_j - \nabla_j X_i) + (g_{js}\nabla_i X_t"
            r" - g_{is}\nabla_j X_t) y^s y^t]",
            d_block, _oracle_rot("complete", "vv"),
        ),
        Claim(
            "eq13.A", v_loc, r"A' = -\frac1\alpha R^h_{ijk} y^k (X_h + g_{hs} X_t y^s y^t)",
            lambda c: -_RyW(c, _W(c)) / c.alpha, _oracle_rot("vertical", "hh"),
        ),
        Claim(
            "eq13.B", v_loc,
            r"B' = \frac1\alpha[(\nabla_i X_j - \nabla_j X_i) + (g_{js}\nabla_i X_t"
            r" - g_{is}\nabla_j X_t) y^s y^t]",
            d_block, _oracle_rot("vertical", "hv"),
        ),
        Claim("eq13.C", v_loc, r"C' = 0", _zero, _oracle_rot("vertical", "vh")),
        Claim("eq13.D", v_loc, r"D' = 0", _zero, _oracle_rot("vertical", "vv")),
    ]


def registry() -> list[Claim]:
    """Every displayed component family of the lift-derivative formulas."""
    return (
        _vertical_vector_claims()
        + _complete_vector_claims()
        + _horizontal_vector_claims()
        + _vertical_covector_claims()
        + _complete_covector_claims()
        + _horizontal_covector_claims()
        + _rotation_claims()
    )


def covector_lift_claims() -> list[Claim]:
    """Printed covector lifts against the CG-lowering of the vector lifts."""
    out = []
    quotes = {
        "vertical": r"{}^V X_B = (0, \frac1\alpha(X_i + g_{is} X_t y^s y^t))",
        "complete": r"{}^C X_B = (X_i, \frac1\alpha(\nabla X_i + g_{is}\nabla X_t y^s y^t))",
        "horizontal": r"{}^H X_B = (X_i, 0)",
    }
    for kind in ("vertical", "complete", "horizontal"):
        out.append(
            Claim(
                f"eq7.{kind}",
                "associated covector of a lifted field",
                quotes[kind],
                lambda c, k=kind: D.primal(c.colift(k)(c.p)),
                lambda c, k=kind: c.G @ D.primal(c.lift(k)(c.p)),
                canonical_reading="\\nabla X_i read as \\nabla_n X_i y^n" if kind == "complete" else "",
            )
        )
    return out


# -- audits ------------------------------------------------------------------------
def audit_claims(
    m: ChartedMetric,
    points: Sequence[BundlePoint],
    fields: Iterable,
    claims: Sequence[Claim] | None = None,
    tol_pass: float = TOL_PASS,
    tol_fail: float = TOL_FAIL,
) -> list[ClaimResult]:
    """Evaluate every claim at every (point, field) pair and keep the worst residual."""
    claims = registry() if claims is None else list(claims)
    fields = list(fields)
    accs = [Accumulator(c) for c in claims]
    for idx, p in enumerate(points):
        shared: dict = {}
        for fld in fields:
            name = getattr(fld, "name", "field")
            if hasattr(fld, "defined_at") and not fld.defined_at(p.x):
                for acc in accs:
                    acc.skipped += 1
                continue
            ctx = Context(m, p, fld, shared)
            try:
                if not np.all(np.isfinite(ctx.X)):
                    raise FloatingPointError
            except (FloatingPointError, ValueError, ZeroDivisionError):
                for acc in accs:
                    acc.skipped += 1
                continue
            for acc in accs:
                acc.add(ctx, f"sample {idx}, field {name}")
    return [acc.result(tol_pass, tol_fail) for acc in accs]


@dataclass(frozen=True)
class ClosednessRecord:
    base_closed: bool
    second_cov_deriv_zero: bool
    complete_lift_closed: bool
    horizontal_lift_closed: bool

    @property
    def implication_holds(self) -> bool:
        """closed + vanishing second derivative ⇒ closed complete lift."""
        return not (self.base_closed and self.second_cov_deriv_zero) or self.complete_lift_closed

    @property
    def horizontal_equivalence_holds(self) -> bool:
        return self.base_closed == self.horizontal_lift_closed


def closedness_check(
    m: ChartedMetric, points: Sequence[BundlePoint], fld: Callable, tol: float = CLOSED_TOL
) -> ClosednessRecord:
    base = second = comp = hor = 0.0
    for p in points:
        c = Context(m, p, fld)
        base = max(base, np.abs(c.nabXl - c.nabXl.T).max())
        second = max(second, np.abs(c.nnXl).max())
        comp = max(comp, np.abs(c.rotation_colift("complete")).max())
        hor = max(hor, np.abs(c.rotation_colift("horizontal")).max())
    return ClosednessRecord(base <= tol, second <= tol, comp <= tol, hor <= tol)


@dataclass(frozen=True)
class ParallelRecord:
    base_parallel: bool
    complete_parallel: bool
    horizontal_parallel: bool
    max_complete: float = 0.0
    max_horizontal: float = 0.0

    @property
    def equivalence_holds(self) -> bool:
        return self.base_parallel == (self.complete_parallel and self.horizontal_parallel)


def parallel_lift_check(
    m: ChartedMetric, points: Sequence[BundlePoint], fld: Callable, tol: float = PARALLEL_TOL
) -> ParallelRecord:
    base = comp = hor = 0.0
    for p in points:
        c = Context(m, p, fld)
        base = max(base, np.abs(c.nabX).max())
        comp = max(comp, np.abs(c.nabla_lift("complete")).max())
        hor = max(hor, np.abs(c.nabla_lift("horizontal")).max())
    return ParallelRecord(base <= tol, comp <= tol, hor <= tol, comp, hor)

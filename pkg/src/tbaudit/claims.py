"""Claims, verdicts, and the shared evaluation context.

A :class:`Claim` pairs a published formula (``evaluate``) with an oracle that
computes the same components from first principles. Both receive a
:class:`Context`, which lazily caches every quantity at one bundle point for
one base field so that dozens of claims share a single Koszul evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np

from . import dual as D
from .base import (
    ChartedMetric,
    christoffel,
    covariant_derivative_riemann,
    covariant_derivative_vector,
    mixed_riemann,
    riemann,
    second_covariant_derivative_vector,
)
from .bundle import (
    BundlePoint,
    cg_metric,
    covector_lift_components,
    lift_components,
)
from .connection import (
    bundle_covariant_derivative,
    bundle_covariant_derivative_covector,
    closed_form_connection,
    koszul_connection,
    vertical_vertical_corrected,
    vertical_vertical_printed,
)

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"
TOL_PASS = 1e-6
TOL_FAIL = 1e-3


def verdict(residual: float, tol_pass: float = TOL_PASS, tol_fail: float = TOL_FAIL) -> str:
    if not np.isfinite(residual):
        return INCONCLUSIVE
    if residual <= tol_pass:
        return PASS
    if residual > tol_fail:
        return FAIL
    return INCONCLUSIVE


@dataclass(frozen=True)
class Claim:
    id: str
    location: str
    quote: str
    evaluate: Callable[["Context"], np.ndarray] = field(repr=False)
    oracle: Callable[["Context"], np.ndarray] = field(repr=False)
    canonical_reading: str = ""
    # same formula with the corrected fiber connection substituted
    evaluate_corrected: Callable[["Context"], np.ndarray] | None = field(default=None, repr=False)
    per_field: bool = True

    def residual(self, ctx: "Context") -> float:
        got = np.asarray(self.evaluate(ctx), dtype=float)
        ref = np.asarray(self.oracle(ctx), dtype=float)
        if got.shape != ref.shape:
            raise ValueError(f"claim {self.id}: shape {got.shape} vs oracle {ref.shape}")
        return float(np.max(np.abs(got - ref), initial=0.0))

    def corrected_residual(self, ctx: "Context") -> float | None:
        if self.evaluate_corrected is None:
            return None
        got = np.asarray(self.evaluate_corrected(ctx), dtype=float)
        return float(np.max(np.abs(got - np.asarray(self.oracle(ctx))), initial=0.0))

    def evaluate_at(self, m: ChartedMetric, p: BundlePoint, fld=None) -> np.ndarray:
        return np.asarray(self.evaluate(Context(m, p, fld)))

    def oracle_at(self, m: ChartedMetric, p: BundlePoint, fld=None) -> np.ndarray:
        return np.asarray(self.oracle(Context(m, p, fld)))


@dataclass
class ClaimResult:
    id: str
    location: str
    quote: str
    max_abs_residual: float
    sample_count: int
    verdict: str
    corrected_residual: float | None = None
    skipped: int = 0
    worst_case: str = ""

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "location": self.location,
            "quote": self.quote,
            "verdict": self.verdict,
            "max_abs_residual": self.max_abs_residual,
            "samples": self.sample_count,
            "skipped": self.skipped,
            "worst_case": self.worst_case,
        }
        if self.corrected_residual is not None:
            out["corrected_residual"] = self.corrected_residual
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ClaimResult":
        return cls(
            id=d["id"],
            location=d["location"],
            quote=d["quote"],
            max_abs_residual=d["max_abs_residual"],
            sample_count=d["samples"],
            verdict=d["verdict"],
            corrected_residual=d.get("corrected_residual"),
            skipped=d.get("skipped", 0),
            worst_case=d.get("worst_case", ""),
        )


class Accumulator:
    """Running residual maxima for one claim."""

    def __init__(self, claim: Claim):
        self.claim = claim
        self.worst = 0.0
        self.worst_corrected = None if claim.evaluate_corrected is None else 0.0
        self.count = 0
        self.skipped = 0
        self.where = ""

    def add(self, ctx: "Context", label: str = "") -> None:
        r = self.claim.residual(ctx)
        self.count += 1
        if r > self.worst or not np.isfinite(r):
            self.worst = r
            self.where = label
        if self.worst_corrected is not None:
            self.worst_corrected = max(self.worst_corrected, self.claim.corrected_residual(ctx))

    def result(self, tol_pass: float = TOL_PASS, tol_fail: float = TOL_FAIL) -> ClaimResult:
        v = verdict(self.worst, tol_pass, tol_fail) if self.count else INCONCLUSIVE
        return ClaimResult(
            id=self.claim.id,
            location=self.claim.location,
            quote=self.claim.quote,
            max_abs_residual=self.worst,
            sample_count=self.count,
            verdict=v,
            corrected_residual=self.worst_corrected,
            skipped=self.skipped,
            worst_case=self.where,
        )


def blocks(a: np.ndarray, n: int) -> dict[str, np.ndarray]:
    """Split a ``2n × 2n`` array into ``hh, hv, vh, vv`` blocks (row type first)."""
    return {"hh": a[:n, :n], "hv": a[:n, n:], "vh": a[n:, :n], "vv": a[n:, n:]}


class Context:
    """Everything a claim might need at one bundle point, computed on demand."""

    def __init__(self, m: ChartedMetric, p: BundlePoint, fld: Callable | None = None, shared=None):
        self.m = m
        self.p = p
        self.field = fld
        self.n = m.dim
        # point-level cache shared between fields at the same point
        self.shared = shared if shared is not None else {}

    def _point(self, key: str, fn):
        if key not in self.shared:
            self.shared[key] = fn()
        return self.shared[key]

    # -- base point quantities --------------------------------------------------
    @cached_property
    def g(self) -> np.ndarray:
        return D.primal(self.p.g)

    @cached_property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @cached_property
    def y(self) -> np.ndarray:
        return D.primal(self.p.y)

    @cached_property
    def yl(self) -> np.ndarray:
        return self.g @ self.y

    @cached_property
    def alpha(self) -> float:
        return float(1.0 + self.yl @ self.y)

    @property
    def gam(self) -> np.ndarray:
        return self._point("gam", lambda: D.primal(christoffel(self.m, self.p.x)))

    @property
    def R(self) -> np.ndarray:
        return self._point("R", lambda: D.primal(riemann(self.m, self.p.x)))

    @property
    def M(self) -> np.ndarray:
        return self._point("M", lambda: mixed_riemann(self.g, self.ginv, self.R))

    @property
    def dR(self) -> np.ndarray:
        return self._point("dR", lambda: D.primal(covariant_derivative_riemann(self.m, self.p.x)))

    @property
    def dM(self) -> np.ndarray:
        """``∇_j M[h, k, m, i]`` as ``[j, h, k, m, i]``."""
        return self._point(
            "dM", lambda: np.einsum("ht,is,jstkm->jhkmi", self.ginv, self.g, self.dR)
        )

    @property
    def vvp(self) -> np.ndarray:
        return self._point("vvp", lambda: D.primal(vertical_vertical_printed(self.p)))

    @property
    def vvc(self) -> np.ndarray:
        return self._point("vvc", lambda: D.primal(vertical_vertical_corrected(self.p)))

    # -- bundle point quantities ---------------------------------------------------
    @property
    def G(self) -> np.ndarray:
        return self._point("G", lambda: D.primal(cg_metric(self.m, self.p)))

    @property
    def koszul(self) -> np.ndarray:
        return self._point("koszul", lambda: D.primal(koszul_connection(self.m, self.p)))

    @property
    def closed_form(self) -> np.ndarray:
        return self._point("closed", lambda: D.primal(closed_form_connection(self.m, self.p)))

    @property
    def corrected(self) -> np.ndarray:
        return self._point(
            "corrected", lambda: D.primal(closed_form_connection(self.m, self.p, corrected=True))
        )

    # -- field quantities -----------------------------------------------------------
    @cached_property
    def X(self) -> np.ndarray:
        return D.primal(D.asarray(self.field(self.p.x)))

    @cached_property
    def Xl(self) -> np.ndarray:
        return self.g @ self.X

    @cached_property
    def nabX(self) -> np.ndarray:
        """``∇_i X^h`` as ``[i, h]``."""
        return D.primal(covariant_derivative_vector(self.m, self.field, self.p.x))

    @cached_property
    def nabXl(self) -> np.ndarray:
        """``∇_i X_j`` as ``[i, j]``."""
        return self.nabX @ self.g

    @cached_property
    def nnX(self) -> np.ndarray:
        """``∇_i ∇_k X^h`` as ``[i, k, h]``."""
        return D.primal(second_covariant_derivative_vector(self.m, self.field, self.p.x))

    @cached_property
    def nnXl(self) -> np.ndarray:
        """``∇_i ∇_n X_j`` as ``[i, n, j]``."""
        return self.nnX @ self.g

    @cached_property
    def Xdot(self) -> np.ndarray:
        """``y^n ∇_n X_j``."""
        return self.y @ self.nabXl

    def lift(self, kind: str):
        return lift_components(self.m, self.field, kind)

    def colift(self, kind: str):
        return covector_lift_components(self.m, self.field, kind)

    def nabla_lift(self, kind: str) -> np.ndarray:
        """Oracle ``∇_β X^α`` of a lifted vector field as ``[β, α]``."""
        key = f"nabla_lift_{kind}"
        if key not in self.__dict__:
            self.__dict__[key] = D.primal(
                bundle_covariant_derivative(self.m, self.p, self.lift(kind), gamma=self.koszul)
            )
        return self.__dict__[key]

    def nabla_colift(self, kind: str) -> np.ndarray:
        """Oracle ``∇_β ω_γ`` of a lifted associated covector as ``[β, γ]``."""
        key = f"nabla_colift_{kind}"
        if key not in self.__dict__:
            self.__dict__[key] = D.primal(
                bundle_covariant_derivative_covector(
                    self.m, self.p, self.colift(kind), gamma=self.koszul
                )
            )
        return self.__dict__[key]

    def rotation_colift(self, kind: str) -> np.ndarray:
        a = self.nabla_colift(kind)
        return a - a.T

    def lie(self, kind: str) -> np.ndarray:
        key = f"lie_{kind}"
        if key not in self.__dict__:
            from .killing import lie_derivative_oracle

            self.__dict__[key] = D.primal(lie_derivative_oracle(self.m, self.p, self.lift(kind)))
        return self.__dict__[key]

    def curvature(self, source: str) -> np.ndarray:
        from .curvature import bundle_curvature

        return self._point(f"curv_{source}", lambda: D.primal(bundle_curvature(self.m, self.p, source)))

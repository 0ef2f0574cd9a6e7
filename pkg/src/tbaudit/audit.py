"""Full audit runs: configuration, claim execution, propositions and reports."""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from . import dual as D
from .base import (
    CONVENTION_SIGN,
    BUILTIN_METRICS,
    ChartedMetric,
    builtin_metric,
    metric_compatibility_residual as base_compat_residual,
    ricci_identity_residual,
)
from .bundle import BundlePoint
from .claims import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    TOL_FAIL,
    TOL_PASS,
    Accumulator,
    Claim,
    ClaimResult,
    Context,
)
from .connection import (
    closed_form_families,
    metric_compatibility_residual,
    pin_convention_sign,
    torsion_residual,
)
from .curvature import BASE_FLAT_TOL, BUNDLE_FLAT_TOL, antisymmetry_residual, curvature_claims, pair_symmetry_residual
from .fields import DEFAULT_FIELDS, FIELD_NAMES, NamedField, fields_for
from .killing import KILLING_TOL, complete_lie_blocks, lie_claims
from .lifts import CLOSED_TOL, PARALLEL_TOL, covector_lift_claims, registry
from .sampling import DEFAULT_Y_MAX, sample_bundle_points

SCHEMA_VERSION = "1.0"
GROUPS = ("connection", "lifts", "killing", "curvature")
SIGN_SEPARATION = 0.1

# oracle self-check tolerances
ORACLE_TOL = 1e-7
RICCI_TOL = 1e-8
ANTISYM_TOL = 1e-10
PAIR_TOL = 1e-8


class ConfigError(ValueError):
    """Invalid audit configuration (CLI exit code 2)."""


@dataclass
class AuditConfig:
    metric: str = "euclidean"
    params: list[float] = field(default_factory=list)
    samples: int = 20
    seed: int = 0
    y_max: float = DEFAULT_Y_MAX
    tolerance_pass: float = TOL_PASS
    tolerance_fail: float = TOL_FAIL
    claims: list[str] | None = None
    fields: list[str] | None = None

    def validate(self) -> "AuditConfig":
        if self.metric not in BUILTIN_METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}; expected one of {BUILTIN_METRICS}")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ConfigError("samples must be an integer >= 1")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not (math.isfinite(self.y_max) and self.y_max > 0):
            raise ConfigError("y_max must be finite and positive")
        if not (0 < self.tolerance_pass < self.tolerance_fail):
            raise ConfigError("need 0 < tolerance_pass < tolerance_fail")
        if self.fields is not None:
            bad = [f for f in self.fields if f not in FIELD_NAMES]
            if bad:
                raise ConfigError(f"unknown field(s) {bad}; expected some of {FIELD_NAMES}")
        try:
            self.build_metric()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def build_metric(self) -> ChartedMetric:
        return builtin_metric(self.metric, self.params)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AuditConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


# -- claims -------------------------------------------------------------------
_EQ2_FAMILIES = {
    "hh_h": (r"\Gamma^h_{ji}", "Christoffel symbols of the base"),
    "hh_v": (r"\Gamma^{\bar h}_{ji}", r"-\frac12 R^h_{jik} y^k"),
    "hv_h": (r"\Gamma^h_{j\bar i}", r"-\frac{1}{2\alpha} R^{h.}_{.jki} y^k"),
    "hv_v": (r"\Gamma^{\bar h}_{j\bar i}", r"\Gamma^h_{ji}"),
    "vh_h": (r"\Gamma^h_{\bar j i}", r"-\frac{1}{2\alpha} R^{h.}_{.ikj} y^k"),
    "vh_v": (r"\Gamma^{\bar h}_{\bar j i}", "0"),
    "vv_h": (r"\Gamma^h_{\bar j\bar i}", "0"),
}


def _slices(n: int, key: str):
    lower, upper = key.split("_")
    sl = {"h": slice(0, n), "v": slice(n, 2 * n)}
    return sl[upper], sl[lower[0]], sl[lower[1]]


def _family_claim(key: str) -> Claim:
    sym, rhs = _EQ2_FAMILIES[key]

    def evaluate(c: Context):
        fam = c._point("families", lambda: closed_form_families(c.m, c.p))
        return D.primal(fam[key])

    def oracle(c: Context):
        return c.koszul[_slices(c.n, key)]

    return Claim(
        f"eq2.{key}", "Levi-Civita connection of the bundle metric in the adapted frame",
        f"{sym} = {rhs}", evaluate, oracle, per_field=False,
    )


def connection_claims() -> list[Claim]:
    out = [_family_claim(k) for k in _EQ2_FAMILIES]
    out.append(
        Claim(
            "eq2.vertical_vertical",
            "Levi-Civita connection of the bundle metric in the adapted frame",
            r"\Gamma^{\bar h}_{\bar j\bar i} = -\frac1\alpha(y_j\delta^h_i + y_i\delta^h_j)"
            r" + \frac{1+\alpha}{\alpha} g_{ji} y^h - \frac1\alpha y_j y_i y^h",
            lambda c: c.vvp,
            lambda c: c.koszul[_slices(c.n, "vv_v")],
            evaluate_corrected=lambda c: c.vvc,
            per_field=False,
        )
    )
    return out


def all_claims() -> dict[str, list[Claim]]:
    """Every registered claim, grouped by the subcommand that runs it."""
    return {
        "connection": connection_claims(),
        "lifts": covector_lift_claims() + registry(),
        "killing": lie_claims(),
        "curvature": curvature_claims(),
    }


def select_claims(claims: Iterable[Claim], patterns: Sequence[str] | None) -> list[Claim]:
    """Keep claims whose id equals a pattern or starts with ``pattern + '.'``."""
    claims = list(claims)
    if not patterns:
        return claims
    return [c for c in claims if any(c.id == p or c.id.startswith(p + ".") for p in patterns)]


# -- expected verdicts ---------------------------------------------------------------
def load_expected() -> dict:
    text = resources.files("tbaudit").joinpath("expected_verdicts.json").read_text()
    return json.loads(text)


def expected_non_pass(ledger: dict, section: str, ident: str, metric: str) -> bool:
    entry = ledger.get(section, {}).get(ident)
    if entry is None:
        return False
    metrics = entry.get("metrics", ["*"])
    return "*" in metrics or metric in metrics


# -- report ----------------------------------------------------------------------------
@dataclass
class CheckResult:
    id: str
    max_abs_residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return bool(self.max_abs_residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {"id": self.id, "max_abs_residual": self.max_abs_residual,
                "tolerance": self.tolerance, "ok": self.ok}


@dataclass
class PropositionRecord:
    id: str
    consistent: bool
    notes: str
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"id": self.id, "consistent": self.consistent, "notes": self.notes, "details": self.details}


@dataclass
class AuditReport:
    config: dict
    convention_sign: int
    sign_residuals: dict
    self_checks: list[CheckResult]
    claims: list[ClaimResult]
    propositions: list[PropositionRecord]
    falsified_claims: list[str]
    unexpected: list[str]
    timing_ms: float | None = None
    version: str = SCHEMA_VERSION

    @property
    def ok(self) -> bool:
        return not self.unexpected

    def verdict_counts(self) -> dict[str, int]:
        counts = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
        for r in self.claims:
            counts[r.verdict] += 1
        return counts

    def claim(self, ident: str) -> ClaimResult:
        for r in self.claims:
            if r.id == ident:
                return r
        raise KeyError(ident)

    def proposition(self, ident: str) -> PropositionRecord:
        for r in self.propositions:
            if r.id == ident:
                return r
        raise KeyError(ident)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "tool_version": __version__,
            "config": self.config,
            "convention_sign": self.convention_sign,
            "sign_residuals": self.sign_residuals,
            "self_checks": [c.to_dict() for c in self.self_checks],
            "claims": [c.to_dict() for c in self.claims],
            "propositions": [p.to_dict() for p in self.propositions],
            "falsified_claims": self.falsified_claims,
            "unexpected": self.unexpected,
            "timing_ms": self.timing_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditReport":
        return cls(
            config=d["config"],
            convention_sign=d["convention_sign"],
            sign_residuals=d["sign_residuals"],
            self_checks=[CheckResult(c["id"], c["max_abs_residual"], c["tolerance"]) for c in d["self_checks"]],
            claims=[ClaimResult.from_dict(c) for c in d["claims"]],
            propositions=[
                PropositionRecord(p["id"], p["consistent"], p["notes"], p.get("details", {}))
                for p in d["propositions"]
            ],
            falsified_claims=list(d["falsified_claims"]),
            unexpected=list(d["unexpected"]),
            timing_ms=d["timing_ms"],
            version=d["version"],
        )


# -- per-field maxima feeding the propositions ------------------------------------------
class _FieldStats:
    KEYS = (
        "nabla", "nabla_sym", "nabla_skew", "second", "complete_parallel", "horizontal_parallel",
        "complete_rotation", "horizontal_rotation", "complete_lie", "horizontal_lie", "printed_lie",
    )

    def __init__(self):
        self.max = dict.fromkeys(self.KEYS, 0.0)
        self.count = 0

    def _up(self, key: str, value: float) -> None:
        self.max[key] = max(self.max[key], float(value))

    def add(self, c: Context, groups: Sequence[str]) -> None:
        self.count += 1
        self._up("nabla", np.abs(c.nabX).max())
        self._up("nabla_sym", np.abs(c.nabXl + c.nabXl.T).max())
        self._up("nabla_skew", np.abs(c.nabXl - c.nabXl.T).max())
        self._up("second", np.abs(c.nnX).max())
        if "lifts" in groups:
            self._up("complete_parallel", np.abs(c.nabla_lift("complete")).max())
            self._up("horizontal_parallel", np.abs(c.nabla_lift("horizontal")).max())
            self._up("complete_rotation", np.abs(c.rotation_colift("complete")).max())
            self._up("horizontal_rotation", np.abs(c.rotation_colift("horizontal")).max())
        if "killing" in groups:
            self._up("complete_lie", np.abs(c.lie("complete")).max())
            self._up("horizontal_lie", np.abs(c.lie("horizontal")).max())
            b = complete_lie_blocks(c)
            self._up("printed_lie", max(np.abs(v).max() for v in b.values()))


def _propositions(stats: dict[str, _FieldStats], flat: dict | None, groups) -> list[PropositionRecord]:
    out = []
    stats = {k: s for k, s in stats.items() if s.count}
    if "lifts" in groups and stats:
        det, ok = {}, True
        for name, s in stats.items():
            mx = s.max
            base = mx["nabla"] <= PARALLEL_TOL
            comp = mx["complete_parallel"] <= PARALLEL_TOL
            hor = mx["horizontal_parallel"] <= PARALLEL_TOL
            det[name] = {"base_parallel": base, "complete_parallel": comp, "horizontal_parallel": hor}
            ok &= base == (comp and hor)
        out.append(PropositionRecord(
            "prop1", ok, "base field parallel iff complete and horizontal lifts parallel", det))

        det, ok = {}, True
        for name, s in stats.items():
            mx = s.max
            closed = mx["nabla_skew"] <= CLOSED_TOL
            second = mx["second"] <= CLOSED_TOL
            comp = mx["complete_rotation"] <= CLOSED_TOL
            hor = mx["horizontal_rotation"] <= CLOSED_TOL
            det[name] = {
                "base_closed": closed, "second_cov_deriv_zero": second,
                "complete_lift_closed": comp, "horizontal_lift_closed": hor,
                "horizontal_equivalence": closed == hor,
            }
            ok &= (not (closed and second)) or comp
        out.append(PropositionRecord(
            "prop2", ok,
            "closed with vanishing second derivative implies closed complete lift; "
            "horizontal-lift equivalence listed per field", det))

    if "killing" in groups and stats:
        det3a, det3b, ok_a, ok_b = {}, {}, True, True
        for name, s in stats.items():
            mx = s.max
            bk = mx["nabla_sym"] <= KILLING_TOL
            cz = mx["nabla"] <= KILLING_TOL
            sz = mx["second"] <= KILLING_TOL
            ck = mx["complete_lie"] <= KILLING_TOL
            hk = mx["horizontal_lie"] <= KILLING_TOL
            det3a[name] = {"base_killing": bk, "cov_deriv_zero": cz, "complete_lift_killing": ck,
                           "max_complete_lie": mx["complete_lie"], "max_printed_complete_lie": mx["printed_lie"]}
            det3b[name] = {"base_killing": bk, "second_cov_deriv_zero": sz, "horizontal_lift_killing": hk,
                           "max_horizontal_lie": mx["horizontal_lie"]}
            ok_a &= ck == (bk and cz)
            ok_b &= hk == (bk and sz)
        out.append(PropositionRecord(
            "prop3a", ok_a, "complete lift Killing iff base Killing with vanishing covariant derivative "
            "(oracle classification; informational)", det3a))
        out.append(PropositionRecord(
            "prop3b", ok_b, "horizontal lift Killing iff base Killing with vanishing second covariant "
            "derivative (oracle classification; informational)", det3b))

    if flat is not None:
        out.append(PropositionRecord(
            "prop4", flat["base_flat"] == flat["bundle_flat"],
            "bundle locally flat iff base locally flat", flat))
    return out


# -- driver ---------------------------------------------------------------------------
def _ricci_covector(n: int):
    w = 1.0 + np.arange(n)

    def omega(x):
        return D.stack([w[k] * D.sin(x[k]) + x[0] * x[k] for k in range(n)])

    return omega


def run_audit(
    config: AuditConfig,
    groups: Sequence[str] = GROUPS,
    with_timing: bool = False,
    ledger: dict | None = None,
) -> AuditReport:
    """Sample, audit every selected claim, and collect the proposition records."""
    t0 = time.perf_counter()
    config.validate()
    groups = tuple(g for g in GROUPS if g in groups)
    m = config.build_metric()
    n = m.dim
    points = sample_bundle_points(m, config.samples, config.seed, config.y_max)
    ledger = load_expected() if ledger is None else ledger

    registry_by_group = all_claims()
    claims = {g: select_claims(registry_by_group[g], config.claims) for g in groups}
    field_names = tuple(config.fields) if config.fields else DEFAULT_FIELDS
    fields: list[NamedField] = fields_for(m, field_names)

    sign, worst = pin_convention_sign(m, points)
    checks = {
        "base.metric_compatibility": [0.0, ORACLE_TOL],
        "base.ricci_identity": [0.0, RICCI_TOL],
        "oracle.metric_compatibility": [0.0, ORACLE_TOL],
        "oracle.torsion": [0.0, ORACLE_TOL],
    }
    if "curvature" in groups:
        checks["curvature.antisymmetry"] = [0.0, ANTISYM_TOL]
        checks["curvature.pair_symmetry"] = [0.0, PAIR_TOL]

    point_accs = [Accumulator(c) for g in groups for c in claims[g] if not c.per_field]
    field_accs = [Accumulator(c) for g in groups for c in claims[g] if c.per_field]
    stats = {f.name: _FieldStats() for f in fields}
    omega = _ricci_covector(n)
    base_curv = bundle_curv = 0.0

    def bump(key, value):
        checks[key][0] = max(checks[key][0], float(value))

    for idx, p in enumerate(points):
        shared: dict = {}
        ctx = Context(m, p, None, shared)
        base_curv = max(base_curv, float(np.abs(ctx.R).max()))
        bump("base.metric_compatibility", base_compat_residual(m, p.x))
        bump("base.ricci_identity", ricci_identity_residual(m, omega, p.x))
        bump("oracle.metric_compatibility", metric_compatibility_residual(m, p, ctx.koszul))
        bump("oracle.torsion", torsion_residual(m, p, ctx.koszul))
        if "curvature" in groups:
            table = ctx.curvature("oracle")
            bump("curvature.antisymmetry", antisymmetry_residual(table))
            bump("curvature.pair_symmetry", pair_symmetry_residual(ctx.G, table))
            bundle_curv = max(bundle_curv, float(np.abs(table).max()))
        for acc in point_accs:
            acc.add(ctx, f"sample {idx}")
        for fld in fields:
            if not fld.defined_at(p.x):
                for acc in field_accs:
                    acc.skipped += 1
                continue
            fctx = Context(m, p, fld, shared)
            if not np.all(np.isfinite(fctx.X)):
                for acc in field_accs:
                    acc.skipped += 1
                continue
            for acc in field_accs:
                acc.add(fctx, f"sample {idx}, field {fld.name}")
            stats[fld.name].add(fctx, groups)

    flat = None
    if "curvature" in groups:
        flat = {
            "base_flat": base_curv <= BASE_FLAT_TOL,
            "bundle_flat": bundle_curv <= BUNDLE_FLAT_TOL,
            "max_base_curv": base_curv,
            "max_bundle_curv": bundle_curv,
        }
    props = _propositions(stats, flat, groups)

    # keep registry order within each group
    by_id = {a.claim.id: a for a in point_accs + field_accs}
    results = [
        by_id[c.id].result(config.tolerance_pass, config.tolerance_fail)
        for g in groups for c in claims[g]
    ]
    self_checks = [CheckResult(k, v[0], v[1]) for k, v in checks.items()]
    if base_curv > BASE_FLAT_TOL:
        self_checks.append(CheckResult("convention.sign_pinned", 0.0 if sign == CONVENTION_SIGN else 1.0, 0.0))
        self_checks.append(CheckResult("convention.sign_separation", max(0.0, SIGN_SEPARATION - worst[-sign]), 0.0))

    falsified = [r.id for r in results if r.verdict == FAIL]
    unexpected = [f"self_check:{c.id}" for c in self_checks if not c.ok]
    unexpected += [
        r.id for r in results
        if r.verdict != PASS and not expected_non_pass(ledger, "claims", r.id, config.metric)
    ]
    unexpected += [
        f"proposition:{p.id}" for p in props
        if not p.consistent and not expected_non_pass(ledger, "propositions", p.id, config.metric)
    ]
    timing = round((time.perf_counter() - t0) * 1000.0, 3) if with_timing else None
    return AuditReport(
        config=config.to_dict(),
        convention_sign=int(sign),
        sign_residuals={"+1": worst[1], "-1": worst[-1]},
        self_checks=self_checks,
        claims=results,
        propositions=props,
        falsified_claims=falsified,
        unexpected=unexpected,
        timing_ms=timing,
    )


# -- rendering -------------------------------------------------------------------------
def _clip(text: str, width: int) -> str:
    return text if len(text) <= width else text[: width - 3] + "..."


def render_report(report: AuditReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"
    if fmt != "table":
        raise ValueError("format must be 'json' or 'table'")
    cfg = report.config
    lines = [
        f"metric {cfg['metric']} {cfg['params']}  samples {cfg['samples']}  seed {cfg['seed']}"
        f"  y_max {cfg['y_max']}  convention_sign {report.convention_sign:+d}",
        "",
        f"{'id':<24} {'location':<44} {'verdict':<12} {'max residual':>13} {'corrected':>11}",
        "-" * 108,
    ]
    for r in report.claims:
        corr = "" if r.corrected_residual is None else f"{r.corrected_residual:.3e}"
        lines.append(
            f"{_clip(r.id, 24):<24} {_clip(r.location, 44):<44} {r.verdict:<12}"
            f" {r.max_abs_residual:>13.3e} {corr:>11}"
        )
    lines.append("-" * 108)
    counts = report.verdict_counts()
    lines.append(
        f"{len(report.claims)} claims: {counts[PASS]} PASS, {counts[FAIL]} FAIL, "
        f"{counts[INCONCLUSIVE]} INCONCLUSIVE"
    )
    lines.append("")
    lines.append("self checks:")
    for c in report.self_checks:
        lines.append(f"  {c.id:<32} {'ok' if c.ok else 'VIOLATED':<9} {c.max_abs_residual:.3e} (tol {c.tolerance:.0e})")
    if report.propositions:
        lines.append("propositions:")
        for p in report.propositions:
            lines.append(f"  {p.id:<8} {'consistent' if p.consistent else 'inconsistent':<13} {p.notes}")
    if report.falsified_claims:
        lines.append("falsified: " + ", ".join(report.falsified_claims))
    lines.append("unexpected: " + (", ".join(report.unexpected) if report.unexpected else "none"))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> AuditReport:
    return AuditReport.from_dict(json.loads(text))


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tbaudit-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

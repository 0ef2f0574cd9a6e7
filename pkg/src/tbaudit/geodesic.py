"""Geodesics of (TM, CG metric) in induced coordinates."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dual as D
from .base import ChartedMetric, GeometryError, christoffel, metric_derivatives
from .bundle import BundlePoint, bundle_jvp, coordinate_metric, frame_inverse, frame_matrix
from .connection import koszul_connection


@dataclass(frozen=True)
class GeodesicState:
    q: np.ndarray  # (x, y)
    v: np.ndarray  # dq/dt
    t: float = 0.0


@dataclass
class Trajectory:
    dim: int
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    velocities: list[np.ndarray] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    # index of the first step that left the chart, if any
    exit_index: int | None = None

    @property
    def q(self) -> np.ndarray:
        return np.array(self.states)

    @property
    def v(self) -> np.ndarray:
        return np.array(self.velocities)

    @property
    def complete(self) -> bool:
        return self.exit_index is None

    def energy_drift(self) -> float:
        e = np.asarray(self.energies)
        if e[0] == 0.0:
            return float(np.abs(e - e[0]).max())
        return float(np.abs(e - e[0]).max() / abs(e[0]))

    def to_csv(self) -> str:
        n = self.dim
        cols = (
            ["t"]
            + [f"x{i + 1}" for i in range(n)]
            + [f"y{i + 1}" for i in range(n)]
            + [f"v{i + 1}" for i in range(2 * n)]
            + ["energy"]
        )
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for t, q, v, e in zip(self.times, self.states, self.velocities, self.energies):
            row = [t, *q, *v, e]
            buf.write(",".join(repr(float(a)) for a in row) + "\n")
        return buf.getvalue()


def coordinate_connection(m: ChartedMetric, p: BundlePoint) -> np.ndarray:
    """Christoffel symbols ``Γ^c_ab`` in induced coordinates, as ``[c, a, b]``.

    Obtained from the adapted-frame Koszul connection by the frame change
    ``∂_b = B^β_b X_β`` with ``B = A⁻¹``.
    """
    N = 2 * m.dim
    A = D.primal(frame_matrix(m, p))
    B = D.primal(frame_inverse(m, p))
    gam = D.primal(koszul_connection(m, p))
    eye = np.eye(N)
    dB = np.stack([D.primal(bundle_jvp(lambda q: frame_inverse(m, q), m, p, eye[a])) for a in range(N)])
    return np.einsum("cb,abk->cak", A, dB) + np.einsum("cg,gab,ai,bk->cik", A, gam, B, B)


@dataclass(frozen=True)
class BaseJets:
    """``g``, ``∂g``, ``Γ`` and ``∂Γ`` of the base at one point (derivative index first)."""

    g: np.ndarray
    dg: np.ndarray
    gam: np.ndarray
    dgam: np.ndarray

    @classmethod
    def at(cls, m: ChartedMetric, x: np.ndarray) -> "BaseJets":
        return cls(
            D.primal(m(x)),
            D.primal(metric_derivatives(m, x)),
            D.primal(christoffel(m, x)),
            D.primal(D.jacobian(lambda z: christoffel(m, z), x)),
        )


def _metric_from_jets(j: BaseJets, y: np.ndarray):
    yl = j.g @ y
    alpha = 1.0 + yl @ y
    H = (j.g + np.outer(yl, yl)) / alpha
    L = np.einsum("s,hsi->hi", y, j.gam)
    HL = H @ L
    return np.block([[j.g + L.T @ HL, HL.T], [HL, H]]), (yl, alpha, H, L, HL)


def coordinate_metric_jet(j: BaseJets, y: np.ndarray) -> np.ndarray:
    """Induced-coordinate metric ``[[g + LᵀHL, LᵀH], [HL, H]]``.

    ``L^h_i = y^s Γ^h_si`` and ``H = (g + y♭y♭ᵀ)/α``.
    """
    return _metric_from_jets(j, y)[0]


def coordinate_connection_jet(j: BaseJets, y: np.ndarray) -> np.ndarray:
    """Same symbols as :func:`coordinate_connection`, assembled from base jets.

    Only the base quantities go through dual numbers; the induced-coordinate
    metric and its partial derivatives are written out in plain numpy. Several
    times cheaper per evaluation, which matters for long trajectories.
    """
    n = j.g.shape[0]
    g, dg, gam = j.g, j.dg, j.gam
    Gc, (yl, alpha, H, L, HL) = _metric_from_jets(j, y)

    # partial derivatives along the 2n induced coordinates, stacked first
    dL = np.concatenate([np.einsum("s,ahsi->ahi", y, j.dgam), gam.transpose(1, 0, 2)])
    dyl = np.concatenate([np.einsum("aij,j->ai", dg, y), g])  # [a, i]
    dalpha = np.concatenate([np.einsum("i,aij,j->a", y, dg, y), 2.0 * yl])
    dgx = np.concatenate([dg, np.zeros((n, n, n))])
    dH = (
        dgx + np.einsum("ai,j->aij", dyl, yl) + np.einsum("i,aj->aij", yl, dyl)
    ) / alpha - np.einsum("a,ij->aij", dalpha, H) / alpha

    d_HL = np.einsum("aij,jk->aik", dH, L) + np.einsum("ij,ajk->aik", H, dL)
    d_xx = dgx + np.einsum("aji,jk->aik", dL, HL) + np.einsum("ji,ajk->aik", L, d_HL)
    dGc = np.concatenate(
        [
            np.concatenate([d_xx, d_HL.transpose(0, 2, 1)], axis=2),
            np.concatenate([d_HL, dH], axis=2),
        ],
        axis=1,
    )  # [a, b, c] = ∂_a Gc_bc
    low = 0.5 * (dGc.transpose(1, 0, 2) + dGc.transpose(1, 2, 0) - dGc)  # [d, a, b]
    return np.linalg.solve(Gc, low.reshape(2 * n, -1)).reshape(2 * n, 2 * n, 2 * n)


CONNECTIONS = ("jet", "koszul")


class _Jets:
    """Base jets of the most recent point; the RK4 stage after a recorded
    state reuses the jets its energy needed."""

    def __init__(self, m: ChartedMetric):
        self.m = m
        self.key = None
        self.value = None

    def __call__(self, x: np.ndarray) -> BaseJets:
        key = x.tobytes()
        if key != self.key:
            self.key, self.value = key, BaseJets.at(self.m, x)
        return self.value


def _rhs(m, jets: _Jets, q: np.ndarray, v: np.ndarray, method: str) -> tuple[np.ndarray, np.ndarray]:
    n = m.dim
    if not m.contains(q[:n]):
        raise GeometryError("trajectory left the chart domain")
    if method == "koszul":
        gc = coordinate_connection(m, BundlePoint.at(m, q[:n], q[n:]))
    else:
        gc = coordinate_connection_jet(jets(q[:n]), q[n:])
    return v, -np.einsum("cab,a,b->c", gc, v, v)


def energy(m: ChartedMetric, q: np.ndarray, v: np.ndarray) -> float:
    """``g(v, v)`` for the CG metric in induced coordinates."""
    n = m.dim
    G = D.primal(coordinate_metric(m, BundlePoint.at(m, q[:n], q[n:])))
    return float(v @ G @ v)


def geodesic_integrate(
    m: ChartedMetric,
    start: GeodesicState,
    step: float,
    n_steps: int,
    connection: str = "jet",
) -> Trajectory:
    """Classical RK4 on the geodesic equation.

    ``connection`` selects how the induced-coordinate Christoffel symbols
    are obtained: ``"koszul"`` frame-transforms the adapted-frame oracle at
    every stage, ``"jet"`` assembles them from base jets (identical values,
    much faster). Leaving the chart stops the integration; the partial
    trajectory is returned with ``exit_index`` set to the step that failed.
    """
    if connection not in CONNECTIONS:
        raise ValueError(f"connection must be one of {CONNECTIONS}")
    if not step > 0:
        raise ValueError("step must be positive")
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    n = m.dim
    q = np.asarray(start.q, dtype=float).copy()
    v = np.asarray(start.v, dtype=float).copy()
    if q.shape != (2 * n,) or v.shape != (2 * n,):
        raise ValueError(f"state must have {2 * n} components")
    m.require(q[:n])
    t = float(start.t)
    traj = Trajectory(dim=n)
    jets = _Jets(m)

    def record():
        traj.times.append(t)
        traj.states.append(q.copy())
        traj.velocities.append(v.copy())
        G = coordinate_metric_jet(jets(q[:n]), q[n:])
        traj.energies.append(float(v @ G @ v))

    record()
    h = float(step)
    for k in range(n_steps):
        try:
            k1q, k1v = _rhs(m, jets, q, v, connection)
            k2q, k2v = _rhs(m, jets, q + 0.5 * h * k1q, v + 0.5 * h * k1v, connection)
            k3q, k3v = _rhs(m, jets, q + 0.5 * h * k2q, v + 0.5 * h * k2v, connection)
            k4q, k4v = _rhs(m, jets, q + h * k3q, v + h * k3v, connection)
        except GeometryError:
            traj.exit_index = k + 1
            break
        q = q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        t = t + h
        if not m.contains(q[:n]):
            traj.exit_index = k + 1
            break
        record()
    return traj


def geodesic_from(m: ChartedMetric, x: Sequence[float], y: Sequence[float], v: Sequence[float]) -> GeodesicState:
    return GeodesicState(np.concatenate([np.asarray(x, float), np.asarray(y, float)]), np.asarray(v, float))

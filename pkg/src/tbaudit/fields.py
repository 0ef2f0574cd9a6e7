"""Named smooth vector fields on the builtin charts.

Fields take chart coordinates (possibly dual) and return contravariant
components. ``named_field`` returns ``None`` when a name has no sensible
meaning on a metric (e.g. ``rotational`` in dimension one).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import dual as D
from .base import ChartedMetric

FIELD_NAMES = ("zero", "constant", "linear", "rotational", "killing", "gradient")
DEFAULT_FIELDS = ("constant", "linear", "rotational", "killing", "gradient")


@dataclass(frozen=True)
class NamedField:
    name: str
    fn: Callable[[Any], Any]
    domain: Callable[[np.ndarray], bool] | None = None

    def __call__(self, x):
        return self.fn(x)

    def defined_at(self, x) -> bool:
        return self.domain is None or bool(self.domain(D.primal(x)))


def gradient_field(m: ChartedMetric, height: Callable[[Any], Any]) -> Callable[[Any], Any]:
    """``X^h = g^{hk} ∂_k f`` for a scalar function ``f``."""

    def grad(x):
        df = D.jacobian(height, x)
        return D.einsum("hk,k->h", D.inv(m(x)), df)

    return grad


def _linear_matrix(n: int) -> np.ndarray:
    h, k = np.indices((n, n))
    return 0.5 + 0.25 * h - 0.4 * k


def _killing(m: ChartedMetric) -> Callable | None:
    n = m.dim
    if m.name == "sphere":
        return lambda x: D.asarray([0.0, 1.0])
    if m.name == "hyperbolic_half_plane":
        # dilation x∂_x + y∂_y is an isometry generator with ∇X ≠ 0
        return lambda x: D.stack([x[0], x[1]])
    if m.name == "euclidean" and n >= 2:
        return _rotation(n)
    # flat metrics without rotations: translations
    e1 = np.eye(n)[0]
    return lambda x: e1


def _rotation(n: int) -> Callable:
    def rot(x):
        comps = [-x[1], x[0]] + [0.0] * (n - 2)
        return D.stack(comps)

    return rot


def _height(m: ChartedMetric) -> Callable[[Any], Any]:
    if m.name == "sphere":
        radius = m.params[0]
        return lambda x: radius * D.cos(x[0])
    if m.name == "hyperbolic_half_plane":
        return lambda x: D.log(x[1]) + 0.3 * x[0]
    return lambda x: x[m.dim - 1] + 0.25 * x[0] * x[0]


def named_field(name: str, m: ChartedMetric) -> NamedField | None:
    n = m.dim
    if name == "zero":
        z = np.zeros(n)
        return NamedField(name, lambda x: z)
    if name == "constant":
        c = 1.0 / (1.0 + np.arange(n))
        return NamedField(name, lambda x: c)
    if name == "linear":
        A = _linear_matrix(n)
        b = 0.1 * np.ones(n)
        return NamedField(name, lambda x: D.einsum("hk,k->h", A, x) + b)
    if name == "rotational":
        if n < 2:
            return None
        return NamedField(name, _rotation(n))
    if name == "killing":
        return NamedField(name, _killing(m))
    if name == "gradient":
        return NamedField(name, gradient_field(m, _height(m)))
    raise KeyError(f"unknown field {name!r}; expected one of {FIELD_NAMES}")


def fields_for(m: ChartedMetric, names=DEFAULT_FIELDS) -> list[NamedField]:
    out = []
    for name in names:
        f = named_field(name, m)
        if f is not None:
            out.append(f)
    return out

"""Nestable dual numbers for forward-mode automatic differentiation.

A :class:`Dual` carries a primal array ``re`` and a tangent array ``eps`` of
the same shape. Either part may itself be a :class:`Dual` with an older tag,
which is how higher derivatives are taken: differentiate a function that
already differentiates internally. Tags order the perturbations so that an
inner derivative never confuses its tangent with an outer one.

All geometry kernels in this package are written against the functions in
this module (``sin``, ``einsum``, ``stack``, ``inv`` ...) so that the same
code runs on plain floats and on dual numbers of any nesting depth.
"""

from __future__ import annotations

import itertools
from typing import Any, Callable, Iterable

import numpy as np

_tags = itertools.count(1)


class Dual:
    """Primal value plus a first-order tangent under one perturbation tag."""

    __slots__ = ("re", "eps", "tag")
    # Make ndarray and numpy scalar operators defer to our reflected methods.
    __array_ufunc__ = None

    def __init__(self, re: Any, eps: Any, tag: int):
        self.re = re
        self.eps = eps
        self.tag = tag

    def __repr__(self) -> str:
        return f"Dual(re={self.re!r}, eps={self.eps!r}, tag={self.tag})"

    # -- array protocol ------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return shape(self.re)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def __len__(self) -> int:
        return self.shape[0]

    def __getitem__(self, idx) -> "Dual":
        return Dual(self.re[idx], self.eps[idx], self.tag)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def T(self) -> "Dual":
        return Dual(self.re.T, self.eps.T, self.tag)

    def transpose(self, *axes) -> "Dual":
        return Dual(self.re.transpose(*axes), self.eps.transpose(*axes), self.tag)

    def swapaxes(self, a: int, b: int) -> "Dual":
        return Dual(self.re.swapaxes(a, b), self.eps.swapaxes(a, b), self.tag)

    def reshape(self, *newshape) -> "Dual":
        return Dual(self.re.reshape(*newshape), self.eps.reshape(*newshape), self.tag)

    def sum(self, axis=None) -> "Dual":
        return Dual(self.re.sum(axis=axis), self.eps.sum(axis=axis), self.tag)

    def __float__(self) -> float:
        return float(primal(self))

    # comparisons only ever look at the primal part
    def __lt__(self, other):
        return primal(self) < primal(other)

    def __le__(self, other):
        return primal(self) <= primal(other)

    def __gt__(self, other):
        return primal(self) > primal(other)

    def __ge__(self, other):
        return primal(self) >= primal(other)

    # -- arithmetic ----------------------------------------------------------
    def __neg__(self) -> "Dual":
        return Dual(-self.re, -self.eps, self.tag)

    def __pos__(self) -> "Dual":
        return self

    def __add__(self, other):
        return _add(self, other)

    def __radd__(self, other):
        return _add(other, self)

    def __sub__(self, other):
        return _add(self, -other)

    def __rsub__(self, other):
        return _add(other, -self)

    def __mul__(self, other):
        return _mul(self, other)

    def __rmul__(self, other):
        return _mul(other, self)

    def __truediv__(self, other):
        return _div(self, other)

    def __rtruediv__(self, other):
        return _div(other, self)

    def __matmul__(self, other):
        return _matmul(self, other)

    def __rmatmul__(self, other):
        return _matmul(other, self)

    def __pow__(self, power):
        if isinstance(power, Dual):
            return exp(power * log(self))
        return Dual(self.re**power, power * self.re ** (power - 1) * self.eps, self.tag)


# -- helpers -------------------------------------------------------------------
def shape(v: Any) -> tuple[int, ...]:
    if isinstance(v, Dual):
        return v.shape
    return np.shape(v)


def primal(v: Any) -> np.ndarray:
    """Strip every tangent layer and return the float value."""
    while isinstance(v, Dual):
        v = v.re
    return np.asarray(v, dtype=float)


def is_dual(v: Any) -> bool:
    return isinstance(v, Dual)


def _top_tag(values: Iterable[Any]) -> int | None:
    top = None
    for v in values:
        if isinstance(v, Dual) and (top is None or v.tag > top):
            top = v.tag
    return top


def _parts(v: Any, tag: int) -> tuple[Any, Any]:
    if isinstance(v, Dual) and v.tag == tag:
        return v.re, v.eps
    return v, None


def _fit(eps: Any, shp: tuple[int, ...]) -> Any:
    if shape(eps) != shp:
        return eps + np.zeros(shp)
    return eps


def _add(a, b):
    tag = _top_tag((a, b))
    ar, ae = _parts(a, tag)
    br, be = _parts(b, tag)
    re = ar + br
    if ae is None:
        eps = be
    elif be is None:
        eps = ae
    else:
        eps = ae + be
    return Dual(re, _fit(eps, shape(re)), tag)


def _mul(a, b):
    tag = _top_tag((a, b))
    ar, ae = _parts(a, tag)
    br, be = _parts(b, tag)
    re = ar * br
    if be is None:
        eps = ae * br
    elif ae is None:
        eps = ar * be
    else:
        eps = ae * br + ar * be
    return Dual(re, _fit(eps, shape(re)), tag)


def _div(a, b):
    tag = _top_tag((a, b))
    ar, ae = _parts(a, tag)
    br, be = _parts(b, tag)
    re = ar / br
    if be is None:
        eps = ae / br
    else:
        eps = -(re * be) / br
        if ae is not None:
            eps = eps + ae / br
    return Dual(re, _fit(eps, shape(re)), tag)


def _matmul(a, b):
    tag = _top_tag((a, b))
    ar, ae = _parts(a, tag)
    br, be = _parts(b, tag)
    re = ar @ br
    if be is None:
        eps = ae @ br
    elif ae is None:
        eps = ar @ be
    else:
        eps = ae @ br + ar @ be
    return Dual(re, eps, tag)


# -- elementary functions ----------------------------------------------------
def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.re), cos(x.re) * x.eps, x.tag)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.re), -sin(x.re) * x.eps, x.tag)
    return np.cos(x)


def tan(x):
    return sin(x) / cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.re)
        return Dual(e, e * x.eps, x.tag)
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.re), x.eps / x.re, x.tag)
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.re)
        return Dual(s, x.eps / (2.0 * s), x.tag)
    return np.sqrt(x)


# -- array construction and linear algebra -------------------------------------
def asarray(v: Any) -> Any:
    """Turn a (possibly nested) list of floats and duals into one array-like."""
    if isinstance(v, Dual):
        return v
    if isinstance(v, (list, tuple)):
        if any(isinstance(e, (Dual, list, tuple)) for e in v):
            return stack([asarray(e) for e in v])
    return np.asarray(v, dtype=float)


def stack(seq: Iterable[Any], axis: int = 0) -> Any:
    seq = list(seq)
    tag = _top_tag(seq)
    if tag is None:
        return np.stack([np.asarray(s, dtype=float) for s in seq], axis=axis)
    res, eps = [], []
    for s in seq:
        r, e = _parts(s, tag)
        res.append(r)
        eps.append(np.zeros(shape(r)) if e is None else e)
    return Dual(stack(res, axis), stack(eps, axis), tag)


def concatenate(seq: Iterable[Any], axis: int = 0) -> Any:
    seq = list(seq)
    tag = _top_tag(seq)
    if tag is None:
        return np.concatenate([np.asarray(s, dtype=float) for s in seq], axis=axis)
    res, eps = [], []
    for s in seq:
        r, e = _parts(s, tag)
        res.append(r)
        eps.append(np.zeros(shape(r)) if e is None else e)
    return Dual(concatenate(res, axis), concatenate(eps, axis), tag)


def block(rows: list[list[Any]]) -> Any:
    """Assemble a 2-D array from a nested list of 2-D blocks."""
    return concatenate([concatenate(row, axis=1) for row in rows], axis=0)


def diag(entries: Iterable[Any]) -> Any:
    entries = list(entries)
    n = len(entries)
    rows = [[entries[i] if i == j else 0.0 for j in range(n)] for i in range(n)]
    return stack([stack(r) for r in rows])


def einsum(subscripts: str, *operands: Any) -> Any:
    tag = _top_tag(operands)
    if tag is None:
        return np.einsum(subscripts, *operands)
    split = [_parts(op, tag) for op in operands]
    re = einsum(subscripts, *(r for r, _ in split))
    eps = None
    for k, (_, e) in enumerate(split):
        if e is None:
            continue
        args = [r for r, _ in split]
        args[k] = e
        term = einsum(subscripts, *args)
        eps = term if eps is None else eps + term
    return Dual(re, eps, tag)


def inv(a: Any) -> Any:
    if isinstance(a, Dual):
        ai = inv(a.re)
        return Dual(ai, -(ai @ a.eps @ ai), a.tag)
    return np.linalg.inv(a)


def swapaxes(a: Any, i: int, j: int) -> Any:
    return a.swapaxes(i, j)


# -- differentiation -----------------------------------------------------------
def tangent(out: Any, tag: int) -> Any:
    if isinstance(out, Dual) and out.tag == tag:
        return out.eps
    return np.zeros(shape(out))


def jvp(f: Callable[[Any], Any], x: Any, v: Any) -> Any:
    """Directional derivative of ``f`` at ``x`` along ``v``.

    ``x`` may already be a dual number (for nested derivatives); ``v`` may be
    too, when the direction itself depends on an outer perturbation.
    """
    tag = next(_tags)
    if not isinstance(v, Dual):
        v = np.broadcast_to(np.asarray(v, dtype=float), shape(x))
    return tangent(asarray(f(Dual(x, v, tag))), tag)


def jvp_with_value(f: Callable[[Any], Any], x: Any, v: Any) -> tuple[Any, Any]:
    tag = next(_tags)
    if not isinstance(v, Dual):
        v = np.broadcast_to(np.asarray(v, dtype=float), shape(x))
    out = asarray(f(Dual(x, v, tag)))
    if isinstance(out, Dual) and out.tag == tag:
        return out.re, out.eps
    return out, np.zeros(shape(out))


def jacobian(f: Callable[[Any], Any], x: Any) -> Any:
    """Stack of partial derivatives; the derivative index comes first."""
    n = shape(x)[0]
    eye = np.eye(n)
    return stack([jvp(f, x, eye[k]) for k in range(n)])


def derivative(f: Callable[[Any], Any], x0: float) -> float:
    """Scalar derivative, mainly a convenience for tests."""
    return float(primal(jvp(f, np.asarray(float(x0)), 1.0)))

"""Forward-mode dual numbers over numpy arrays, with nesting.

A ``Dual`` carries a primal value ``v`` and a tangent ``d`` for one
perturbation ``tag``.  Nesting happens by letting ``v`` and ``d`` themselves be
``Dual`` objects with older (smaller) tags, so a derivative can be taken of a
function that internally takes derivatives.  Newer tags always sit on the
outside, which keeps perturbations from different levels apart.

A tangent of ``None`` means "identically zero" and lets constant operands skip
work.  Functions that must see through duals (``exp``, ``inv``, ``einsum`` ...)
live in this module; plain numpy functions must only be applied to primal
values.
"""
from __future__ import annotations

import itertools

import numpy as np

_tags = itertools.count(1)


def new_tag() -> int:
    return next(_tags)


class Dual:
    __slots__ = ("v", "d", "tag")
    __array_ufunc__ = None  # make numpy defer to our reflected operators
    __array_priority__ = 1000

    def __init__(self, v, d, tag):
        self.v = v
        self.d = d
        self.tag = tag

    # shape helpers -------------------------------------------------------
    @property
    def shape(self):
        return np.shape(primal(self))

    @property
    def ndim(self):
        return len(self.shape)

    def __len__(self):
        return self.shape[0]

    def __repr__(self):
        return f"Dual(v={self.v!r}, d={self.d!r}, tag={self.tag})"

    # arithmetic ----------------------------------------------------------
    def __add__(self, other):
        return _binary(self, other, _add)

    def __radd__(self, other):
        return _binary(other, self, _add)

    def __sub__(self, other):
        return _binary(self, other, _sub)

    def __rsub__(self, other):
        return _binary(other, self, _sub)

    def __mul__(self, other):
        return _binary(self, other, _mul)

    def __rmul__(self, other):
        return _binary(other, self, _mul)

    def __truediv__(self, other):
        return _binary(self, other, _div)

    def __rtruediv__(self, other):
        return _binary(other, self, _div)

    def __matmul__(self, other):
        return _binary(self, other, _matmul)

    def __rmatmul__(self, other):
        return _binary(other, self, _matmul)

    def __neg__(self):
        return Dual(-self.v, None if self.d is None else -self.d, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if isinstance(n, Dual):
            return exp(n * log(self))
        d = None if self.d is None else n * self.v ** (n - 1) * self.d
        return Dual(self.v**n, d, self.tag)

    def __getitem__(self, idx):
        return Dual(self.v[idx], None if self.d is None else self.d[idx], self.tag)

    @property
    def T(self):
        return Dual(self.v.T, None if self.d is None else self.d.T, self.tag)

    def reshape(self, *shape):
        d = None if self.d is None else self.d.reshape(*shape)
        return Dual(self.v.reshape(*shape), d, self.tag)

    def sum(self, axis=None):
        d = None if self.d is None else sum_(self.d, axis)
        return Dual(sum_(self.v, axis), d, self.tag)


# --------------------------------------------------------------------------
# tag bookkeeping


def _tag_of(x):
    return x.tag if isinstance(x, Dual) else 0


def _split(x, tag):
    """Primal and tangent of ``x`` with respect to ``tag``."""
    if isinstance(x, Dual) and x.tag == tag:
        return x.v, x.d
    return x, None


def _plus(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _add(av, ad, bv, bd):
    return av + bv, _plus(ad, bd)


def _sub(av, ad, bv, bd):
    return av - bv, _plus(ad, None if bd is None else -bd)


def _mul(av, ad, bv, bd):
    return av * bv, _plus(None if ad is None else ad * bv, None if bd is None else av * bd)


def _div(av, ad, bv, bd):
    v = av / bv
    t1 = None if ad is None else ad / bv
    t2 = None if bd is None else -(v * bd) / bv
    return v, _plus(t1, t2)


def _matmul(av, ad, bv, bd):
    return av @ bv, _plus(None if ad is None else ad @ bv, None if bd is None else av @ bd)


def _binary(a, b, rule):
    tag = max(_tag_of(a), _tag_of(b))
    av, ad = _split(a, tag)
    bv, bd = _split(b, tag)
    v, d = rule(av, ad, bv, bd)
    return Dual(v, d, tag)


def primal(x):
    """Strip every perturbation level and return the plain ndarray value."""
    while isinstance(x, Dual):
        x = x.v
    return x


def is_dual(x) -> bool:
    return isinstance(x, Dual)


def tangent(y, tag):
    """Coefficient of perturbation ``tag`` in ``y`` (zero if absent)."""
    if isinstance(y, Dual):
        if y.tag == tag:
            return np.zeros_like(primal(y.v), dtype=float) if y.d is None else y.d
        if y.tag > tag:
            return Dual(tangent(y.v, tag), None if y.d is None else tangent(y.d, tag), y.tag)
    return np.zeros_like(np.asarray(primal(y), dtype=float))


def drop(y, tag):
    """Value of ``y`` with perturbation ``tag`` removed."""
    if isinstance(y, Dual):
        if y.tag == tag:
            return y.v
        if y.tag > tag:
            return Dual(drop(y.v, tag), None if y.d is None else drop(y.d, tag), y.tag)
    return y


# --------------------------------------------------------------------------
# elementwise functions


def _unary(x, f, df):
    if not isinstance(x, Dual):
        return f(x)
    v = _unary(x.v, f, df)
    d = None if x.d is None else x.d * df(x.v, v)
    return Dual(v, d, x.tag)


def exp(x):
    return _unary(x, np.exp, lambda xv, fv: fv)


def log(x):
    return _unary(x, np.log, lambda xv, fv: 1.0 / xv)


def sqrt(x):
    return _unary(x, np.sqrt, lambda xv, fv: 0.5 / fv)


def sin(x):
    return _unary(x, np.sin, lambda xv, fv: cos(xv))


def cos(x):
    return _unary(x, np.cos, lambda xv, fv: -sin(xv))


def abs_(x):
    return _unary(x, np.abs, lambda xv, fv: sign(xv))


def sign(x):
    return np.sign(primal(x))


# --------------------------------------------------------------------------
# array construction and linear algebra


def sum_(x, axis=None):
    if isinstance(x, Dual):
        return x.sum(axis)
    return np.sum(x, axis=axis)


def stack(items, axis=0):
    tag = max((_tag_of(x) for x in items), default=0)
    if tag == 0:
        return np.stack([np.asarray(x, dtype=float) for x in items], axis=axis)
    parts = [_split(x, tag) for x in items]
    v = stack([p[0] for p in parts], axis)
    if all(p[1] is None for p in parts):
        return Dual(v, None, tag)
    ds = [p[1] if p[1] is not None else np.zeros(np.shape(primal(p[0]))) for p in parts]
    return Dual(v, stack(ds, axis), tag)


def asarray(x):
    """Turn a list of scalars (possibly dual) into a 1-d array."""
    if isinstance(x, Dual):
        return x
    if isinstance(x, (list, tuple)):
        return stack(list(x))
    return np.asarray(x, dtype=float)


def inv(a):
    if not isinstance(a, Dual):
        return np.linalg.inv(a)
    ai = inv(a.v)
    d = None if a.d is None else -(ai @ a.d @ ai)
    return Dual(ai, d, a.tag)


def solve(a, b):
    return inv(a) @ b


def trace(a):
    if not isinstance(a, Dual):
        return np.trace(a)
    return Dual(trace(a.v), None if a.d is None else trace(a.d), a.tag)


def outer(a, b):
    return einsum("i,j->ij", a, b)


def einsum(spec, *ops):
    """``np.einsum`` extended to dual operands by the product rule."""
    tag = max((_tag_of(x) for x in ops), default=0)
    if tag == 0:
        return np.einsum(spec, *ops)
    parts = [_split(x, tag) for x in ops]
    vals = [p[0] for p in parts]
    v = einsum(spec, *vals)
    d = None
    for k, (_, dk) in enumerate(parts):
        if dk is None:
            continue
        term = einsum(spec, *(vals[:k] + [dk] + vals[k + 1 :]))
        d = _plus(d, term)
    return Dual(v, d, tag)


def eye_like(n):
    return np.eye(n)

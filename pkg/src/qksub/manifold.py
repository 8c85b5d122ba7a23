"""Charts with metrics: connection, brackets, gradients and frames.

Fields are plain callables ``q -> ndarray`` written with the helpers in
:mod:`qksub.dual`, so they can be evaluated at dual points and differentiated
by either engine mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .engine import DEFAULT_ENGINE, DiffEngine


class DomainError(ValueError):
    """A point lies outside the chart's domain."""


class NumericError(ArithmeticError):
    """A computation produced non-finite or degenerate values."""


@dataclass(frozen=True, eq=False)
class Manifold:
    dim: int
    metric: Callable
    domain: Callable = lambda q: True
    frames: dict = field(default_factory=dict)
    name: str = ""

    def point(self, p) -> np.ndarray:
        p = np.asarray(dual.primal(p), dtype=float)
        if p.shape != (self.dim,):
            raise DomainError(f"{self.name or 'manifold'}: expected {self.dim} coordinates, got shape {p.shape}")
        if not self.domain(p):
            raise DomainError(f"{self.name or 'manifold'}: point {p.tolist()} is outside the domain")
        return p

    def g(self, p, X, Y):
        """Inner product of two tangent vectors at ``p``."""
        return X @ self.metric(p) @ Y

    def norm(self, p, X):
        return float(np.sqrt(max(self.g(p, X, X), 0.0)))


def euclidean(dim: int, name: str = "") -> Manifold:
    eye = np.eye(dim)
    return Manifold(dim, lambda q: eye, name=name or f"R{dim}")


def finite(x, what="value"):
    """Raise :class:`NumericError` unless every entry of ``x`` is finite."""
    arr = np.asarray(dual.primal(x), dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite {what}")
    return x


def directional_derivative(f, p, X, engine: DiffEngine | None = None):
    """X(f) at p."""
    engine = engine or DEFAULT_ENGINE
    return finite(engine.derivative(f, p, X), "directional derivative")


def lie_bracket(X, Y, p, engine: DiffEngine | None = None):
    """[X, Y] at p in coordinate components."""
    engine = engine or DEFAULT_ENGINE
    dY = engine.derivative(Y, p, dual.primal(X(p)))
    dX = engine.derivative(X, p, dual.primal(Y(p)))
    return finite(dual.primal(dY - dX), "bracket")


def metric_derivatives(M: Manifold, p, engine: DiffEngine | None = None):
    """Array ``dg[k, i, j] = d g_ij / d x_k``."""
    engine = engine or DEFAULT_ENGINE
    cols = [engine.derivative(M.metric, p, e) for e in np.eye(M.dim)]
    return dual.stack(cols, axis=0)


_christoffel_cache: dict = {}


def christoffel(M: Manifold, p, engine: DiffEngine | None = None):
    """``Gamma[k, i, j]`` so that ``nabla_{d_i} d_j = Gamma[k, i, j] d_k``.

    Float points are cached per manifold and engine; dual points are computed
    afresh so the result can be differentiated.
    """
    engine = engine or DEFAULT_ENGINE
    key = None
    if not dual.is_dual(p):
        key = (id(M), engine, np.asarray(p, dtype=float).tobytes())
        hit = _christoffel_cache.get(key)
        if hit is not None:
            return hit[1]
    dg = metric_derivatives(M, p, engine)
    ginv = dual.inv(M.metric(p))
    # first kind: G[l, i, j] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = 0.5 * (
        dual.einsum("ijl->lij", dg) + dual.einsum("jil->lij", dg) - dg
    )
    gamma = dual.einsum("kl,lij->kij", ginv, first)
    if key is not None:
        finite(gamma, "Christoffel symbols")
        if len(_christoffel_cache) > 20000:
            _christoffel_cache.clear()
        # keep a reference to M so its id cannot be reused while cached
        _christoffel_cache[key] = (M, gamma)
    return gamma


def connection_term(M: Manifold, p, X, Y, engine: DiffEngine | None = None):
    """Gamma(X, Y)^k = Gamma[k, i, j] X^i Y^j at p."""
    return dual.einsum("kij,i,j->k", christoffel(M, p, engine), X, Y)


def covariant_derivative(M: Manifold, X, Y, p, engine: DiffEngine | None = None):
    """nabla_X Y at p for a tangent vector ``X`` and a field ``Y``."""
    engine = engine or DEFAULT_ENGINE
    X = dual.primal(X)
    dY = engine.derivative(Y, p, X)
    return dY + connection_term(M, p, X, Y(p), engine)


def levi_civita(M: Manifold, X, Y, p, engine: DiffEngine | None = None):
    """nabla_X Y at p for vector fields ``X`` and ``Y``."""
    M.point(p)
    return finite(covariant_derivative(M, X(p), Y, p, engine), "covariant derivative")


def gradient(M: Manifold, f, p, engine: DiffEngine | None = None):
    """g^{-1} df at p."""
    engine = engine or DEFAULT_ENGINE
    df = dual.stack([engine.derivative(f, p, e) for e in np.eye(M.dim)])
    G = M.metric(p)
    if np.linalg.cond(np.asarray(dual.primal(G))) > 1e12:
        raise NumericError("metric is numerically singular")
    return finite(dual.solve(G, df), "gradient")


def orthonormal_frame(M: Manifold, p, basis=None, tol: float = 1e-12):
    """Gram-Schmidt in the metric at p; returns an (n, k) array of columns.

    ``basis`` defaults to the coordinate frame.  Raises :class:`NumericError`
    if a vector is (numerically) dependent on the previous ones.
    """
    G = np.asarray(M.metric(M.point(p)), dtype=float)
    vecs = np.eye(M.dim) if basis is None else np.asarray(basis, dtype=float)
    out = []
    for v in vecs.T:
        w = v.copy()
        for _ in range(2):  # re-orthogonalise once for stability
            for u in out:
                w = w - (u @ G @ w) * u
        nrm2 = w @ G @ w
        scale = v @ G @ v
        if not np.isfinite(nrm2) or nrm2 <= tol * max(scale, 1e-300):
            raise NumericError("Gram-Schmidt degenerated: vectors are dependent or metric is singular")
        out.append(w / np.sqrt(nrm2))
    return np.stack(out, axis=1)


def metric_orthonormal_basis(G: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Columns spanning the same space as ``cols``, orthonormal for ``G``."""
    if cols.shape[1] == 0:
        return cols
    L = np.linalg.cholesky(G)
    q, _ = np.linalg.qr(L.T @ cols)
    return np.linalg.solve(L.T, q)

"""Smooth maps between charts: differential, O'Neill tensors, second fundamental form."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .engine import DEFAULT_ENGINE, DiffEngine
from .manifold import (
    Manifold,
    NumericError,
    connection_term,
    covariant_derivative,
    finite,
    gradient,
    metric_orthonormal_basis,
    orthonormal_frame,
)
from .report import CheckReport, from_samples

RANK_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class SmoothMap:
    source: Manifold
    target: Manifold
    func: Callable
    name: str = ""

    def __call__(self, q):
        return self.func(q)


@dataclass
class SubmersionAnalysis:
    point: np.ndarray
    jacobian: np.ndarray
    singular_values: np.ndarray
    rank: int
    vertical_basis: np.ndarray  # columns, g-orthonormal
    horizontal_basis: np.ndarray  # columns, g-orthonormal
    dilation: float | None
    conformality_residual: float

    @property
    def is_submersion(self) -> bool:
        return self.rank == self.jacobian.shape[0]

    @property
    def is_critical(self) -> bool:
        return self.rank == 0


def differential(F: SmoothMap, p, engine: DiffEngine | None = None):
    """Jacobian of F at p (rows: target coordinates)."""
    engine = engine or DEFAULT_ENGINE
    return engine.jacobian(lambda q: dual.asarray(F(q)), p)


def analyze(F: SmoothMap, p, engine: DiffEngine | None = None) -> SubmersionAnalysis:
    p = F.source.point(p)
    Jf = np.asarray(differential(F, p, engine), dtype=float)
    finite(Jf, "Jacobian")
    G = np.asarray(F.source.metric(p), dtype=float)
    n_out, m = Jf.shape
    _, s, vt = np.linalg.svd(Jf)
    smax = s[0] if len(s) else 0.0
    rank = int(np.sum(s > RANK_RTOL * smax)) if smax > 0 else 0
    kernel = vt[rank:].T
    vertical = metric_orthonormal_basis(G, kernel)
    # horizontal space = g-orthogonal complement of the kernel = G^{-1} row space
    rows = vt[:rank].T
    horizontal = metric_orthonormal_basis(G, np.linalg.solve(G, rows))
    dilation, resid = None, float("nan")
    if rank == n_out and rank > 0:
        GN = np.asarray(F.target.metric(np.asarray(F(p), dtype=float)), dtype=float)
        FH = Jf @ horizontal
        gram = FH.T @ GN @ FH
        lam2 = np.trace(gram) / rank
        resid = float(np.max(np.abs(gram - lam2 * np.eye(rank))))
        dilation = float(np.sqrt(lam2))
    return SubmersionAnalysis(p, Jf, s, rank, vertical, horizontal, dilation, resid)


# --------------------------------------------------------------------------
# smooth (dual-friendly) projector fields


def horizontal_projector(F: SmoothMap, q, engine: DiffEngine | None = None):
    """g-orthogonal projector onto the horizontal space, as a smooth field."""
    Jf = differential(F, q, engine)
    Ginv = dual.inv(F.source.metric(q))
    JG = Jf @ Ginv
    return JG.T @ dual.solve(JG @ Jf.T, Jf)


def vertical_projector(F: SmoothMap, q, engine: DiffEngine | None = None):
    return np.eye(F.source.dim) - horizontal_projector(F, q, engine)


def projectors(F: SmoothMap, q, engine: DiffEngine | None = None):
    PH = horizontal_projector(F, q, engine)
    return np.eye(F.source.dim) - PH, PH


def dilation_squared(F: SmoothMap, q, engine: DiffEngine | None = None):
    """lambda^2 = tr(g^{-1} F*^T g_N F*) / dim N, a smooth scalar field."""
    Jf = differential(F, q, engine)
    GN = F.target.metric(dual.asarray(F(q)))
    Ginv = dual.inv(F.source.metric(q))
    return dual.trace(Ginv @ Jf.T @ GN @ Jf) / F.target.dim


def dilation(F: SmoothMap, q, engine: DiffEngine | None = None):
    return dual.sqrt(dilation_squared(F, q, engine))


def log_dilation(F: SmoothMap, q, engine: DiffEngine | None = None):
    return 0.5 * dual.log(dilation_squared(F, q, engine))


def grad_log_dilation(F: SmoothMap, p, engine: DiffEngine | None = None):
    return gradient(F.source, lambda q: log_dilation(F, q, engine), p, engine)


def check_h_homothetic(F: SmoothMap, points, tol: float = 1e-6,
                       engine: DiffEngine | None = None) -> CheckReport:
    """Worst g-norm of the horizontal part of grad(lambda)."""
    samples = []
    for p in points:
        a = analyze(F, p, engine)
        if a.dilation is None:
            rep = from_samples("h-homothetic", [(np.inf, p)], tol)
            rep.notes.append(f"dilation undefined at {list(map(float, p))}: rank {a.rank}")
            return rep
        grad = np.asarray(gradient(F.source, lambda q: dilation(F, q, engine), p, engine), dtype=float)
        PH = np.asarray(horizontal_projector(F, p, engine), dtype=float)
        samples.append((F.source.norm(p, PH @ grad), p))
    return from_samples("h-homothetic", samples, tol)


# --------------------------------------------------------------------------
# fields and connections


def project_field(P, Y):
    """Field q -> P(q) Y(q) for a projector field ``P``."""
    return lambda q: P(q) @ Y(q)


def _value(X, p):
    return np.asarray(dual.primal(X(p) if callable(X) else X), dtype=float)


def nabla(F: SmoothMap, X, Y, p, engine: DiffEngine | None = None):
    """Levi-Civita derivative on the source: nabla_X Y at p (X vector or field)."""
    return np.asarray(dual.primal(covariant_derivative(F.source, _value(X, p), Y, p, engine)), dtype=float)


def oneill_T(F: SmoothMap, X, Y, p, engine: DiffEngine | None = None):
    """T_X Y = H nabla_{VX} VY + V nabla_{VX} HY."""
    PV, PH = (np.asarray(P, dtype=float) for P in projectors(F, p, engine))
    VX = PV @ _value(X, p)
    VY = project_field(lambda q: vertical_projector(F, q, engine), Y)
    HY = project_field(lambda q: horizontal_projector(F, q, engine), Y)
    return PH @ nabla(F, VX, VY, p, engine) + PV @ nabla(F, VX, HY, p, engine)


def oneill_A(F: SmoothMap, X, Y, p, engine: DiffEngine | None = None):
    """A_X Y = H nabla_{HX} VY + V nabla_{HX} HY."""
    PV, PH = (np.asarray(P, dtype=float) for P in projectors(F, p, engine))
    HX = PH @ _value(X, p)
    VY = project_field(lambda q: vertical_projector(F, q, engine), Y)
    HY = project_field(lambda q: horizontal_projector(F, q, engine), Y)
    return PH @ nabla(F, HX, VY, p, engine) + PV @ nabla(F, HX, HY, p, engine)


def pullback_derivative(F: SmoothMap, X, s, p, engine: DiffEngine | None = None):
    """nabla^F_X s for a field ``s`` along F (values in target components)."""
    engine = engine or DEFAULT_ENGINE
    Xp = _value(X, p)
    ds = np.asarray(dual.primal(engine.derivative(s, p, Xp)), dtype=float)
    Fp = np.asarray(dual.primal(F(p)), dtype=float)
    Jf = np.asarray(dual.primal(differential(F, p, engine)), dtype=float)
    sp = np.asarray(dual.primal(s(p)), dtype=float)
    return ds + np.asarray(dual.primal(connection_term(F.target, Fp, Jf @ Xp, sp, engine)), dtype=float)


def push_field(F: SmoothMap, Y, engine: DiffEngine | None = None):
    """The field q -> F_*(q) Y(q) along F."""
    return lambda q: differential(F, q, engine) @ Y(q)


def second_fundamental_form(F: SmoothMap, X, Y, p, engine: DiffEngine | None = None):
    """(nabla F_*)(X, Y) = nabla^F_X F_*Y - F_*(nabla_X Y) at p."""
    Jf = np.asarray(dual.primal(differential(F, p, engine)), dtype=float)
    pulled = pullback_derivative(F, X, push_field(F, Y, engine), p, engine)
    return finite(pulled - Jf @ nabla(F, X, Y, p, engine), "second fundamental form")


def constant_field(v):
    v = np.asarray(v, dtype=float)
    return lambda q: v


def tension_field(F: SmoothMap, p, engine: DiffEngine | None = None):
    """Trace of the second fundamental form over a g-orthonormal frame."""
    U = orthonormal_frame(F.source, p)
    out = np.zeros(F.target.dim)
    for u in U.T:
        f = constant_field(u)
        out = out + second_fundamental_form(F, f, f, p, engine)
    return out


def mean_curvature(F: SmoothMap, p, engine: DiffEngine | None = None):
    """H = (1/k) sum T_{U_i} U_i over a g-orthonormal vertical frame (k = fibre dim)."""
    a = analyze(F, p, engine)
    k = a.vertical_basis.shape[1]
    if k == 0:
        return np.zeros(F.source.dim)
    total = np.zeros(F.source.dim)
    for u in a.vertical_basis.T:
        total = total + oneill_T(F, u, constant_field(u), p, engine)
    return total / k


def baird_tension(F: SmoothMap, p, engine: DiffEngine | None = None):
    """-k F_*H + (2 - n) F_*(grad ln lambda), k = fibre dim, n = dim N."""
    a = analyze(F, p, engine)
    k = a.vertical_basis.shape[1]
    H = mean_curvature(F, p, engine)
    g = np.asarray(grad_log_dilation(F, p, engine), dtype=float)
    return a.jacobian @ (-k * H + (2 - F.target.dim) * g)


@dataclass
class FiberGeometry:
    mean_curvature: np.ndarray
    umbilicity_residual: float
    geodesy_residual: float
    points: np.ndarray
    per_point: list


def fiber_geometry(F: SmoothMap, points, pairs: int = 5, seed: int = 0,
                   engine: DiffEngine | None = None) -> FiberGeometry:
    """Umbilicity and geodesy residuals of the fibres over random vertical pairs.

    Vectors are g-unit; ``mean_curvature`` is H at the first point.
    """
    rng = np.random.default_rng(seed)
    umb, geo, per_point, H0 = 0.0, 0.0, [], None
    for p in points:
        a = analyze(F, p, engine)
        H = mean_curvature(F, p, engine)
        if H0 is None:
            H0 = H
        k = a.vertical_basis.shape[1]
        pu, pg = 0.0, 0.0
        for _ in range(pairs if k else 0):
            X = a.vertical_basis @ _unit(rng.normal(size=k))
            Y = a.vertical_basis @ _unit(rng.normal(size=k))
            T = oneill_T(F, X, constant_field(Y), p, engine)
            pu = max(pu, F.source.norm(p, T - F.source.g(p, X, Y) * H))
            pg = max(pg, F.source.norm(p, T))
        umb, geo = max(umb, pu), max(geo, pg)
        per_point.append({"point": p, "mean_curvature": H, "umbilicity": pu, "geodesy": pg})
    return FiberGeometry(H0 if H0 is not None else np.zeros(F.source.dim), umb, geo,
                         np.asarray(points, dtype=float), per_point)


def _unit(v):
    return v / np.linalg.norm(v)


def check_totally_geodesic_map(F: SmoothMap, points, pairs: int = 5, seed: int = 0, tol: float = 1e-6,
                               engine: DiffEngine | None = None) -> CheckReport:
    """Worst |(nabla F_*)(X, Y)| over vertical, mixed and horizontal unit pairs.

    Pairs are built from the analysed vertical/horizontal bases and the three
    restricted maxima are reported in ``data``.
    """
    rng = np.random.default_rng(seed)
    kinds = {"vertical-vertical": [], "mixed": [], "horizontal-horizontal": []}
    for p in points:
        a = analyze(F, p, engine)
        V, H = a.vertical_basis, a.horizontal_basis
        GN = F.target.metric(np.asarray(F(p), dtype=float))
        worst = {k: 0.0 for k in kinds}
        for _ in range(pairs):
            for kind, (B1, B2) in (("vertical-vertical", (V, V)), ("mixed", (V, H)),
                                   ("horizontal-horizontal", (H, H))):
                if B1.shape[1] == 0 or B2.shape[1] == 0:
                    continue
                X = B1 @ _unit(rng.normal(size=B1.shape[1]))
                Y = B2 @ _unit(rng.normal(size=B2.shape[1]))
                r = second_fundamental_form(F, X, constant_field(Y), p, engine)
                worst[kind] = max(worst[kind], float(np.sqrt(max(r @ GN @ r, 0.0))))
        for kind in kinds:
            kinds[kind].append((worst[kind], p))
    samples = [(max(v[0] for v in vals), vals[0][1]) for vals in zip(*kinds.values())]
    data = {k: max((r for r, _ in v), default=0.0) for k, v in kinds.items()}
    return from_samples("totally-geodesic-map", samples, tol, data=data)


def linear_field(c, K, p0):
    """The field q -> c + K (q - p0)."""
    c, K, p0 = (np.asarray(a, dtype=float) for a in (c, K, p0))
    return lambda q: c + K @ (q - p0)


def check_map_identities(F: SmoothMap, points, pairs: int = 10, seed: int = 0, tol: float = 1e-5,
                         engine: DiffEngine | None = None) -> list:
    """Symmetry of (nabla F_*), the bracket identity and the conformal horizontal formula.

    Fields are random affine fields in the chart, so brackets do not vanish.
    The horizontal formula compares (nabla F_*)(V, W) for horizontal V, W with
    V(ln lambda) F_*W + W(ln lambda) F_*V - g(V, W) F_*(grad ln lambda).
    """
    engine = engine or DEFAULT_ENGINE
    rng = np.random.default_rng(seed)
    M = F.source
    sym, bracket, horiz = [], [], []
    for p in points:
        p = M.point(p)
        a = analyze(F, p, engine)
        Jf = a.jacobian
        GN = np.asarray(F.target.metric(np.asarray(dual.primal(F(p)), dtype=float)), dtype=float)
        normN = lambda v: float(np.sqrt(max(v @ GN @ v, 0.0)))
        gl = np.asarray(dual.primal(grad_log_dilation(F, p, engine)), dtype=float)
        H = a.horizontal_basis
        ws = wb = wh = 0.0
        for _ in range(pairs):
            X = linear_field(rng.normal(size=M.dim), rng.normal(size=(M.dim, M.dim)), p)
            Y = linear_field(rng.normal(size=M.dim), rng.normal(size=(M.dim, M.dim)), p)
            ws = max(ws, normN(second_fundamental_form(F, X, Y, p, engine)
                               - second_fundamental_form(F, Y, X, p, engine)))
            Xp, Yp = X(p), Y(p)
            br = (np.asarray(dual.primal(engine.derivative(Y, p, Xp)), dtype=float)
                  - np.asarray(dual.primal(engine.derivative(X, p, Yp)), dtype=float))
            lhs = (pullback_derivative(F, X, push_field(F, Y, engine), p, engine)
                   - pullback_derivative(F, Y, push_field(F, X, engine), p, engine))
            wb = max(wb, normN(lhs - Jf @ br))
            if H.shape[1]:
                V = H @ rng.normal(size=H.shape[1])
                W = H @ rng.normal(size=H.shape[1])
                V, W = V / M.norm(p, V), W / M.norm(p, W)
                expected = ((V @ np.asarray(M.metric(p), dtype=float) @ gl) * (Jf @ W)
                            + (W @ np.asarray(M.metric(p), dtype=float) @ gl) * (Jf @ V)
                            - M.g(p, V, W) * (Jf @ gl))
                got = second_fundamental_form(F, constant_field(V), constant_field(W), p, engine)
                wh = max(wh, normN(got - expected))
        sym.append((ws, p))
        bracket.append((wb, p))
        horiz.append((wh, p))
    return [from_samples("sff-symmetry", sym, tol), from_samples("bracket-identity", bracket, tol),
            from_samples("conformal-horizontal-sff", horiz, tol)]


def check_oneill_skew(F: SmoothMap, points, pairs: int = 5, seed: int = 0, tol: float = 1e-6,
                      engine: DiffEngine | None = None) -> list:
    """T_X and A_X are g-skew; T is symmetric on vertical pairs."""
    rng = np.random.default_rng(seed)
    M = F.source
    skew_T, skew_A, sym_T = [], [], []
    for p in points:
        p = M.point(p)
        a = analyze(F, p, engine)
        V, H = a.vertical_basis, a.horizontal_basis
        st = sa = sy = 0.0
        for _ in range(pairs):
            Y, Z = rng.normal(size=(2, M.dim))
            if V.shape[1]:
                X = V @ rng.normal(size=V.shape[1])
                st = max(st, abs(M.g(p, oneill_T(F, X, constant_field(Y), p, engine), Z)
                                 + M.g(p, Y, oneill_T(F, X, constant_field(Z), p, engine))))
                U = V @ rng.normal(size=V.shape[1])
                sy = max(sy, M.norm(p, oneill_T(F, X, constant_field(U), p, engine)
                                    - oneill_T(F, U, constant_field(X), p, engine)))
            if H.shape[1]:
                X = H @ rng.normal(size=H.shape[1])
                sa = max(sa, abs(M.g(p, oneill_A(F, X, constant_field(Y), p, engine), Z)
                                 + M.g(p, Y, oneill_A(F, X, constant_field(Z), p, engine))))
        skew_T.append((st, p))
        skew_A.append((sa, p))
        sym_T.append((sy, p))
    return [from_samples("oneill-T-skew", skew_T, tol), from_samples("oneill-A-skew", skew_A, tol),
            from_samples("oneill-T-vertical-symmetry", sym_T, tol)]


def require_submersion(F: SmoothMap, p, engine=None) -> SubmersionAnalysis:
    a = analyze(F, p, engine)
    if not a.is_submersion:
        raise NumericError(f"map is not a submersion at {a.point.tolist()} (rank {a.rank})")
    return a

"""Semi-invariant splittings of the vertical space and their classification."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import dual
from .engine import DEFAULT_ENGINE, DiffEngine, tree_map
from .manifold import christoffel, connection_term, gradient
from .quaternionic import ALPHAS, QuaternionicBasis, cyc, fit_qk_at
from .sampling import rng_for
from .submersion import SmoothMap, analyze, differential, dilation, log_dilation

GAP_TOL = 1e-6  # singular values within this of 1 (or 0) count as 1 (or 0)
ANGLE_TOL = 1e-8


def _g_orthonormal(G, cols):
    from .manifold import metric_orthonormal_basis

    return metric_orthonormal_basis(G, cols)


def _projector(G, basis):
    """g-orthogonal projector onto the span of g-orthonormal ``basis`` columns."""
    return basis @ basis.T @ G


@dataclass
class DistributionSplit:
    point: np.ndarray
    metric: np.ndarray
    vertical: np.ndarray
    horizontal: np.ndarray
    D1: dict
    D2: dict
    JD2: dict
    mu: dict
    singular_values: dict
    defects: dict  # per alpha: worst |V-part of J_a v| for unit v in D2[a]
    common_D1: np.ndarray
    common_D2: np.ndarray
    common_defect: float

    def dims(self) -> dict:
        out = {"vertical": self.vertical.shape[1], "horizontal": self.horizontal.shape[1],
               "common_D1": self.common_D1.shape[1]}
        for a in ALPHAS:
            out[f"D1[{a}]"] = self.D1[a].shape[1]
            out[f"D2[{a}]"] = self.D2[a].shape[1]
            out[f"mu[{a}]"] = self.mu[a].shape[1]
        return out

    def valid(self, alpha=None, tol: float = GAP_TOL) -> bool:
        alphas = ALPHAS if alpha is None else (alpha,)
        return all(self.defects[a] < tol for a in alphas)

    def common_valid(self, tol: float = GAP_TOL) -> bool:
        return self.common_defect < tol


def _complement(G, space, sub):
    """g-orthonormal basis of the g-orthogonal complement of ``sub`` inside ``space``."""
    if sub.shape[1] == 0:
        return space
    coords = space.T @ G @ sub  # coordinates of sub in the orthonormal basis of space
    null = scipy.linalg.null_space(coords.T, rcond=1e-10)
    return _g_orthonormal(G, space @ null) if null.shape[1] else space[:, :0]


def detect_split(F: SmoothMap, B: QuaternionicBasis, p, engine: DiffEngine | None = None,
                 gap: float = GAP_TOL) -> DistributionSplit:
    a = analyze(F, p, engine)
    p = a.point
    G = np.asarray(F.source.metric(p), dtype=float)
    V, H = a.vertical_basis, a.horizontal_basis
    k = V.shape[1]
    D1, D2, JD2, mu, svals, defects = {}, {}, {}, {}, {}, {}
    for alpha in ALPHAS:
        J = np.asarray(B.J(alpha, p), dtype=float)
        if k == 0:
            D1[alpha] = D2[alpha] = V
            svals[alpha] = np.zeros(0)
            defects[alpha] = 0.0
        else:
            S = V.T @ G @ J @ V  # P_V J restricted to V, in an orthonormal basis
            _, s, wt = np.linalg.svd(S)
            inv = s > 1.0 - gap
            D1[alpha] = _g_orthonormal(G, V @ wt[inv].T)
            D2[alpha] = _g_orthonormal(G, V @ wt[~inv].T)
            svals[alpha] = s
            defects[alpha] = float(s[~inv].max()) if np.any(~inv) else 0.0
        JD2[alpha] = _g_orthonormal(G, _projector(G, H) @ J @ D2[alpha]) if D2[alpha].shape[1] else H[:, :0]
        mu[alpha] = _complement(G, H, JD2[alpha])

    # largest subspace W of V with J_a W inside W for every a
    W = V
    while W.shape[1]:
        PW = _projector(G, W)
        blocks = []
        for alpha in ALPHAS:
            J = np.asarray(B.J(alpha, p), dtype=float)
            out = J @ W - PW @ J @ W
            blocks.append(np.linalg.cholesky(G).T @ out)  # g-norm coordinates
        stacked = np.vstack(blocks)
        null = scipy.linalg.null_space(stacked, rcond=gap)
        if null.shape[1] == W.shape[1]:
            break
        W = _g_orthonormal(G, W @ null) if null.shape[1] else W[:, :0]
    common_D2 = _complement(G, V, W)
    PV = _projector(G, V)
    common_defect = 0.0
    for alpha in ALPHAS:
        J = np.asarray(B.J(alpha, p), dtype=float)
        for v in common_D2.T:
            common_defect = max(common_defect, float(np.sqrt(max((PV @ J @ v) @ G @ (PV @ J @ v), 0.0))))
    return DistributionSplit(p, G, V, H, D1, D2, JD2, mu, svals, defects, W, common_D2, common_defect)


@dataclass
class DecompositionResult:
    phi: np.ndarray | None = None
    omega: np.ndarray | None = None
    B: np.ndarray | None = None
    C: np.ndarray | None = None


class ContractError(ValueError):
    """Input violates an operation's precondition."""


def decompose(split: DistributionSplit, B: QuaternionicBasis, alpha: int, X, mixed_tol: float = 1e-6):
    """phi/omega parts of J_a X for vertical X, or B/C parts for horizontal X."""
    G = split.metric
    X = np.asarray(X, dtype=float)
    nx = np.sqrt(X @ G @ X)
    PV, PH = _projector(G, split.vertical), _projector(G, split.horizontal)
    v_part, h_part = PV @ X, PH @ X
    JX = np.asarray(B.J(alpha, split.point), dtype=float) @ X
    if np.sqrt(h_part @ G @ h_part) <= mixed_tol * nx:
        return DecompositionResult(phi=_projector(G, split.D1[alpha]) @ JX,
                                   omega=_projector(G, split.JD2[alpha]) @ JX)
    if np.sqrt(v_part @ G @ v_part) <= mixed_tol * nx:
        return DecompositionResult(B=_projector(G, split.D2[alpha]) @ JX,
                                   C=_projector(G, split.mu[alpha]) @ JX)
    raise ContractError("vector is neither vertical nor horizontal")


def principal_angles(A, B_, G=None):
    """Principal angles (radians) between column spans, in the metric G."""
    if A.shape[1] == 0 or B_.shape[1] == 0:
        return np.zeros(0)
    if G is not None:
        L = np.linalg.cholesky(G)
        A, B_ = L.T @ A, L.T @ B_
    return scipy.linalg.subspace_angles(A, B_)


def same_subspace(A, B_, G=None, tol: float = ANGLE_TOL) -> bool:
    if A.shape[1] != B_.shape[1]:
        return False
    ang = principal_angles(A, B_, G)
    return bool(len(ang) == 0 or np.max(ang) < tol)


# --------------------------------------------------------------------------
# smooth structure fields used by the residual checks


class StructureAt:
    """Projector fields of the splitting evaluated at one (possibly dual) point.

    With P_V, P_H the vertical/horizontal projectors, the D1 projector is
    P_V J P_V J^{-1} P_V, which is exact whenever J_a maps D1 onto itself and
    D2 into the horizontal space.  The others follow: P_D2 = P_V - P_D1,
    P_JD2 = J P_D2 J^{-1} and P_mu = P_H - P_JD2.
    """

    def __init__(self, F: SmoothMap, B: QuaternionicBasis, q, engine):
        n = F.source.dim
        Jf = differential(F, q, engine)
        Ginv = dual.inv(F.source.metric(q))
        JG = Jf @ Ginv
        PH = JG.T @ dual.solve(JG @ Jf.T, Jf)
        PV = np.eye(n) - PH
        self.q = q
        self.Jf = Jf
        self.P = {"V": PV, "H": PH}
        self.J = {}
        for a in ALPHAS:
            J = B.J(a, q)
            Jinv = -J
            PD1 = PV @ J @ PV @ Jinv @ PV
            PD2 = PV - PD1
            PJD2 = J @ PD2 @ Jinv
            self.J[a] = J
            self.P[("D1", a)] = PD1
            self.P[("D2", a)] = PD2
            self.P[("JD2", a)] = PJD2
            self.P[("mu", a)] = PH - PJD2

    # operators of the splitting applied to a vector at this point
    def phi(self, a, X):
        return self.P[("D1", a)] @ (self.J[a] @ X)

    def omega(self, a, X):
        return self.P[("JD2", a)] @ (self.J[a] @ X)

    def B(self, a, X):
        return self.P[("D2", a)] @ (self.J[a] @ X)

    def C(self, a, X):
        return self.P[("mu", a)] @ (self.J[a] @ X)

    def push(self, X):
        return self.Jf @ X


@dataclass
class Section:
    """The field q -> P_D(q) (c + K (q - p)) of a projector ``key``."""

    key: object
    c: np.ndarray
    K: np.ndarray
    p: np.ndarray

    def __call__(self, q, s: StructureAt):
        return s.P[self.key] @ (self.c + self.K @ (q - self.p))


class Geometry:
    """Everything the residual checks need for one (F, basis, engine) triple.

    Values at float points (structure, splits, fitted one-forms, gradients)
    are cached; dual evaluations are always recomputed.
    """

    def __init__(self, F: SmoothMap, B: QuaternionicBasis, engine: DiffEngine | None = None,
                 seed: int = 42, pairs: int = 2):
        self.F, self.B = F, B
        self.M, self.N = F.source, F.target
        self.engine = engine or DEFAULT_ENGINE
        self.seed, self.pairs = seed, pairs
        self._cache: dict = {}

    def _memo(self, kind, p, fn):
        key = (kind, np.asarray(p, dtype=float).tobytes())
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # cached float-point quantities -----------------------------------------
    def at(self, q) -> StructureAt:
        if dual.is_dual(q):
            return StructureAt(self.F, self.B, q, self.engine)
        return self._memo("at", q, lambda: _floatify(StructureAt(self.F, self.B, q, self.engine)))

    def split(self, p) -> DistributionSplit:
        return self._memo("split", p, lambda: detect_split(self.F, self.B, p, self.engine))

    def qk_fit(self, p):
        return self._memo("theta", p, lambda: fit_qk_at(self.M, self.B, p, engine=self.engine))

    def theta(self, p):
        return self.qk_fit(p)[0]

    def grad_log_lambda(self, p):
        return self._memo("gradlog", p, lambda: np.asarray(dual.primal(
            gradient(self.M, lambda q: log_dilation(self.F, q, self.engine), p, self.engine)), dtype=float))

    def grad_lambda(self, p):
        return self._memo("grad", p, lambda: np.asarray(dual.primal(
            gradient(self.M, lambda q: dilation(self.F, q, self.engine), p, self.engine)), dtype=float))

    def lam2(self, p):
        s = self.at(p)
        return self._memo("lam2", p, lambda: float(np.trace(
            np.linalg.inv(self.M.metric(p)) @ s.Jf.T @ self.N.metric(self.F(p)) @ s.Jf) / self.N.dim))

    def Fp(self, p):
        return self._memo("Fp", p, lambda: np.asarray(dual.primal(self.F(p)), dtype=float))

    # metric helpers --------------------------------------------------------
    def g(self, p, X, Y):
        return float(X @ np.asarray(self.M.metric(p), dtype=float) @ Y)

    def norm(self, p, X):
        return float(np.sqrt(max(self.g(p, X, X), 0.0)))

    def gN(self, p, X, Y):
        return float(X @ np.asarray(self.N.metric(self.Fp(p)), dtype=float) @ Y)

    def normN(self, p, X):
        return float(np.sqrt(max(self.gN(p, X, X), 0.0)))

    # differentiation -------------------------------------------------------
    def jet(self, build, p, X):
        """Values at p and raw directional derivatives along X of ``build(q, s)``.

        ``build`` may return a tuple, list or dict of arrays.
        """
        conv = lambda v: np.asarray(dual.primal(v), dtype=float)
        vals = build(p, self.at(p))
        ds = self.engine.derivative(lambda q: build(q, self.at(q)), p, np.asarray(X, dtype=float))
        return tree_map(conv, vals), tree_map(conv, ds)

    def nabla(self, p, X, val, d):
        """Levi-Civita derivative on M from a raw derivative ``d`` of a field with value ``val``."""
        return d + np.asarray(dual.primal(connection_term(self.M, p, X, val, self.engine)), dtype=float)

    def nabla_pull(self, p, X, val, d):
        """Pull-back connection derivative of a field along F."""
        Jf = self.at(p).Jf
        return d + np.asarray(dual.primal(connection_term(self.N, self.Fp(p), Jf @ X, val, self.engine)),
                              dtype=float)

    def oneill(self, p, nab_V, nab_H):
        """T_X E or A_X E from nabla_X(VE) and nabla_X(HE) (X vertical resp. horizontal)."""
        s = self.at(p)
        return s.P["H"] @ nab_V + s.P["V"] @ nab_H

    # random sections -------------------------------------------------------
    def rng(self, label, index):
        return rng_for(self.seed, label, index)

    def dim(self, p, key) -> int:
        sp = self.split(p)
        if key == "V":
            return sp.vertical.shape[1]
        if key == "H":
            return sp.horizontal.shape[1]
        kind, a = key
        return {"D1": sp.D1, "D2": sp.D2, "JD2": sp.JD2, "mu": sp.mu}[kind][a].shape[1]

    def section(self, p, key, rng, linear: float = 0.5):
        """Random section of the distribution ``key`` with g-unit value at p, or None if it is zero."""
        n = self.M.dim
        c = rng.normal(size=n)
        K = linear * rng.normal(size=(n, n))
        if self.dim(p, key) == 0:
            return None
        P = self.at(p).P[key]
        v = P @ c
        nrm = self.norm(p, v)
        if nrm < 1e-8:
            return None
        return Section(key, c / nrm, K / nrm, np.asarray(p, dtype=float))

    def value(self, p, sec: Section):
        return np.asarray(sec(p, self.at(p)), dtype=float)


def _floatify(s: StructureAt) -> StructureAt:
    s.Jf = np.asarray(dual.primal(s.Jf), dtype=float)
    s.P = {k: np.asarray(dual.primal(v), dtype=float) for k, v in s.P.items()}
    s.J = {k: np.asarray(dual.primal(v), dtype=float) for k, v in s.J.items()}
    return s


# --------------------------------------------------------------------------
# classification


KINDS = (
    "not-submersion",
    "h-conformal (no invariance structure)",
    "h-conformal semi-invariant",
    "almost h-conformal semi-invariant",
    "anti-holomorphic almost h-semi-invariant",
    "submersion (not h-conformal)",
    "stratified",
)


@dataclass
class ClassificationVerdict:
    kind: str
    anti_invariant: bool
    dims: dict
    dilation: dict
    per_point: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def summary(self) -> str:
        parts = [self.kind]
        if self.kind == "h-conformal semi-invariant":
            d1 = self.dims.get("common_D1", 0)
            parts.append("D1 = {0}" + (" (anti-invariant)" if self.anti_invariant else "") if d1 == 0
                         else f"dim D1 = {d1}")
        elif self.kind in ("almost h-conformal semi-invariant", "anti-holomorphic almost h-semi-invariant"):
            parts.append(", ".join(f"dim D1[{a}] = {self.dims[f'D1[{a}]']}, dim D2[{a}] = {self.dims[f'D2[{a}]']}"
                                   for a in ALPHAS))
        if self.dilation.get("formula"):
            parts.append(f"lambda = {self.dilation['formula']}")
        return ", ".join(parts)


def point_kind(split: DistributionSplit, analysis, conformal_tol: float = 1e-8, structure_tol: float = GAP_TOL):
    if not analysis.is_submersion:
        return "not-submersion", False
    if analysis.conformality_residual > conformal_tol * analysis.dilation**2:
        return "submersion (not h-conformal)", False
    if split.common_valid(structure_tol):
        return "h-conformal semi-invariant", split.common_D1.shape[1] == 0
    if split.valid(None, structure_tol):
        h = split.horizontal.shape[1]
        if (split.JD2[1].shape[1] == h and split.JD2[3].shape[1] == h and split.D2[2].shape[1] == 0):
            return "anti-holomorphic almost h-semi-invariant", False
        return "almost h-conformal semi-invariant", False
    return "h-conformal (no invariance structure)", False


def classify(F: SmoothMap, B: QuaternionicBasis, points, engine: DiffEngine | None = None,
             dilation_formula=None) -> ClassificationVerdict:
    """Aggregate pointwise structure detection over ``points``.

    ``dilation_formula`` is an optional ``(label, function)`` pair; its label
    is reported when it matches the computed dilation within 1e-6 relative.
    """
    kinds, dims, per_point, lambdas, anti = [], [], [], [], []
    for p in points:
        a = analyze(F, p, engine)
        sp = detect_split(F, B, p, engine)
        kind, is_anti = point_kind(sp, a)
        kinds.append(kind)
        anti.append(is_anti)
        dims.append(sp.dims())
        lambdas.append(a.dilation)
        per_point.append({"point": a.point, "kind": kind, "dims": sp.dims(), "dilation": a.dilation,
                          "defects": {str(k): v for k, v in sp.defects.items()}, "common_defect": sp.common_defect})
    notes = []
    stable = len(set(kinds)) == 1 and all(d == dims[0] for d in dims)
    kind = kinds[0] if stable else "stratified"
    if not stable:
        notes.append("structure or dimensions change between sample points")
    dil = {"min": min((l for l in lambdas if l is not None), default=None),
           "max": max((l for l in lambdas if l is not None), default=None)}
    if dilation_formula is not None and all(l is not None for l in lambdas):
        label, fn = dilation_formula
        rel = max(abs(l - fn(p)) / abs(fn(p)) for l, p in zip(lambdas, points))
        dil["formula_checked"] = label
        dil["max_relative_error"] = rel
        if rel < 1e-6:
            dil["formula"] = label
    return ClassificationVerdict(kind, bool(stable and all(anti)), dims[0] if dims else {}, dil, per_point, notes)

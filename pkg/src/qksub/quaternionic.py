"""Almost quaternionic Hermitian structures and the quaternionic Kähler test."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .engine import DEFAULT_ENGINE, DiffEngine
from .manifold import Manifold, christoffel, finite, orthonormal_frame
from .report import CheckReport, from_samples

ALPHAS = (1, 2, 3)


def cyc(alpha: int, k: int) -> int:
    """Index alpha + k taken cyclically in {1, 2, 3}."""
    return (alpha - 1 + k) % 3 + 1


@dataclass(frozen=True, eq=False)
class QuaternionicBasis:
    J1: Callable
    J2: Callable
    J3: Callable
    name: str = ""

    def J(self, alpha: int, q):
        return (self.J1, self.J2, self.J3)[alpha - 1](q)


def constant_basis(J1, J2, J3, name="") -> QuaternionicBasis:
    mats = [np.asarray(J, dtype=float) for J in (J1, J2, J3)]
    return QuaternionicBasis(lambda q: mats[0], lambda q: mats[1], lambda q: mats[2], name)


@dataclass
class QKFitResult:
    points: np.ndarray
    omega_values: np.ndarray  # (P, 3, n): omega_beta(d/dx_i)
    residual: float
    point_residuals: np.ndarray


def apply_J(B: QuaternionicBasis, alpha: int, X, p):
    return B.J(alpha, p) @ X


def _maxabs(A) -> float:
    return float(np.max(np.abs(A)))


def check_quaternionic_algebra(B: QuaternionicBasis, points, tol: float = 1e-9) -> CheckReport:
    """Worst entry of J_a^2 + I, J_a J_{a+1} - J_{a+2} and J_a J_{a+1} + J_{a+1} J_a."""
    parts = {"square": [], "product": [], "anticommute": []}
    for p in points:
        Js = {a: np.asarray(B.J(a, p), dtype=float) for a in ALPHAS}
        n = Js[1].shape[0]
        sq = max(_maxabs(Js[a] @ Js[a] + np.eye(n)) for a in ALPHAS)
        pr = max(_maxabs(Js[a] @ Js[cyc(a, 1)] - Js[cyc(a, 2)]) for a in ALPHAS)
        ac = max(_maxabs(Js[a] @ Js[cyc(a, 1)] + Js[cyc(a, 1)] @ Js[a]) for a in ALPHAS)
        parts["square"].append((sq, p))
        parts["product"].append((pr, p))
        parts["anticommute"].append((ac, p))
    samples = [(max(a[0], b[0], c[0]), a[1]) for a, b, c in zip(*parts.values())]
    data = {k: max(r for r, _ in v) if v else 0.0 for k, v in parts.items()}
    return from_samples("quaternionic-algebra", samples, tol, data=data)


def check_hermitian_metric(M: Manifold, B: QuaternionicBasis, points, directions: int = 5,
                           seed: int = 0, tol: float = 1e-9) -> CheckReport:
    """|g(J X, J Y) - g(X, Y)| for random unit X, Y."""
    rng = np.random.default_rng(seed)
    samples = []
    for p in points:
        G = np.asarray(M.metric(p), dtype=float)
        worst = 0.0
        for _ in range(directions):
            X, Y = rng.normal(size=(2, M.dim))
            X = X / np.sqrt(X @ G @ X)
            Y = Y / np.sqrt(Y @ G @ Y)
            for a in ALPHAS:
                J = np.asarray(B.J(a, p), dtype=float)
                worst = max(worst, abs((J @ X) @ G @ (J @ Y) - X @ G @ Y))
        samples.append((worst, p))
    return from_samples("hermitian-metric", samples, tol)


def covariant_derivative_J(M: Manifold, B: QuaternionicBasis, alpha: int, X, p,
                           engine: DiffEngine | None = None):
    """Matrix of (nabla_X J_alpha) at p: dJ[X] + Gamma(X) J - J Gamma(X)."""
    engine = engine or DEFAULT_ENGINE
    X = np.asarray(X(p) if callable(X) else X, dtype=float)
    dJ = engine.derivative(lambda q: B.J(alpha, q), p, X)
    GX = dual.einsum("kij,i->kj", christoffel(M, p, engine), X)
    J = B.J(alpha, p)
    return finite(dJ + GX @ J - J @ GX, "covariant derivative of J")


def _nabla_J_coordinate(M, B, p, engine):
    """D[a-1][i] = nabla_{d_i} J_a at p."""
    return [[np.asarray(covariant_derivative_J(M, B, a, e, p, engine), dtype=float)
             for e in np.eye(M.dim)] for a in ALPHAS]


def fit_qk_at(M: Manifold, B: QuaternionicBasis, p, directions=None,
              engine: DiffEngine | None = None):
    """Least-squares one-forms at p and the worst defect in unit directions.

    Returns ``(omega, defect)`` where ``omega[b-1]`` is the covector of
    omega_b in coordinate components.  ``directions`` (columns) are the
    directions the fit is solved in; they default to the coordinate frame.
    """
    n = M.dim
    D = _nabla_J_coordinate(M, B, p, engine)
    Js = {a: np.asarray(B.J(a, p), dtype=float) for a in ALPHAS}
    dirs = np.eye(n) if directions is None else np.asarray(directions, dtype=float)

    # unknowns (omega_1, omega_2, omega_3) of one direction; rows = 3 stacked equations
    design = np.zeros((3 * n * n, 3))
    for a in ALPHAS:
        rows = slice((a - 1) * n * n, a * n * n)
        design[rows, cyc(a, 2) - 1] += Js[cyc(a, 1)].ravel()
        design[rows, cyc(a, 1) - 1] -= Js[cyc(a, 2)].ravel()
    values = np.zeros((3, dirs.shape[1]))
    for k, d in enumerate(dirs.T):
        rhs = np.concatenate([sum(d[i] * D[a - 1][i] for i in range(n)).ravel() for a in ALPHAS])
        values[:, k] = np.linalg.lstsq(design, rhs, rcond=None)[0]
    omega = values @ np.linalg.inv(dirs)

    # defect measured in a g-orthonormal frame, Frobenius norm in that frame
    U = orthonormal_frame(M, p)
    Uinv = np.linalg.inv(U)
    defect = 0.0
    for u in U.T:
        w = omega @ u
        for a in ALPHAS:
            Du = sum(u[i] * D[a - 1][i] for i in range(n))
            R = Du - w[cyc(a, 2) - 1] * Js[cyc(a, 1)] + w[cyc(a, 1) - 1] * Js[cyc(a, 2)]
            defect = max(defect, float(np.linalg.norm(Uinv @ R @ U)))
    return omega, defect


def fit_qk_oneforms(M: Manifold, B: QuaternionicBasis, points,
                    engine: DiffEngine | None = None) -> QKFitResult:
    pts = np.asarray(points, dtype=float)
    omegas, res = [], []
    for p in pts:
        om, d = fit_qk_at(M, B, p, engine=engine)
        omegas.append(om)
        res.append(d)
    res = np.asarray(res)
    return QKFitResult(pts, np.asarray(omegas), float(res.max()) if len(res) else 0.0, res)


def check_quaternionic_kahler(M: Manifold, B: QuaternionicBasis, points, tol: float = 1e-6,
                              engine: DiffEngine | None = None) -> CheckReport:
    fit = fit_qk_oneforms(M, B, points, engine)
    samples = list(zip(fit.point_residuals, fit.points))
    data = {"omega": [{"point": p, "omega": om} for p, om in zip(fit.points, fit.omega_values)]}
    return from_samples("quaternionic-kahler", samples, tol, data=data)


def check_hyperkahler(M: Manifold, B: QuaternionicBasis, points, tol: float = 1e-9,
                      engine: DiffEngine | None = None) -> CheckReport:
    """Worst Frobenius norm of nabla_u J_a over g-unit frame vectors u."""
    samples = []
    for p in points:
        U = orthonormal_frame(M, p)
        Uinv = np.linalg.inv(U)
        worst = 0.0
        for a in ALPHAS:
            for u in U.T:
                A = np.asarray(covariant_derivative_J(M, B, a, u, p, engine), dtype=float)
                worst = max(worst, float(np.linalg.norm(Uinv @ A @ U)))
        samples.append((worst, p))
    return from_samples("hyperkahler", samples, tol)


def check_golden_table(M: Manifold, B: QuaternionicBasis, frame: Callable, entries, points,
                       tol: float = 1e-6, engine: DiffEngine | None = None) -> CheckReport:
    """Compare (nabla_{e_i} J_a) e_j, expanded in the frame e, with a table.

    ``entries`` is a list of ``(alpha, i, j, coeffs)`` with 1-based indices.
    The report lists every entry that misses at some point.
    """
    worst = {}
    samples = []
    for p in points:
        E = np.asarray(frame(p), dtype=float)
        Einv = np.linalg.inv(E)
        cache = {}
        point_worst = 0.0
        for alpha, i, j, expected in entries:
            key = (alpha, i)
            if key not in cache:
                cache[key] = np.asarray(covariant_derivative_J(M, B, alpha, E[:, i - 1], p, engine), dtype=float)
            got = Einv @ (cache[key] @ E[:, j - 1])
            err = float(np.max(np.abs(got - np.asarray(expected, dtype=float))))
            point_worst = max(point_worst, err)
            prev = worst.get((alpha, i, j))
            if prev is None or err > prev[0]:
                worst[(alpha, i, j)] = (err, got, expected)
        samples.append((point_worst, p))
    misses = [
        {"alpha": a, "i": i, "j": j, "expected": list(map(float, exp)), "computed": np.round(got, 12).tolist(),
         "error": err}
        for (a, i, j), (err, got, exp) in sorted(worst.items()) if not err < tol
    ]
    matched = len(worst) - len(misses)
    rep = from_samples("golden-table", samples, tol, data={"matched": matched, "total": len(worst),
                                                           "mismatches": misses})
    rep.notes.append(f"{matched}/{len(worst)} entries match")
    return rep

"""Registry of example manifolds, quaternionic structures and maps."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .manifold import Manifold, euclidean
from .quaternionic import QuaternionicBasis, constant_basis
from .submersion import SmoothMap


def _from_images(images):
    """Matrix whose column j is sign * e_k for ``images[j] = (k, sign)`` (1-based k)."""
    n = len(images)
    M = np.zeros((n, n))
    for j, (k, s) in enumerate(images):
        M[k - 1, j] = s
    return M


# J_a on the coordinate fields d_1..d_4
J1 = _from_images([(2, 1), (1, -1), (4, 1), (3, -1)])
J2 = _from_images([(3, 1), (4, -1), (1, -1), (2, 1)])
J3 = _from_images([(4, 1), (3, 1), (2, -1), (1, -1)])

# e_1 = x3 d_1, e_2 = x3 d_2, e_3 = -x3 d_3, e_4 = x3 d_4
FRAME_SIGNS = np.diag([1.0, 1.0, -1.0, 1.0])


def e_frame(q):
    return q[2] * FRAME_SIGNS


def _nonzero_x3(q):
    return abs(q[2]) > 0.0


def r4_manifold(metric: str) -> Manifold:
    eye = np.eye(4)
    if metric == "frame-orthonormal":
        return Manifold(4, lambda q: q[2] ** -2 * eye, _nonzero_x3, {"e": e_frame}, "r4-qk/frame-orthonormal")
    if metric == "euclidean":
        return Manifold(4, lambda q: eye, _nonzero_x3, {"e": e_frame}, "r4-qk/euclidean")
    raise KeyError(metric)


def r4_basis(basis: str) -> QuaternionicBasis:
    """``coordinate``: the J's act on d_i as listed; ``frame``: same pattern on e_i."""
    if basis == "coordinate":
        return constant_basis(J1, J2, J3, "coordinate")
    if basis == "frame":
        S = FRAME_SIGNS
        return constant_basis(S @ J1 @ S, S @ J2 @ S, S @ J3 @ S, "frame")
    raise KeyError(basis)


def _ex_b(M):
    return SmoothMap(M, euclidean(2), lambda q: dual.stack([dual.exp(q[2]) * dual.sin(q[3]),
                                                            dual.exp(q[2]) * dual.cos(q[3])]), "ex-b")


def _ex_c(M):
    return SmoothMap(M, euclidean(1), lambda q: dual.stack([dual.exp(q[2])]), "ex-c")


def _proj3(M):
    return SmoothMap(M, euclidean(3), lambda q: q[1:], "proj-3")


# (nabla_{e_i} J_a) e_j as e-frame coefficients; rows "a j: i=1 i=2 i=3 i=4"
_GOLDEN_ROWS = """\
1 1: e4 -e3 0 0
1 2: e3 e4 -e1 0
1 3: -e2 e1 0 0
1 4: -e1 -e2 0 0
2 1: 0 e2 0 e4
2 2: 0 -e1 0 e3
2 3: 0 e4 0 -e2
2 4: 0 -e3 0 -e1
3 1: -e2 0 0 -e3
3 2: e1 0 0 e4
3 3: -e4 0 0 e1
3 4: e3 0 0 -e2"""


def _parse_golden():
    out = []
    for line in _GOLDEN_ROWS.splitlines():
        head, tail = line.split(":")
        alpha, j = map(int, head.split())
        for i, tok in enumerate(tail.split(), start=1):
            v = [0.0] * 4
            if tok != "0":
                v[int(tok[-1]) - 1] = -1.0 if tok.startswith("-") else 1.0
            out.append((alpha, i, j, tuple(v)))
    return sorted(out)


@dataclass(frozen=True)
class Expectation:
    """An expected value with the metric/basis it holds under and its origin."""

    value: object
    metric: str | None = None
    basis: str | None = None
    origin: str = "reference"  # reference | derived | trivial
    note: str = ""


@dataclass(frozen=True, eq=False)
class ExampleEntry:
    key: str
    manifold: Callable  # metric variant -> Manifold
    metrics: tuple
    bases: tuple
    basis: Callable  # basis variant -> QuaternionicBasis
    maps: dict  # map key -> (Manifold -> SmoothMap)
    default_metric: str
    default_map: str
    default_basis: str = "coordinate"
    frame: Callable | None = None
    expected: dict = field(default_factory=dict)

    @property
    def synthetic(self) -> bool:
        return self.key.startswith("synthetic/")

    def build(self, metric=None, map_key=None, basis=None):
        """(Manifold, QuaternionicBasis, SmoothMap) for the chosen variants."""
        metric = metric or self.default_metric
        map_key = map_key or self.default_map
        basis = basis or self.default_basis
        if metric not in self.metrics:
            raise KeyError(f"unknown metric {metric!r} for {self.key}; valid: {', '.join(self.metrics)}")
        if map_key not in self.maps:
            raise KeyError(f"unknown map {map_key!r} for {self.key}; valid: {', '.join(self.maps)}")
        if basis not in self.bases:
            raise KeyError(f"unknown basis {basis!r} for {self.key}; valid: {', '.join(self.bases)}")
        M = self.manifold(metric)
        return M, self.basis(basis), self.maps[map_key](M)


def _r4_entry() -> ExampleEntry:
    exp_x3 = lambda p: float(np.exp(p[2]))
    abs_exp = lambda p: float(abs(p[2]) * np.exp(p[2]))
    one = lambda p: 1.0
    abs_x3 = lambda p: float(abs(p[2]))
    expected = {
        "golden-table": Expectation(_parse_golden(), "frame-orthonormal", "frame"),
        "dilation": {
            ("ex-b", "euclidean"): Expectation(("exp(x3)", exp_x3), "euclidean"),
            ("ex-b", "frame-orthonormal"): Expectation(("|x3| exp(x3)", abs_exp), "frame-orthonormal",
                                                       origin="derived"),
            ("ex-c", "euclidean"): Expectation(("exp(x3)", exp_x3), "euclidean"),
            ("ex-c", "frame-orthonormal"): Expectation(("|x3| exp(x3)", abs_exp), "frame-orthonormal",
                                                       origin="derived"),
            ("proj-3", "euclidean"): Expectation(("1", one), "euclidean"),
            ("proj-3", "frame-orthonormal"): Expectation(("|x3|", abs_x3), "frame-orthonormal",
                                                         origin="derived"),
        },
        # coordinate indices are 1-based; "D1"/"D2" refer to the J_1 split unless "common"
        "classification": {
            "proj-3": Expectation({"kind": "h-conformal semi-invariant", "common_D1": [], "D2": [[1]]}),
            "ex-b": Expectation({"kind": "h-conformal semi-invariant", "common_D1": [], "D2": [[1], [2]]}),
            "ex-c": Expectation({"kind": "almost h-conformal semi-invariant", "D1[1]": [[1], [2]],
                                 "D2[1]": [[4]]}, origin="derived"),
        },
    }
    return ExampleEntry(
        key="r4-qk",
        manifold=r4_manifold,
        metrics=("frame-orthonormal", "euclidean"),
        bases=("coordinate", "frame"),
        basis=r4_basis,
        maps={"ex-b": _ex_b, "ex-c": _ex_c, "proj-3": _proj3},
        default_metric="frame-orthonormal",
        default_map="ex-c",
        frame=e_frame,
        expected=expected,
    )


# --------------------------------------------------------------------------
# synthetic cases

# commutes with J1, J2, J3 and squares to -1
K_RIGHT = np.zeros((4, 4))
K_RIGHT[0, 1], K_RIGHT[1, 0], K_RIGHT[2, 3], K_RIGHT[3, 2] = 1.0, -1.0, -1.0, 1.0


def _block(A):
    Z = np.zeros((4, 4))
    return np.block([[A, Z], [Z, A]])


def block_rotation(t: float = 0.7) -> np.ndarray:
    """Orthogonal 8x8 matrix commuting with the block-diagonal J's, mixing both blocks."""
    Z = np.zeros((4, 4))
    M = np.block([[Z, K_RIGHT], [K_RIGHT, Z]])
    return np.cos(t) * np.eye(8) + np.sin(t) * M


def _block_anti(M):
    Q = block_rotation()
    keep = [i for i in range(8) if i not in (0, 4)]  # drop x1 and y1
    L = Q.T[keep]
    return SmoothMap(M, euclidean(6), lambda q: L @ q, "block-anti")


def _block_semi(M):
    return SmoothMap(M, euclidean(3), lambda q: q[5:8], "block-semi")


def _r8_entry() -> ExampleEntry:
    eye = np.eye(8)
    basis = constant_basis(_block(J1), _block(J2), _block(J3), "block")
    return ExampleEntry(
        key="synthetic/r8-block",
        manifold=lambda metric: Manifold(8, lambda q: eye, name="r8-block/euclidean"),
        metrics=("euclidean",),
        bases=("coordinate",),
        basis=lambda b: basis,
        maps={"block-anti": _block_anti, "block-semi": _block_semi},
        default_metric="euclidean",
        default_map="block-anti",
        expected={
            "classification": {
                "block-anti": Expectation({"kind": "h-conformal semi-invariant", "common_D1": [],
                                           "D2_dim": 2}, origin="derived"),
                "block-semi": Expectation({"kind": "h-conformal semi-invariant", "common_D1_dim": 4,
                                           "D2": [[5]]}, origin="derived"),
            }
        },
    )


def _warped_entry() -> ExampleEntry:
    def metric(q):
        return dual.exp(q[2]) * np.eye(4)

    def build(metric_key):
        return Manifold(4, metric, name="warped-fiber/conformal")

    return ExampleEntry(
        key="synthetic/warped-fiber",
        manifold=build,
        metrics=("conformal",),
        bases=("coordinate",),
        basis=r4_basis,
        maps={"fiber-plane": lambda M: SmoothMap(M, euclidean(2), lambda q: q[2:4], "fiber-plane")},
        default_metric="conformal",
        default_map="fiber-plane",
        expected={
            "dilation": {("fiber-plane", "conformal"): Expectation(("exp(-x3/2)", lambda p: float(np.exp(-p[2] / 2))),
                                                                   "conformal", origin="derived")},
        },
    )


def _anti_holomorphic_entry() -> ExampleEntry:
    # kernel span{d1, d3}: J2-invariant, while J1 and J3 carry it onto span{d2, d4}
    proj = lambda M: SmoothMap(M, euclidean(2), lambda q: dual.stack([q[1], q[3]]), "proj-24")
    return ExampleEntry(
        key="synthetic/anti-holomorphic",
        manifold=r4_manifold,
        metrics=("frame-orthonormal", "euclidean"),
        bases=("coordinate",),
        basis=r4_basis,
        maps={"proj-24": proj},
        default_metric="euclidean",
        default_map="proj-24",
        expected={"classification": {"proj-24": Expectation({"kind": "anti-holomorphic almost h-semi-invariant"},
                                                            origin="derived")}},
    )


def conformal_factor(q):
    """Exponent h of the metric exp(2h) delta used by the conformal-projection example."""
    return 0.3 * dual.sin(q[0]) + 0.2 * q[2] * q[3] + 0.1 * q[1] * q[1]


def _conformal_entry() -> ExampleEntry:
    def build(metric_key):
        return Manifold(4, lambda q: dual.exp(2.0 * conformal_factor(q)) * np.eye(4), name="conformal-projection")

    return ExampleEntry(
        key="synthetic/conformal-projection",
        manifold=build,
        metrics=("conformal",),
        bases=("coordinate",),
        basis=r4_basis,
        maps={"proj-3": _proj3},
        default_metric="conformal",
        default_map="proj-3",
        expected={
            "dilation": {("proj-3", "conformal"): Expectation(
                ("exp(-h)", lambda p: float(np.exp(-dual.primal(conformal_factor(np.asarray(p, dtype=float)))))),
                "conformal", origin="derived")},
            "classification": {"proj-3": Expectation({"kind": "h-conformal semi-invariant", "common_D1": [],
                                                      "D2": [[1]]}, origin="derived")},
        },
    )


_REGISTRY = None


def registry() -> list:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = [_r4_entry(), _r8_entry(), _warped_entry(), _anti_holomorphic_entry(), _conformal_entry()]
    return list(_REGISTRY)


def lookup(key: str) -> ExampleEntry:
    for entry in registry():
        if entry.key == key:
            return entry
    raise KeyError(f"unknown example {key!r}; valid: {', '.join(e.key for e in registry())}")


def golden_table(key: str):
    """The 48 entries (alpha, i, j, frame coefficients) registered for ``key``."""
    exp = lookup(key).expected.get("golden-table")
    if exp is None:
        raise KeyError(f"example {key!r} has no golden table")
    return list(exp.value)

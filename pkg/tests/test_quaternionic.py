import numpy as np
import pytest

from oracles import GOLDEN_SPOT, GOLDEN_UNREACHABLE, J_matrix
from qksub import dual
from qksub.examples import J1, J2, J3, e_frame, golden_table, lookup, r4_basis, r4_manifold
from qksub.quaternionic import (
    QuaternionicBasis,
    apply_J,
    check_golden_table,
    check_hermitian_metric,
    check_hyperkahler,
    check_quaternionic_algebra,
    check_quaternionic_kahler,
    constant_basis,
    covariant_derivative_J,
    fit_qk_oneforms,
)
from qksub.sampling import sample_points

HYP = r4_manifold("frame-orthonormal")
FLAT = r4_manifold("euclidean")
COORD = r4_basis("coordinate")
FRAME = r4_basis("frame")
d = np.eye(4)


def test_coordinate_matrices_match_oracle():
    for a, J in ((1, J1), (2, J2), (3, J3)):
        assert np.array_equal(J, J_matrix(a))


def test_apply_J():
    p = np.array([0.0, 0.0, 1.0, 0.0])
    assert np.allclose(apply_J(COORD, 1, d[0], p), d[1])
    assert np.allclose(apply_J(COORD, 1, apply_J(COORD, 1, d[0], p), p), -d[0])
    assert np.allclose(apply_J(COORD, 1, apply_J(COORD, 2, d[0], p), p), d[3])
    assert np.allclose(apply_J(COORD, 3, d[0], p), d[3])


@pytest.mark.parametrize("basis", ["coordinate", "frame"])
def test_algebra_holds(basis):
    rep = check_quaternionic_algebra(r4_basis(basis), sample_points(HYP, 100, seed=0))
    assert rep.verdict == "pass" and rep.residual < 1e-12


def test_algebra_detects_sign_flip_and_perturbation():
    flipped = constant_basis(J1, J2, -J3)
    rep = check_quaternionic_algebra(flipped, [np.ones(4)])
    assert rep.verdict == "fail" and rep.residual == pytest.approx(2.0)
    bumped = constant_basis(J1 + 1e-3 * np.eye(4), J2, J3)
    assert check_quaternionic_algebra(bumped, [np.ones(4)]).residual >= 1e-3


@pytest.mark.parametrize("metric, bound", [("frame-orthonormal", 1e-9), ("euclidean", 1e-12)])
def test_hermitian(metric, bound):
    M = r4_manifold(metric)
    assert check_hermitian_metric(M, COORD, sample_points(M, 100, seed=0)).residual < bound


def test_hermitian_detects_non_orthogonal_J():
    S = np.diag([2.0, 1.0, 1.0, 1.0])
    skewed = constant_basis(S @ J1 @ np.linalg.inv(S), J2, J3)
    assert check_hermitian_metric(FLAT, skewed, sample_points(FLAT, 5, seed=0)).residual > 0.1


def test_covariant_derivative_J():
    p = np.array([0.3, 0.1, 1.2, -0.4])
    for a in (1, 2, 3):
        assert np.allclose(covariant_derivative_J(FLAT, COORD, a, d[0], p), 0)
    E = e_frame(p)
    Einv = np.linalg.inv(E)
    for (a, i, j), coeffs in GOLDEN_SPOT.items():
        got = Einv @ covariant_derivative_J(HYP, FRAME, a, E[:, i - 1], p) @ E[:, j - 1]
        assert np.allclose(got, coeffs, atol=1e-12), (a, i, j)


def test_qk_fit_flat_is_zero():
    fit = fit_qk_oneforms(FLAT, COORD, sample_points(FLAT, 10, seed=0))
    assert fit.residual < 1e-9
    assert np.max(np.abs(fit.omega_values)) < 1e-12


def test_qk_fit_hyperbolic_forms():
    """On x3^-2 delta the coordinate basis is QK with omega_a = +-dx_k / x3 (an exact fit)."""
    pts = sample_points(HYP, 10, seed=0)
    fit = fit_qk_oneforms(HYP, COORD, pts)
    assert fit.residual < 1e-12
    assert np.max(np.abs(fit.omega_values)) > 0.1


@pytest.mark.parametrize("metric", ["frame-orthonormal", "euclidean"])
def test_quaternionic_kahler_passes(metric):
    M = r4_manifold(metric)
    assert check_quaternionic_kahler(M, COORD, sample_points(M, 20, seed=0)).verdict == "pass"


@pytest.mark.parametrize("metric", ["frame-orthonormal", "euclidean"])
def test_quaternionic_kahler_detects_perturbed_J2(metric):
    M = r4_manifold(metric)
    eps = 1e-2
    E = np.random.default_rng(0).normal(size=(4, 4))
    E /= np.linalg.norm(E)
    B = QuaternionicBasis(lambda q: J1, lambda q: J2 + eps * dual.sin(q[0]) * E, lambda q: J3)
    rep = check_quaternionic_kahler(M, B, sample_points(M, 10, seed=1))
    assert rep.verdict == "fail" and rep.residual >= eps / 2


def test_hyperkahler():
    assert check_hyperkahler(FLAT, COORD, sample_points(FLAT, 10, seed=0)).residual < 1e-9
    rep = check_hyperkahler(HYP, COORD, sample_points(HYP, 10, seed=0))
    assert rep.verdict == "fail" and rep.residual > 0.5
    entry = lookup("synthetic/r8-block")
    M8, B8, _ = entry.build()
    assert check_hyperkahler(M8, B8, sample_points(M8, 5, seed=0)).verdict == "pass"


def test_golden_table_frame_basis_misses_only_the_unreachable_entry():
    pts = sample_points(HYP, 10, seed=42)
    rep = check_golden_table(HYP, FRAME, e_frame, golden_table("r4-qk"), pts)
    assert rep.data["total"] == 48
    assert rep.data["matched"] == 47
    (miss,) = rep.data["mismatches"]
    assert (miss["alpha"], miss["i"], miss["j"]) == GOLDEN_UNREACHABLE
    # the table lists -e1; the connection gives 0
    assert miss["expected"] == [-1.0, 0, 0, 0] and np.allclose(miss["computed"], 0)


def test_golden_table_needs_the_hyperbolic_metric():
    pts = sample_points(FLAT, 10, seed=42)
    rep = check_golden_table(FLAT, FRAME, e_frame, golden_table("r4-qk"), pts)
    assert rep.verdict == "fail" and rep.data["matched"] < 30


def test_golden_table_lookup():
    table = {(a, i, j): tuple(c) for a, i, j, c in golden_table("r4-qk")}
    assert len(table) == 48
    for key, coeffs in GOLDEN_SPOT.items():
        assert table[key] == coeffs
    with pytest.raises(KeyError):
        golden_table("synthetic/r8-block")

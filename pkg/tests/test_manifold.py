import numpy as np
import pytest

from oracles import hyperbolic_christoffel, koszul_christoffel, random_spd_metric
from qksub import dual
from qksub.engine import DiffEngine
from qksub.examples import r4_manifold
from qksub.manifold import (
    DomainError,
    Manifold,
    NumericError,
    christoffel,
    directional_derivative,
    euclidean,
    gradient,
    levi_civita,
    lie_bracket,
    orthonormal_frame,
)
from qksub.sampling import sample_points

HYP = r4_manifold("frame-orthonormal")
FLAT = r4_manifold("euclidean")
d = np.eye(4)


def const(v):
    return lambda q: v


def test_directional_derivatives():
    assert directional_derivative(lambda q: q[2], np.array([1.0, 1, 2, 1]), d[2]) == pytest.approx(1.0)
    assert directional_derivative(lambda q: dual.exp(q[2]), np.array([0.0, 0, 1, 0]), d[2]) == pytest.approx(
        2.718281828, abs=1e-9)


@pytest.mark.parametrize("mode", ["dual", "fd"])
def test_directional_derivative_engines_agree(mode):
    f = lambda q: dual.exp(q[2]) * dual.sin(q[3])
    p = np.array([0.3, -0.2, 0.8, 1.4])
    exact = np.exp(0.8) * np.cos(1.4)
    assert abs(directional_derivative(f, p, d[3], DiffEngine(mode)) - exact) < 1e-6


def test_non_finite_derivative_raises():
    with np.errstate(divide="ignore"), pytest.raises(NumericError):
        directional_derivative(lambda q: dual.log(q[0]), np.array([0.0, 1, 1, 1]), d[0])


def test_lie_brackets():
    p = np.array([0.0, 0.0, 2.0, 0.0])
    assert np.allclose(lie_bracket(const(d[0]), const(d[1]), p), 0)
    e1 = lambda q: q[2] * d[0]
    e3 = lambda q: -q[2] * d[2]
    assert np.allclose(lie_bracket(e1, e3, p), [2, 0, 0, 0])
    rng = np.random.default_rng(1)
    K1, K2 = rng.normal(size=(2, 4, 4))
    X = lambda q: K1 @ q + dual.sin(q[0]) * d[1]
    Y = lambda q: K2 @ q
    q = rng.normal(size=4)
    assert np.max(np.abs(lie_bracket(X, Y, q) + lie_bracket(Y, X, q))) < 1e-9


def test_christoffel_against_koszul_oracle():
    m = random_spd_metric(seed=3)
    M = Manifold(4, lambda q: m(q, dual.sin))
    for p in np.random.default_rng(0).uniform(-1, 1, size=(5, 4)):
        assert np.max(np.abs(christoffel(M, p) - koszul_christoffel(m, p))) < 1e-8


def test_christoffel_hyperbolic_closed_form():
    for p in sample_points(HYP, 5, seed=3):
        assert np.max(np.abs(christoffel(HYP, p) - hyperbolic_christoffel(p))) < 1e-12


def test_levi_civita_flat_and_hyperbolic():
    p = np.array([0.4, -0.3, 1.7, 0.2])
    for i in range(4):
        for j in range(4):
            assert np.allclose(levi_civita(FLAT, const(d[i]), const(d[j]), p), 0)
    e1 = lambda q: q[2] * d[0]
    e3 = lambda q: -q[2] * d[2]
    assert np.allclose(levi_civita(HYP, e1, e1, p), -e3(p))


def test_levi_civita_rejects_points_outside_domain():
    with pytest.raises(DomainError):
        levi_civita(HYP, const(d[0]), const(d[1]), np.zeros(4))


def _random_fields(rng):
    Ks = rng.normal(size=(3, 4, 4))
    cs = rng.normal(size=(3, 4))
    return [lambda q, K=K, c=c: c + K @ q for K, c in zip(Ks, cs)]


@pytest.mark.parametrize("metric", ["frame-orthonormal", "euclidean"])
def test_torsion_free(metric):
    M = r4_manifold(metric)
    rng = np.random.default_rng(7)
    worst = 0.0
    for p in sample_points(M, 50, seed=11):
        X, Y, _ = _random_fields(rng)
        t = levi_civita(M, X, Y, p) - levi_civita(M, Y, X, p) - lie_bracket(X, Y, p)
        worst = max(worst, np.max(np.abs(t)))
    assert worst < 1e-6


def test_metric_compatible():
    rng = np.random.default_rng(5)
    for p in sample_points(HYP, 10, seed=2):
        X, Y, Z = _random_fields(rng)
        x = X(p)
        lhs = directional_derivative(lambda q: Y(q) @ HYP.metric(q) @ Z(q), p, x)
        rhs = HYP.g(p, levi_civita(HYP, X, Y, p), Z(p)) + HYP.g(p, Y(p), levi_civita(HYP, X, Z, p))
        assert abs(lhs - rhs) < 1e-6


def test_gradient():
    p = np.array([0.0, 0.0, 2.0, 0.0])
    assert np.allclose(gradient(FLAT, lambda q: q[2], p), d[2])
    assert np.allclose(gradient(HYP, lambda q: q[2], p), [0, 0, 4, 0])


def test_gradient_singular_metric():
    M = Manifold(2, lambda q: np.zeros((2, 2)))
    with pytest.raises(NumericError):
        gradient(M, lambda q: q[0], np.zeros(2))


def test_orthonormal_frames():
    p = np.array([0.0, 0.0, 2.0, 0.0])
    assert np.allclose(orthonormal_frame(FLAT, p), np.eye(4))
    U = orthonormal_frame(HYP, p)
    assert np.allclose(U, 2 * np.eye(4))
    assert np.max(np.abs(U.T @ HYP.metric(p) @ U - np.eye(4))) < 1e-10
    with pytest.raises(NumericError):
        orthonormal_frame(euclidean(2), np.zeros(2), basis=np.array([[1.0, 2.0], [1.0, 2.0]]))


def test_sampling_is_reproducible_and_respects_domain():
    a = sample_points(HYP, 25, seed=42)
    b = sample_points(HYP, 25, seed=42)
    assert np.array_equal(a, b)
    assert np.all(np.abs(a[:, 2]) >= 0.5)
    assert not np.array_equal(a, sample_points(HYP, 25, seed=43))

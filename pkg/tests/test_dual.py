import numpy as np
import pytest

from qksub import dual
from qksub.engine import DiffEngine


def test_scalar_rules_match_closed_forms(dual_engine):
    x = 0.7
    cases = [
        (dual.exp, np.exp),
        (dual.log, lambda t: 1 / t),
        (dual.sqrt, lambda t: 0.5 / np.sqrt(t)),
        (dual.sin, np.cos),
        (dual.cos, lambda t: -np.sin(t)),
    ]
    for f, df in cases:
        assert dual_engine.derivative(f, x, 1.0) == pytest.approx(df(x), rel=1e-14)


def test_arithmetic_and_power(dual_engine):
    f = lambda t: (3 * t * t - 1 / t + t ** 3) / (2 + t)
    x = 1.3
    h = 1e-6
    fd = (f(x + h) - f(x - h)) / (2 * h)
    assert dual_engine.derivative(f, x, 1.0) == pytest.approx(fd, rel=1e-8)


def test_matrix_inverse_and_solve(dual_engine):
    A0 = np.array([[2.0, 0.3], [0.1, 1.5]])
    dA = np.array([[0.4, -0.2], [0.3, 0.1]])
    got = dual_engine.derivative(lambda t: dual.inv(A0 + t * dA), 0.0, 1.0)
    inv = np.linalg.inv(A0)
    assert np.allclose(got, -inv @ dA @ inv, atol=1e-14)
    b = np.array([1.0, -2.0])
    got = dual_engine.derivative(lambda t: dual.solve(A0 + t * dA, b), 0.0, 1.0)
    assert np.allclose(got, -inv @ dA @ inv @ b, atol=1e-14)


def test_nested_derivatives_second_order(dual_engine):
    f = lambda q: dual.exp(q[0]) * dual.sin(q[1])
    p = np.array([0.2, 0.9])
    e0, e1 = np.eye(2)
    mixed = dual_engine.derivative(lambda q: dual_engine.derivative(f, q, e1), p, e0)
    assert mixed == pytest.approx(np.exp(0.2) * np.cos(0.9), rel=1e-14)
    second = dual_engine.derivative(lambda q: dual_engine.derivative(f, q, e1), p, e1)
    assert second == pytest.approx(-np.exp(0.2) * np.sin(0.9), rel=1e-14)


def test_pytree_outputs(dual_engine):
    out = dual_engine.derivative(lambda q: {"a": (q * q, [dual.sum_(q)])}, np.array([1.0, 2.0]), np.array([1.0, 0.0]))
    assert np.allclose(out["a"][0], [2.0, 0.0])
    assert out["a"][1][0] == pytest.approx(1.0)


def test_fd_engine_agrees_with_dual(dual_engine, fd_engine):
    f = lambda q: dual.exp(q[2]) * dual.sin(q[3])
    p = np.array([0.1, 0.2, 0.4, 1.1])
    X = np.array([0.0, 0.0, 0.0, 1.0])
    assert abs(dual_engine.derivative(f, p, X) - fd_engine.derivative(f, p, X)) < 1e-6


def test_engine_rejects_bad_settings():
    with pytest.raises(ValueError):
        DiffEngine("symbolic")
    with pytest.raises(ValueError):
        DiffEngine("fd", 0.0)

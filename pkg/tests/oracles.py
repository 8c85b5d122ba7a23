"""Independent reference computations and frozen values used by the tests.

Nothing here imports the package's differentiation code: derivatives are
either closed forms or plain numpy central differences.
"""
import numpy as np

# --------------------------------------------------------------------------
# frozen values

E = float(np.e)

# (alpha, i, j) -> frame coefficients of (nabla_{e_i} J_alpha) e_j, spot entries
GOLDEN_SPOT = {
    (1, 1, 1): (0, 0, 0, 1),
    (1, 2, 1): (0, 0, -1, 0),
    (1, 2, 3): (1, 0, 0, 0),
    (2, 1, 1): (0, 0, 0, 0),
    (3, 4, 4): (0, -1, 0, 0),
}

# the one table entry no quaternionic Kaehler structure on this chart reproduces
GOLDEN_UNREACHABLE = (1, 3, 2)

# J_a on coordinate fields, as (image index, sign), 1-based
J_IMAGES = {
    1: [(2, 1), (1, -1), (4, 1), (3, -1)],
    2: [(3, 1), (4, -1), (1, -1), (2, 1)],
    3: [(4, 1), (3, 1), (2, -1), (1, -1)],
}


def J_matrix(alpha):
    M = np.zeros((4, 4))
    for j, (k, s) in enumerate(J_IMAGES[alpha]):
        M[k - 1, j] = s
    return M


# --------------------------------------------------------------------------
# connection oracles


def koszul_christoffel(metric, p, h=1e-5):
    """Gamma[k, i, j] from the Koszul formula with numpy central differences."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    dg = np.zeros((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dg[k] = (np.asarray(metric(p + e), dtype=float) - np.asarray(metric(p - e), dtype=float)) / (2 * h)
    ginv = np.linalg.inv(np.asarray(metric(p), dtype=float))
    gamma = np.zeros((n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                gamma[k, i, j] = 0.5 * sum(ginv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j]) for l in range(n))
    return gamma


def conformal_christoffel(grad_h):
    """Gamma for exp(2h) delta: delta_ik h_j + delta_jk h_i - delta_ij h_k."""
    dh = np.asarray(grad_h, dtype=float)
    n = len(dh)
    I = np.eye(n)
    return (np.einsum("ki,j->kij", I, dh) + np.einsum("kj,i->kij", I, dh) - np.einsum("ij,k->kij", I, dh))


def hyperbolic_christoffel(p):
    """Gamma for x3^-2 delta, i.e. h = -ln|x3|."""
    x3 = p[2]
    return conformal_christoffel(np.array([0.0, 0.0, -1.0 / x3, 0.0]))


# --------------------------------------------------------------------------
# map oracles


def ex_b_jacobian(p):
    x3, x4 = p[2], p[3]
    return np.array([[0, 0, np.exp(x3) * np.sin(x4), np.exp(x3) * np.cos(x4)],
                     [0, 0, np.exp(x3) * np.cos(x4), -np.exp(x3) * np.sin(x4)]])


def numeric_jacobian(f, p, h=1e-6):
    p = np.asarray(p, dtype=float)
    cols = []
    for k in range(len(p)):
        e = np.zeros(len(p))
        e[k] = h
        cols.append((np.asarray(f(p + e), dtype=float) - np.asarray(f(p - e), dtype=float)) / (2 * h))
    return np.stack(cols, axis=-1)


def random_spd_metric(seed=0, n=4):
    """A smooth, non-conformal positive definite metric field on R^n.

    Pass ``sin=qksub.dual.sin`` to evaluate it at dual points.
    """
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) * 0.3
    Bm = rng.normal(size=(n, n)) * 0.2

    def metric(q, sin=np.sin):
        S = A * sin(q[0]) + Bm * q[1] * q[2]
        return np.eye(n) * 2.0 + (S + S.T) * 0.5

    return metric

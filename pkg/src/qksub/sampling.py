"""Reproducible sample points and random sections."""
from __future__ import annotations

import zlib

import numpy as np

DEFAULT_BOX = (-1.5, 1.5)
DEFAULT_EXCLUDE = (2, 0.5)  # reject |x_3| < 0.5 (0-based coordinate 2)


def sample_points(M, count: int, seed: int = 42, box=DEFAULT_BOX, exclude=DEFAULT_EXCLUDE,
                  max_tries: int = 100000) -> np.ndarray:
    """Uniform points in ``box``^n that satisfy the domain and exclusion rule."""
    rng = np.random.default_rng(seed)
    lo, hi = box
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not draw enough domain points")
        p = rng.uniform(lo, hi, size=M.dim)
        if exclude is not None and M.dim > exclude[0] and abs(p[exclude[0]]) < exclude[1]:
            continue
        if not M.domain(p):
            continue
        out.append(p)
    return np.asarray(out)


def rng_for(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Generator keyed by run seed, check label and point index.

    Keying by label keeps every check's random directions independent of the
    order in which suites run.
    """
    return np.random.default_rng([int(seed), zlib.crc32(label.encode()), int(index)])

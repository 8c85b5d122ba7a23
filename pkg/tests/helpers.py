"""Shortcuts for building registered examples in tests."""
from qksub.engine import DiffEngine
from qksub.examples import lookup
from qksub.sampling import sample_points
from qksub.semi_invariant import Geometry


def build(metric, map_key, basis="coordinate", key="r4-qk"):
    """(M, B, F) for a registered example."""
    return lookup(key).build(metric, map_key, basis)


def geometry(metric, map_key, key="r4-qk", basis="coordinate", engine="dual", seed=42, pairs=2):
    M, B, F = build(metric, map_key, basis, key)
    return Geometry(F, B, DiffEngine(engine), seed=seed, pairs=pairs)


def points(M, n=10, seed=42):
    return sample_points(M, n, seed=seed)

import numpy as np
import pytest

from qksub.examples import e_frame, lookup, r4_basis, registry
from qksub.quaternionic import check_quaternionic_algebra, check_quaternionic_kahler
from qksub.sampling import sample_points
from qksub.submersion import analyze


def test_registry_keys():
    keys = [e.key for e in registry()]
    assert keys[0] == "r4-qk" and len(keys) == len(set(keys)) == 5
    assert all(e.synthetic for e in registry()[1:])
    with pytest.raises(KeyError):
        lookup("r5")


@pytest.mark.parametrize("entry", registry(), ids=lambda e: e.key)
def test_every_variant_is_quaternionic_kahler_and_submersive(entry):
    for metric in entry.metrics:
        for map_key in entry.maps:
            M, B, F = entry.build(metric, map_key)
            pts = sample_points(M, 5, seed=0)
            assert check_quaternionic_algebra(B, pts).verdict == "pass"
            assert check_quaternionic_kahler(M, B, pts).verdict == "pass"
            for p in pts:
                assert analyze(F, p).is_submersion


def test_build_rejects_unknown_variants():
    entry = lookup("r4-qk")
    for kwargs in ({"metric": "sphere"}, {"map_key": "ex-z"}, {"basis": "polar"}):
        with pytest.raises(KeyError):
            entry.build(**kwargs)


def test_frame_basis_is_the_coordinate_pattern_on_the_frame():
    p = np.array([0.2, 0.3, -1.4, 0.5])
    E = e_frame(p)
    C, F = r4_basis("coordinate"), r4_basis("frame")
    for a in (1, 2, 3):
        # J_a e_j expressed in the e-frame equals the coordinate matrix
        assert np.allclose(np.linalg.inv(E) @ F.J(a, p) @ E, C.J(a, p))


@pytest.mark.parametrize("key", [e.key for e in registry()])
def test_registered_dilations(key):
    entry = lookup(key)
    for (map_key, metric), exp in entry.expected.get("dilation", {}).items():
        M, _, F = entry.build(metric, map_key)
        for p in sample_points(M, 10, seed=1):
            ref = exp.value[1](p)
            assert abs(analyze(F, p).dilation - ref) <= 1e-9 * abs(ref), (map_key, metric)

import numpy as np
import pytest

from helpers import build, geometry, points
from qksub import dual
from qksub import theorems as T
from qksub.engine import DiffEngine
from qksub.examples import J1, J2, J3, lookup
from qksub.manifold import euclidean
from qksub.quaternionic import QuaternionicBasis
from qksub.semi_invariant import Geometry
from qksub.submersion import SmoothMap


def by_name(reports):
    return {r.check_name: r for r in reports}


def side_max(rep, label):
    return rep.data["sides"][label]["max_residual"]


# --------------------------------------------------------------------------
# evaluation machinery


def test_side_holds_and_vacuous():
    s = T.Side()
    assert s.holds(1e-6) and s.vacuous
    s.add(1e-3, "x")
    assert not s.vacuous and not s.holds(1e-6) and s.holds(1e-2)
    assert s.terms == {"x": 1e-3}


def test_equivalence_records_counterexamples():
    geo = geometry("euclidean", "proj-3")
    pts = points(geo.M, 3)

    def fn(geo, p, idx):
        a, b = T.Side(), T.Side()
        a.add(0.0, "direct")
        b.add(1.0 if idx == 1 else 0.0, "clause")
        return {"a": a, "b[1]": b}

    rep = T.evaluate_equivalence("toy", geo, pts, fn, 1e-6, 1e-4)
    assert rep.verdict == "fail" and rep.residual == 1.0
    (c,) = rep.data["counterexamples"]
    assert c["point_index"] == 1 and c["side"] == "b[1]" and c["seed"] == 42
    assert np.allclose(c["point"], pts[1]) and c["a_holds"] and not c["side_holds"]
    assert rep.worst_point == [float(x) for x in pts[1]]


def test_equivalence_uses_asymmetric_tolerances():
    geo = geometry("euclidean", "proj-3")

    def fn(geo, p, idx):
        a, b = T.Side(), T.Side()
        a.add(0.0, "direct")
        b.add(5e-5, "clause")  # above the side-(a) tolerance, below the side-(b) one
        return {"a": a, "b[1]": b}

    assert T.evaluate_equivalence("toy", geo, points(geo.M, 2), fn, 1e-6, 1e-4).verdict == "pass"


def test_equivalence_skips_when_not_applicable():
    geo = geometry("euclidean", "proj-3")
    rep = T.evaluate_equivalence("toy", geo, points(geo.M, 2), None, 1e-6, 1e-4,
                                 applicable=lambda g, p: "never applies")
    assert rep.verdict == "skipped" and "never applies" in rep.notes[0]


def test_implication_counts_only_points_where_hypothesis_holds():
    geo = geometry("euclidean", "proj-3")

    def fn(geo, p, idx):
        hyp, concl = T.Side(), T.Side()
        hyp.add(0.0 if idx == 0 else 1.0, "h")
        concl.add(1.0, "c")
        return hyp, concl

    rep = T.evaluate_implication("toy", geo, points(geo.M, 3), fn, 1e-6, 1e-4)
    assert rep.verdict == "fail" and rep.residual == 1.0 and rep.data["points_evaluated"] == 1


# --------------------------------------------------------------------------
# structure identities


@pytest.mark.parametrize("metric, map_key", [("frame-orthonormal", "ex-c"), ("euclidean", "ex-b")])
def test_lemma1_identities_hold(metric, map_key):
    geo = geometry(metric, map_key, pairs=5)
    rep = T.verify_lemma1(geo, points(geo.M, 20))
    assert rep.verdict == "pass" and rep.residual < 1e-5
    assert len(rep.data["identities"]) == 18


def test_lemma1_detects_swapped_B_C():
    geo = geometry("frame-orthonormal", "ex-c")
    rep = T.verify_lemma1(geo, points(geo.M, 5), fault="swap-BC")
    assert rep.verdict == "fail" and rep.residual > 0.1


def test_lemma1_swap_is_invisible_when_T_vanishes():
    """Flat fibres have T = 0, so exchanging B and C in B T changes nothing."""
    geo = geometry("euclidean", "ex-b")
    assert T.verify_lemma1(geo, points(geo.M, 5), fault="swap-BC").residual < 1e-10


def _first_order_perturbed(p, eps=0.05):
    """J1 unchanged at p but with a wrong derivative there."""
    E = np.random.default_rng(0).normal(size=(4, 4))
    return QuaternionicBasis(lambda q: J1 + eps * (q[0] - p[0]) * E, lambda q: J2, lambda q: J3)


@pytest.mark.parametrize("metric, map_key", [("frame-orthonormal", "ex-c"), ("euclidean", "ex-b")])
def test_lemma1_detects_perturbed_J(metric, map_key):
    M, _, F = build(metric, map_key)
    for p in points(M, 5):
        geo = Geometry(F, _first_order_perturbed(p), DiffEngine())
        assert T.qk_gate(geo, p) is not None
        assert T.verify_lemma1(geo, [p], require_qk=False).residual > 1e-2


def test_lemma1_gates_on_the_qk_fit():
    M, _, F = build("euclidean", "ex-b")
    p = points(M, 1)[0]
    rep = T.verify_lemma1(Geometry(F, _first_order_perturbed(p), DiffEngine()), [p])
    assert rep.verdict == "skipped"


def test_nabla_phi_omega_consistent_with_lemma1():
    geo = geometry("frame-orthonormal", "ex-c", pairs=3)
    rep = T.verify_nabla_phi_omega(geo, points(geo.M, 10))
    assert rep.verdict == "pass"
    part1 = rep.data["lemma1_part1"]
    for a in (1, 2, 3):
        bound = part1[f"1.1[{a}]"] + part1[f"1.2[{a}]"] + 1e-9
        assert rep.data["identities"][f"phi[{a}]"] <= bound
        assert rep.data["identities"][f"omega[{a}]"] <= bound


# --------------------------------------------------------------------------
# integrability


@pytest.mark.parametrize("key, metric, map_key", [
    ("r4-qk", "euclidean", "ex-b"), ("r4-qk", "frame-orthonormal", "ex-c"),
    ("synthetic/r8-block", "euclidean", "block-anti"), ("synthetic/r8-block", "euclidean", "block-semi"),
    ("synthetic/warped-fiber", "conformal", "fiber-plane"),
])
def test_D2_closure(key, metric, map_key):
    geo = geometry(metric, map_key, key=key)
    rep = T.check_D2_integrability(geo, points(geo.M, 5))
    assert rep.verdict in ("pass", "vacuous") and rep.residual < 1e-6


def test_D2_closure_non_coordinate_distribution():
    geo = geometry("euclidean", "block-anti", key="synthetic/r8-block")
    pts = points(geo.M, 5)
    sp = geo.split(pts[0])
    assert sp.common_D2.shape[1] == 2
    assert np.max(np.abs(sp.common_D2)) < 0.99  # not spanned by coordinate fields
    assert T.check_D2_integrability(geo, pts).residual < 1e-6


def test_D1_integrability_flat_ex_c():
    geo = geometry("euclidean", "ex-c")
    rep = T.check_D1_integrability(geo, points(geo.M, 5))
    assert rep.verdict == "pass"
    assert side_max(rep, "a") < 1e-10 and side_max(rep, "b[1]") < 1e-5


def test_D1_integrability_anti_invariant_is_vacuous():
    geo = geometry("euclidean", "proj-3")
    rep = T.check_D1_integrability(geo, points(geo.M, 3))
    assert rep.verdict == "pass"
    assert all(v["vacuous"] == 3 for v in rep.data["sides"].values())


def test_D1_integrability_clause_b_misses_connection_terms():
    """On x3^-2 delta the (b) side drops the connection-form terms and disagrees."""
    geo = geometry("frame-orthonormal", "ex-c")
    rep = T.check_D1_integrability(geo, points(geo.M, 3))
    assert side_max(rep, "a") < 1e-10
    assert rep.verdict == "fail" and side_max(rep, "b[1]") > 1.0


def test_horizontal_integrability_flat_ex_b():
    geo = geometry("euclidean", "ex-b")
    main, _ = T.check_horizontal_integrability(geo, points(geo.M, 10))
    assert main.verdict == "pass"
    assert all(side_max(main, f"b[{a}]") < 1e-5 for a in (1, 2, 3))


def _holomorphic_perturbation(eps):
    M, B, _ = build("euclidean", "ex-b")
    # (Re, Im) of w + eps z^2 with z = x1 + i x2, w = x3 + i x4
    F = SmoothMap(M, euclidean(2), lambda q: dual.stack([q[2] + eps * (q[0] * q[0] - q[1] * q[1]),
                                                         q[3] + 2 * eps * q[0] * q[1]]))
    return Geometry(F, B, DiffEngine())


def test_horizontal_integrability_fault_injection():
    base = _holomorphic_perturbation(0.0)
    main, _ = T.check_horizontal_integrability(base, points(base.M, 5))
    assert side_max(main, "a") < 1e-12
    geo = _holomorphic_perturbation(0.1)
    main, _ = T.check_horizontal_integrability(geo, points(geo.M, 5))
    assert main.verdict == "pass"  # the two sides still agree
    assert side_max(main, "a") > 1e-3 and side_max(main, "b[1]") > 1e-3


def test_anti_holomorphic_corollary_consistent():
    geo = geometry("euclidean", "proj-24", key="synthetic/anti-holomorphic")
    main, anti = T.check_horizontal_integrability(geo, points(geo.M, 5))
    assert anti.verdict == "pass" and main.verdict == "pass"


def test_conformal_projection_oracle():
    """exp(2h) delta with proj-3: horizontal space integrable, not totally geodesic."""
    geo = geometry("conformal", "proj-3", key="synthetic/conformal-projection")
    pts = points(geo.M, 5)
    main, _ = T.check_horizontal_integrability(geo, pts)
    assert main.verdict == "pass"
    for a in (1, 2, 3):
        assert main.data["sides"][f"b[{a}]"]["terms"]["clause-2"] < 1e-12
    th4 = by_name(T.check_foliation_conditions(geo, pts))["horizontal-geodesic"]
    assert th4.verdict == "pass" and side_max(th4, "a") > 0.1
    for a in (1, 2, 3):
        assert th4.data["sides"][f"b[{a}]"]["terms"]["clause-2"] == pytest.approx(side_max(th4, "a"), rel=1e-9)


# --------------------------------------------------------------------------
# foliations


def test_foliations_flat_ex_b():
    geo = geometry("euclidean", "ex-b")
    reps = by_name(T.check_foliation_conditions(geo, points(geo.M, 5)))
    for name in ("horizontal-geodesic", "vertical-geodesic"):
        assert reps[name].verdict == "pass" and side_max(reps[name], "a") < 1e-10
    assert side_max(reps["horizontal-geodesic"], "b[1]") < 1e-5
    assert reps["locally-product"].data["product"] is True


def test_foliations_need_a_common_D1():
    geo = geometry("frame-orthonormal", "ex-c")
    reps = by_name(T.check_foliation_conditions(geo, points(geo.M, 3)))
    assert reps["d1-geodesic"].verdict == "skipped" and reps["d2-geodesic"].verdict == "skipped"


def test_foliations_block_semi():
    geo = geometry("euclidean", "block-semi", key="synthetic/r8-block")
    reps = by_name(T.check_foliation_conditions(geo, points(geo.M, 3)))
    for name in ("horizontal-geodesic", "vertical-geodesic", "d1-geodesic", "d2-geodesic"):
        assert reps[name].verdict == "pass", name


# --------------------------------------------------------------------------
# homothety and geodesy


def test_homothety_riemannian_projection():
    geo = geometry("euclidean", "proj-3")
    reps = by_name(T.check_homothety_equivalences(geo, points(geo.M, 5)))
    main = reps["homothety:jd2-mu-geodesic"]
    assert main.verdict == "pass"
    assert max(side_max(main, k) for k in main.data["sides"]) < 1e-6


def test_homothety_side_is_vacuous_when_mu_is_zero():
    """ex-b: J_a D2 fills the horizontal space, so mu = 0 and the (b) side is empty."""
    geo = geometry("euclidean", "ex-b")
    main = by_name(T.check_homothety_equivalences(geo, points(geo.M, 3)))["homothety:jd2-mu-geodesic"]
    assert side_max(main, "a") > 0.1
    assert main.verdict == "fail"
    assert any(c["side_vacuous"] for c in main.data["counterexamples"])


def test_totally_geodesic_criterion_projection():
    geo = geometry("euclidean", "proj-3")
    reps = by_name(T.check_totally_geodesic_criterion(geo, points(geo.M, 5)))
    mg = reps["map-geodesic"]
    assert mg.verdict == "pass"
    assert max(side_max(mg, k) for k in mg.data["sides"]) < 1e-6


def test_umbilic_flat_fibres():
    geo = geometry("euclidean", "ex-b")
    reps = by_name(T.check_totally_geodesic_criterion(geo, points(geo.M, 5)))
    assert reps["umbilic-mean-curvature-in-jd2"].verdict == "pass"
    assert reps["umbilic-fibres-geodesic"].verdict == "pass"
    fib = by_name(T.check_fibre_geometry(geo, points(geo.M, 5)))
    assert all(r.residual < 1e-8 for r in fib.values())


def test_warped_fibres_are_umbilic_with_nonzero_mean_curvature():
    geo = geometry("conformal", "fiber-plane", key="synthetic/warped-fiber")
    pts = points(geo.M, 5)
    fib = by_name(T.check_fibre_geometry(geo, pts))
    assert fib["fibre-umbilicity"].residual < 1e-8
    assert fib["fibre-mean-curvature"].residual > 0.1
    # H is horizontal, hence inside J_a D2 for a = 2, 3 where J_a D2 fills the horizontal space
    H = T.mean_curvature_at(geo, pts[0])
    sp = geo.split(pts[0])
    for a in (2, 3):
        P = sp.JD2[a] @ sp.JD2[a].T @ sp.metric
        assert np.linalg.norm(P @ H - H) < 1e-10


def test_tension_two_route():
    for metric, map_key in (("euclidean", "ex-b"), ("frame-orthonormal", "ex-c")):
        geo = geometry(metric, map_key)
        assert T.check_tension(geo, points(geo.M, 10)).residual < 1e-5


def test_harmonic_corollary_selection():
    geo = geometry("euclidean", "ex-b")
    names = [r.check_name for r in T.check_totally_geodesic_criterion(geo, points(geo.M, 2))]
    assert "harmonic:iff-minimal" in names
    geo = geometry("euclidean", "proj-3")
    names = [r.check_name for r in T.check_totally_geodesic_criterion(geo, points(geo.M, 2))]
    assert "harmonic:minimal-iff-homothetic" in names


def test_suites_run_on_every_registered_example():
    for entry in [lookup(k) for k in ("synthetic/anti-holomorphic", "synthetic/conformal-projection")]:
        M, B, F = entry.build()
        geo = Geometry(F, B, DiffEngine())
        pts = points(M, 2)
        reps = (T.check_foliation_conditions(geo, pts) + T.check_homothety_equivalences(geo, pts)
                + T.check_totally_geodesic_criterion(geo, pts))
        assert all(r.verdict in ("pass", "fail", "skipped", "vacuous") for r in reps)

"""Residual checks of the structure identities and the geometric criteria.

Every criterion of the form "(a) holds iff (b) holds" is evaluated per point:
side (a) holds when its residual is below ``tol_a``, every other side when its
residual is below ``tol_b``; a side quantified over a zero distribution holds
vacuously.  Points where the sides disagree are recorded as counterexample
candidates and make the consistency report fail.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifold import metric_orthonormal_basis
from .quaternionic import ALPHAS, cyc
from .report import CheckReport, from_samples, skipped
from .semi_invariant import Geometry
from .submersion import baird_tension, mean_curvature, tension_field

QK_GATE = 1e-5

DEFAULT_TOLERANCES = {
    "lemma1": 1e-4,
    "d2-closure": 1e-6,
    "side-a": 1e-6,
    "side-b": 1e-4,
    "fibre": 1e-8,
    "tension": 1e-5,
}


@dataclass
class Side:
    """Running maximum of one side's residuals; vacuous until a value arrives."""

    residual: float = 0.0
    vacuous: bool = True
    terms: dict = field(default_factory=dict)

    def add(self, value: float, term: str | None = None):
        value = float(value)
        self.residual = max(self.residual, value)
        self.vacuous = False
        if term is not None:
            self.terms[term] = max(self.terms.get(term, 0.0), value)

    def holds(self, tol: float) -> bool:
        return self.vacuous or self.residual < tol


def _provenance(geo: Geometry, count: int) -> dict:
    return {"seed": geo.seed, "engine": geo.engine.describe(), "points": count}


def qk_gate(geo: Geometry, p) -> str | None:
    defect = geo.qk_fit(p)[1]
    if defect > QK_GATE:
        return f"quaternionic Kaehler fit residual {defect:.3g} exceeds {QK_GATE:g}"
    return None


def evaluate_equivalence(name, geo: Geometry, points, fn, tol_a, tol_b, applicable=None,
                         needs_qk=True, notes=()) -> CheckReport:
    """Run ``fn(geo, p, index) -> {label: Side}`` and compare every side with ``"a"``."""
    counter, skipped_points, summary = [], [], {}
    evaluated = 0
    for idx, p in enumerate(points):
        p = np.asarray(p, dtype=float)
        reason = (qk_gate(geo, p) if needs_qk else None) or (applicable(geo, p) if applicable else None)
        if reason:
            skipped_points.append({"point_index": idx, "point": p, "reason": reason})
            continue
        evaluated += 1
        sides = fn(geo, p, idx)
        a_ok = sides["a"].holds(tol_a)
        for label, sd in sides.items():
            tol = tol_a if label == "a" else tol_b
            agg = summary.setdefault(label, {"max_residual": 0.0, "holds": 0, "vacuous": 0, "terms": {}})
            agg["max_residual"] = max(agg["max_residual"], sd.residual)
            agg["holds"] += int(sd.holds(tol))
            agg["vacuous"] += int(sd.vacuous)
            for t, v in sd.terms.items():
                agg["terms"][t] = max(agg["terms"].get(t, 0.0), v)
            if label != "a" and sd.holds(tol_b) != a_ok:
                counter.append({"point_index": idx, "point": p, "side": label,
                                "residual_a": sides["a"].residual, "a_holds": a_ok, "a_vacuous": sides["a"].vacuous,
                                "residual_side": sd.residual, "side_holds": not a_ok, "side_vacuous": sd.vacuous,
                                "seed": geo.seed, "engine": geo.engine.describe()})
    prov = _provenance(geo, len(points))
    if evaluated == 0:
        reasons = sorted({s["reason"] for s in skipped_points}) or ["no points"]
        rep = skipped(name, 1.0, "; ".join(reasons), prov)
        rep.data = {"not_applicable": skipped_points}
        return rep
    data = {"sides": summary, "counterexamples": counter, "points_evaluated": evaluated,
            "not_applicable": skipped_points, "tol_a": tol_a, "tol_b": tol_b}
    rep = CheckReport(name, float(len(counter)), 1.0, "pass" if not counter else "fail",
                      [float(c) for c in counter[0]["point"]] if counter else None, prov, list(notes), data)
    rep.notes.append(f"{len(counter)} disagreement(s) over {evaluated} point(s)")
    return rep


def evaluate_implication(name, geo: Geometry, points, fn, tol_a, tol_b, needs_qk=False, notes=()) -> CheckReport:
    """``fn`` returns (hypothesis Side, conclusion Side); fails where the hypothesis holds and the conclusion does not."""
    violations, per_point, evaluated = [], [], 0
    for idx, p in enumerate(points):
        p = np.asarray(p, dtype=float)
        if needs_qk and qk_gate(geo, p):
            continue
        hyp, concl = fn(geo, p, idx)
        held = hyp.holds(tol_a)
        evaluated += held
        per_point.append({"point_index": idx, "hypothesis": hyp.residual, "conclusion": concl.residual,
                          "conclusion_terms": concl.terms, "hypothesis_holds": held})
        if held and not concl.holds(tol_b):
            violations.append({"point_index": idx, "point": p, "hypothesis": hyp.residual,
                               "conclusion": concl.residual, "seed": geo.seed, "engine": geo.engine.describe()})
    prov = _provenance(geo, len(points))
    if evaluated == 0:
        rep = skipped(name, 1.0, "hypothesis does not hold at any sampled point", prov)
        rep.data = {"per_point": per_point}
        return rep
    data = {"per_point": per_point, "counterexamples": violations, "points_evaluated": evaluated}
    rep = CheckReport(name, float(len(violations)), 1.0, "pass" if not violations else "fail",
                      [float(c) for c in violations[0]["point"]] if violations else None, prov, list(notes), data)
    rep.notes.append(f"{len(violations)} violation(s) over {evaluated} point(s) where the hypothesis holds")
    return rep


# --------------------------------------------------------------------------
# shared helpers


def _theta(geo, p):
    th = geo.theta(p)
    return lambda b, X: float(th[b - 1] @ X)


def _draw(geo, p, key, rng):
    return geo.section(p, key, rng)


def _sff(geo, p, X, vals, ds, field_key, push_key):
    """(nabla F_*)(X, Y) from a jet holding Y under ``field_key`` and F_*Y under ``push_key``."""
    s = geo.at(p)
    pulled = geo.nabla_pull(p, X, vals[push_key], ds[push_key])
    return pulled - s.Jf @ geo.nabla(p, X, vals[field_key], ds[field_key])


def _image_projector(geo, p, key):
    """g_N-orthogonal projector onto F_* of the distribution ``key`` at p."""
    s = geo.at(p)
    GN = np.asarray(geo.N.metric(geo.Fp(p)), dtype=float)
    n = GN.shape[0]
    basis = _basis(geo, p, key)
    if basis.shape[1] == 0:
        return np.zeros((n, n))
    Q = metric_orthonormal_basis(GN, s.Jf @ basis)
    return Q @ Q.T @ GN


def _basis(geo, p, key):
    sp = geo.split(p)
    if key == "V":
        return sp.vertical
    if key == "H":
        return sp.horizontal
    kind, a = key
    return {"D1": sp.D1, "D2": sp.D2, "JD2": sp.JD2, "mu": sp.mu}[kind][a]


def _split_gate(geo, p):
    sp = geo.split(p)
    if not sp.valid():
        return "no semi-invariant splitting for some J_a at this point"
    return None


def _common_gate(geo, p):
    sp = geo.split(p)
    if not sp.common_valid():
        return "requires h-conformal semi-invariant structure (a D1 common to all J_a)"
    return None


# --------------------------------------------------------------------------
# Structure identities and the derived identities for the covariant derivatives of phi, omega

LEMMA1_IDS = tuple(f"{part}.{eq}[{a}]" for part in (1, 2, 3) for eq in (1, 2) for a in ALPHAS)


def _lemma1_point(geo: Geometry, p, idx, fault=None):
    """Residual vectors of the 18 identities (and six derived ones) at p."""
    rng = geo.rng("lemma1", idx)
    s = geo.at(p)
    th = _theta(geo, p)
    out = {k: 0.0 for k in LEMMA1_IDS}
    derived = {f"phi[{a}]": 0.0 for a in ALPHAS} | {f"omega[{a}]": 0.0 for a in ALPHAS}
    norm = lambda v: geo.norm(p, v)
    PV, PH = s.P["V"], s.P["H"]

    def ops(a):
        return dict(phi=lambda v: s.phi(a, v), omega=lambda v: s.omega(a, v),
                    B=lambda v: s.B(a, v), C=lambda v: s.C(a, v))

    for _ in range(geo.pairs):
        # part 1: X, Y vertical
        X = _draw(geo, p, "V", rng)
        Y = _draw(geo, p, "V", rng)
        if X is not None and Y is not None:
            Xp = geo.value(p, X)

            def build(q, sq, Y=Y):
                y = Y(q, sq)
                d = {"Y": y}
                for a in ALPHAS:
                    d[f"phi{a}"] = sq.phi(a, y)
                    d[f"omega{a}"] = sq.omega(a, y)
                return d

            vals, ds = geo.jet(build, p, Xp)
            nY = geo.nabla(p, Xp, vals["Y"], ds["Y"])
            hatY, TY = PV @ nY, PH @ nY
            y = vals["Y"]
            for a in ALPHAS:
                a1, a2 = cyc(a, 1), cyc(a, 2)
                o, o1, o2 = ops(a), ops(a1), ops(a2)
                nphi = geo.nabla(p, Xp, vals[f"phi{a}"], ds[f"phi{a}"])
                nomega = geo.nabla(p, Xp, vals[f"omega{a}"], ds[f"omega{a}"])
                hat_phi, T_phi = PV @ nphi, PH @ nphi
                T_omega, H_omega = PV @ nomega, PH @ nomega
                BT = o["C"](TY) if fault == "swap-BC" else o["B"](TY)
                CT = o["B"](TY) if fault == "swap-BC" else o["C"](TY)
                r1 = (hat_phi + T_omega) - (o["phi"](hatY) + BT + th(a2, Xp) * o1["phi"](y) - th(a1, Xp) * o2["phi"](y))
                r2 = (T_phi + H_omega) - (o["omega"](hatY) + CT + th(a2, Xp) * o1["omega"](y)
                                          - th(a1, Xp) * o2["omega"](y))
                out[f"1.1[{a}]"] = max(out[f"1.1[{a}]"], norm(r1))
                out[f"1.2[{a}]"] = max(out[f"1.2[{a}]"], norm(r2))
                # (nabla_X phi)Y and (nabla_X omega)Y against their closed forms
                d_phi = (hat_phi - o["phi"](hatY)) - (o["B"](TY) - T_omega + th(a2, Xp) * o1["phi"](y)
                                                      - th(a1, Xp) * o2["phi"](y))
                d_om = (H_omega - o["omega"](hatY)) - (o["C"](TY) - T_phi + th(a2, Xp) * o1["omega"](y)
                                                       - th(a1, Xp) * o2["omega"](y))
                derived[f"phi[{a}]"] = max(derived[f"phi[{a}]"], norm(d_phi))
                derived[f"omega[{a}]"] = max(derived[f"omega[{a}]"], norm(d_om))

        # part 2: Z, W horizontal
        Z = _draw(geo, p, "H", rng)
        W = _draw(geo, p, "H", rng)
        if Z is not None and W is not None:
            Zp = geo.value(p, Z)

            def build(q, sq, W=W):
                w = W(q, sq)
                d = {"W": w}
                for a in ALPHAS:
                    d[f"B{a}"] = sq.B(a, w)
                    d[f"C{a}"] = sq.C(a, w)
                return d

            vals, ds = geo.jet(build, p, Zp)
            nW = geo.nabla(p, Zp, vals["W"], ds["W"])
            AW, HW = PV @ nW, PH @ nW
            w = vals["W"]
            for a in ALPHAS:
                a1, a2 = cyc(a, 1), cyc(a, 2)
                o, o1, o2 = ops(a), ops(a1), ops(a2)
                nB = geo.nabla(p, Zp, vals[f"B{a}"], ds[f"B{a}"])
                nC = geo.nabla(p, Zp, vals[f"C{a}"], ds[f"C{a}"])
                r1 = (PV @ nB + PV @ nC) - (o["phi"](AW) + o["B"](HW) + th(a2, Zp) * o1["B"](w)
                                            - th(a1, Zp) * o2["B"](w))
                r2 = (PH @ nB + PH @ nC) - (o["omega"](AW) + o["C"](HW) + th(a2, Zp) * o1["C"](w)
                                            - th(a1, Zp) * o2["C"](w))
                out[f"2.1[{a}]"] = max(out[f"2.1[{a}]"], norm(r1))
                out[f"2.2[{a}]"] = max(out[f"2.2[{a}]"], norm(r2))

        # part 3: X vertical, Z horizontal
        X = _draw(geo, p, "V", rng)
        Z = _draw(geo, p, "H", rng)
        if X is not None and Z is not None:
            Xp = geo.value(p, X)

            def build(q, sq, Z=Z):
                z = Z(q, sq)
                d = {"Z": z}
                for a in ALPHAS:
                    d[f"B{a}"] = sq.B(a, z)
                    d[f"C{a}"] = sq.C(a, z)
                return d

            vals, ds = geo.jet(build, p, Xp)
            nZ = geo.nabla(p, Xp, vals["Z"], ds["Z"])
            TZ, HZ = PV @ nZ, PH @ nZ
            z = vals["Z"]
            for a in ALPHAS:
                a1, a2 = cyc(a, 1), cyc(a, 2)
                o, o1, o2 = ops(a), ops(a1), ops(a2)
                nB = geo.nabla(p, Xp, vals[f"B{a}"], ds[f"B{a}"])
                nC = geo.nabla(p, Xp, vals[f"C{a}"], ds[f"C{a}"])
                r1 = (PV @ nB + PV @ nC) - (o["phi"](TZ) + o["B"](HZ) + th(a2, Xp) * o1["B"](z)
                                            - th(a1, Xp) * o2["B"](z))
                r2 = (PH @ nB + PH @ nC) - (o["omega"](TZ) + o["C"](HZ) + th(a2, Xp) * o1["C"](z)
                                            - th(a1, Xp) * o2["C"](z))
                out[f"3.1[{a}]"] = max(out[f"3.1[{a}]"], norm(r1))
                out[f"3.2[{a}]"] = max(out[f"3.2[{a}]"], norm(r2))
    return out, derived


def _gated_points(geo, points, require_qk, require_split=True):
    good, skipped_points = [], []
    for idx, p in enumerate(points):
        p = np.asarray(p, dtype=float)
        reason = (qk_gate(geo, p) if require_qk else None) or (_split_gate(geo, p) if require_split else None)
        if reason:
            skipped_points.append({"point_index": idx, "point": p, "reason": reason})
        else:
            good.append((idx, p))
    return good, skipped_points


def verify_lemma1(geo: Geometry, points, tol: float = DEFAULT_TOLERANCES["lemma1"], fault=None,
                  require_qk=True) -> CheckReport:
    """Worst residual of the 18 structure identities (3 parts x 3 alphas x 2 equations).

    ``fault="swap-BC"`` exchanges B and C in the first two part-1 identities,
    a sanity check that the residuals detect a wrong formula.
    """
    good, skipped_points = _gated_points(geo, points, require_qk)
    prov = _provenance(geo, len(points))
    if not good:
        return skipped("lemma1", tol, skipped_points[0]["reason"] if skipped_points else "no points", prov)
    worst = {k: 0.0 for k in LEMMA1_IDS}
    samples = []
    for idx, p in good:
        res, _ = _lemma1_point(geo, p, idx, fault)
        for k, v in res.items():
            worst[k] = max(worst[k], v)
        samples.append((max(res.values()), p))
    notes = [f"fault injected: {fault}"] if fault else []
    return from_samples("lemma1", samples, tol, prov, notes,
                        {"identities": worst, "not_applicable": skipped_points})


def verify_nabla_phi_omega(geo: Geometry, points, tol: float = DEFAULT_TOLERANCES["lemma1"],
                           require_qk=True) -> CheckReport:
    """(nabla_X phi)Y and (nabla_X omega)Y against their closed forms, X, Y vertical.

    ``data["lemma1_part1"]`` holds the part-1 identity residuals from the same
    draws: each derived residual is a rearrangement of one of them.
    """
    good, skipped_points = _gated_points(geo, points, require_qk)
    prov = _provenance(geo, len(points))
    if not good:
        return skipped("nabla-phi-omega", tol, skipped_points[0]["reason"] if skipped_points else "no points", prov)
    worst, part1, samples = {}, {}, []
    for idx, p in good:
        res, der = _lemma1_point(geo, p, idx)
        for k, v in der.items():
            worst[k] = max(worst.get(k, 0.0), v)
        for k in LEMMA1_IDS[:6]:
            part1[k] = max(part1.get(k, 0.0), res[k])
        samples.append((max(der.values()), p))
    return from_samples("nabla-phi-omega", samples, tol, prov, [],
                        {"identities": worst, "lemma1_part1": part1, "not_applicable": skipped_points})


# --------------------------------------------------------------------------
# integrability


def check_D2_integrability(geo: Geometry, points, tol: float = DEFAULT_TOLERANCES["d2-closure"]) -> CheckReport:
    """|(I - P_D2)[V, W]| for sections V, W of D2[a], every a."""
    samples, per_alpha, vac = [], {a: 0.0 for a in ALPHAS}, True
    for idx, p in enumerate(points):
        p = np.asarray(p, dtype=float)
        rng = geo.rng("d2-integrability", idx)
        s = geo.at(p)
        worst = 0.0
        for a in ALPHAS:
            key = ("D2", a)
            for _ in range(geo.pairs):
                V, W = _draw(geo, p, key, rng), _draw(geo, p, key, rng)
                if V is None or W is None:
                    continue
                vac = False
                br = _bracket(geo, p, V, W)
                r = geo.norm(p, br - s.P[key] @ br)
                worst = max(worst, r)
                per_alpha[a] = max(per_alpha[a], r)
        samples.append((worst, p))
    return from_samples("d2-integrability", samples, tol, _provenance(geo, len(points)),
                        data={"per_alpha": per_alpha}, vacuous=vac)


def _bracket(geo, p, X, Y):
    """[X, Y] at p for sections X, Y (torsion-free: nabla_X Y - nabla_Y X)."""
    Xp, Yp = geo.value(p, X), geo.value(p, Y)
    v1, d1 = geo.jet(lambda q, s: [Y(q, s)], p, Xp)
    v2, d2 = geo.jet(lambda q, s: [X(q, s)], p, Yp)
    return geo.nabla(p, Xp, v1[0], d1[0]) - geo.nabla(p, Yp, v2[0], d2[0])


def _d1_integrability(geo, p, idx):
    rng = geo.rng("d1-integrability", idx)
    s = geo.at(p)
    sides = {"a": Side()} | {f"b[{a}]": Side() for a in ALPHAS}
    for a in ALPHAS:
        key = ("D1", a)
        proj = _image_projector(geo, p, ("mu", a))
        for _ in range(geo.pairs):
            Y, Z = _draw(geo, p, key, rng), _draw(geo, p, key, rng)
            if Y is None or Z is None:
                continue
            br = _bracket(geo, p, Y, Z)
            sides["a"].add(geo.norm(p, br - s.P[key] @ br), f"D1[{a}]")
            Yp, Zp = geo.value(p, Y), geo.value(p, Z)
            build = lambda W: (lambda q, sq: {"JW": sq.J[a] @ W(q, sq), "FJW": sq.Jf @ (sq.J[a] @ W(q, sq))})
            v1, d1 = geo.jet(build(Y), p, Zp)
            v2, d2 = geo.jet(build(Z), p, Yp)
            r = _sff(geo, p, Zp, v1, d1, "JW", "FJW") - _sff(geo, p, Yp, v2, d2, "JW", "FJW")
            sides[f"b[{a}]"].add(geo.normN(p, r - proj @ r))
    return sides


def check_D1_integrability(geo: Geometry, points, tol_a=DEFAULT_TOLERANCES["side-a"],
                           tol_b=DEFAULT_TOLERANCES["side-b"]) -> CheckReport:
    """D1[a] closed under brackets vs. (nabla F_*)(Z, J_a Y) - (nabla F_*)(Y, J_a Z) in F_* mu[a]."""
    return evaluate_equivalence("d1-integrability", geo, points, _d1_integrability, tol_a, tol_b,
                                applicable=lambda g, p: _split_gate(g, p))


def _horizontal_jet(geo, p, S, X):
    """Jet along X of a horizontal section S with its B, C, omega B and F_* C parts."""

    def build(q, sq):
        v = S(q, sq)
        d = {"S": v}
        for a in ALPHAS:
            Bv, Cv = sq.B(a, v), sq.C(a, v)
            d[f"B{a}"], d[f"C{a}"], d[f"wB{a}"], d[f"FC{a}"] = Bv, Cv, sq.omega(a, Bv), sq.Jf @ Cv
        return d

    return geo.jet(build, p, X)


def _th3(geo, p, idx, homothety=False):
    rng = geo.rng("horizontal-integrability", idx)
    s = geo.at(p)
    PV, PH = s.P["V"], s.P["H"]
    th = _theta(geo, p)
    lam2 = geo.lam2(p)
    hgl = PH @ geo.grad_log_lambda(p)
    g = lambda u, v: geo.g(p, u, v)
    sides = {"a": Side()} | {f"b[{a}]": Side() for a in ALPHAS}
    for _ in range(geo.pairs):
        X, Y = _draw(geo, p, "H", rng), _draw(geo, p, "H", rng)
        Vs = {a: _draw(geo, p, ("D2", a), rng) for a in ALPHAS}
        if X is None or Y is None:
            continue
        Xp, Yp = geo.value(p, X), geo.value(p, Y)
        vY, dY = _horizontal_jet(geo, p, Y, Xp)  # derivatives along X of Y-fields
        vX, dX = _horizontal_jet(geo, p, X, Yp)  # derivatives along Y of X-fields
        br = geo.nabla(p, Xp, vY["S"], dY["S"]) - geo.nabla(p, Yp, vX["S"], dX["S"])
        sides["a"].add(geo.norm(p, PV @ br))
        for a in ALPHAS:
            a1, a2 = cyc(a, 1), cyc(a, 2)
            side = sides[f"b[{a}]"]
            nab = lambda v, d, key, D: geo.nabla(p, D, v[key], d[key])
            if geo.dim(p, ("D1", a)):
                A_Y_wBX = PV @ nab(vX, dX, f"wB{a}", Yp)
                A_X_wBY = PV @ nab(vY, dY, f"wB{a}", Xp)
                A_Y_CX = PV @ nab(vX, dX, f"C{a}", Yp)
                A_X_CY = PV @ nab(vY, dY, f"C{a}", Xp)
                c1 = s.P[("D1", a)] @ (A_Y_wBX - A_X_wBY + s.phi(a, A_Y_CX - A_X_CY))
                side.add(geo.norm(p, c1), "clause-1")
            V = Vs[a]
            if V is None:
                continue
            JV = s.J[a] @ geo.value(p, V)
            FJV = s.Jf @ JV
            lhs = (geo.gN(p, geo.nabla_pull(p, Yp, vX[f"FC{a}"], dX[f"FC{a}"]), FJV)
                   - geo.gN(p, geo.nabla_pull(p, Xp, vY[f"FC{a}"], dY[f"FC{a}"]), FJV)) / lam2
            A_X_BY = PH @ nab(vY, dY, f"B{a}", Xp)
            A_Y_BX = PH @ nab(vX, dX, f"B{a}", Yp)
            CX, CY = vX[f"C{a}"], vY[f"C{a}"]
            rhs = g(A_X_BY - A_Y_BX, JV)
            if not homothety:
                rhs += (-g(hgl, CY) * g(Xp, JV) + g(hgl, CX) * g(Yp, JV) - 2 * g(CX, Yp) * g(hgl, JV))
            rhs += (th(a2, Yp) * g(s.C(a1, Xp), JV)
                    - th(a1, Yp) * g(s.C(a2, Xp), JV)
                    - th(a2, Xp) * g(s.C(a1, Yp), JV) + th(a1, Xp) * g(s.C(a2, Yp), JV))
            side.add(abs(lhs - rhs), "clause-2")
    return sides


def _anti_holomorphic_gate(geo, p):
    sp = geo.split(p)
    h = sp.horizontal.shape[1]
    if sp.valid() and sp.JD2[1].shape[1] == h and sp.JD2[3].shape[1] == h and sp.D2[2].shape[1] == 0:
        return None
    return "splitting is not anti-holomorphic"


def _anti_holomorphic(geo, p, idx):
    rng = geo.rng("anti-holomorphic", idx)
    s = geo.at(p)
    PV = s.P["V"]
    sides = {"a": Side(), "b": Side()}
    for _ in range(geo.pairs):
        X, Y = _draw(geo, p, "H", rng), _draw(geo, p, "H", rng)
        V1, V2 = _draw(geo, p, ("D2", 1), rng), _draw(geo, p, ("D2", 1), rng)
        if X is None or Y is None or V1 is None or V2 is None:
            continue
        sides["a"].add(geo.norm(p, PV @ _bracket(geo, p, X, Y)))
        J = lambda V: (lambda q, sq: sq.J[1] @ V(q, sq))
        JV1, JV2 = s.J[1] @ geo.value(p, V1), s.J[1] @ geo.value(p, V2)
        v1, d1 = geo.jet(lambda q, sq: [J(V2)(q, sq)], p, JV1)
        v2, d2 = geo.jet(lambda q, sq: [J(V1)(q, sq)], p, JV2)
        r = PV @ geo.nabla(p, JV1, v1[0], d1[0]) - PV @ geo.nabla(p, JV2, v2[0], d2[0])
        sides["b"].add(geo.norm(p, r))
    return sides


def check_horizontal_integrability(geo: Geometry, points, tol_a=DEFAULT_TOLERANCES["side-a"],
                                   tol_b=DEFAULT_TOLERANCES["side-b"]) -> list:
    """Horizontal distribution integrable vs. its D1/D2 component conditions, plus the anti-holomorphic form."""
    main = evaluate_equivalence("horizontal-integrability", geo, points, _th3, tol_a, tol_b,
                                applicable=lambda g, p: _split_gate(g, p))
    anti = evaluate_equivalence("horizontal-integrability:anti-holomorphic", geo, points, _anti_holomorphic,
                                tol_a, tol_b, applicable=_anti_holomorphic_gate)
    return [main, anti]


# --------------------------------------------------------------------------
# totally geodesic foliations


def _th4(geo, p, idx, lemma=False):
    """Horizontal distribution totally geodesic vs. its component conditions.

    With ``lemma=True`` the second clause drops the dilation terms (the form
    that characterises h-homothety when D2 is parallel along the horizontal).
    """
    rng = geo.rng("horizontal-geodesic", idx)
    s = geo.at(p)
    PV, PH = s.P["V"], s.P["H"]
    th = _theta(geo, p)
    lam2 = geo.lam2(p)
    gl = geo.grad_log_lambda(p)
    g = lambda u, v: geo.g(p, u, v)
    sides = {"a": Side()} | {f"b[{a}]": Side() for a in ALPHAS}
    for _ in range(geo.pairs):
        X, Y = _draw(geo, p, "H", rng), _draw(geo, p, "H", rng)
        Vs = {a: _draw(geo, p, ("D2", a), rng) for a in ALPHAS}
        if X is None or Y is None:
            continue
        Xp, Yp = geo.value(p, X), geo.value(p, Y)

        def build(q, sq):
            d = {"Y": Y(q, sq)}
            for a in ALPHAS:
                d[f"B{a}"] = sq.B(a, d["Y"])
                d[f"C{a}"] = sq.C(a, d["Y"])
                if Vs[a] is not None:
                    d[f"FJV{a}"] = sq.Jf @ (sq.J[a] @ Vs[a](q, sq))
            return d

        vals, ds = geo.jet(build, p, Xp)
        sides["a"].add(geo.norm(p, PV @ geo.nabla(p, Xp, vals["Y"], ds["Y"])))
        for a in ALPHAS:
            a1, a2 = cyc(a, 1), cyc(a, 2)
            side = sides[f"b[{a}]"]
            nB = geo.nabla(p, Xp, vals[f"B{a}"], ds[f"B{a}"])
            nC = geo.nabla(p, Xp, vals[f"C{a}"], ds[f"C{a}"])
            if geo.dim(p, ("D1", a)):
                side.add(geo.norm(p, s.P[("D1", a)] @ (PV @ nC + PV @ nB)), "clause-1")
            if Vs[a] is None:
                continue
            JV = s.J[a] @ geo.value(p, Vs[a])
            CY = vals[f"C{a}"]
            lhs = geo.gN(p, s.Jf @ CY, geo.nabla_pull(p, Xp, vals[f"FJV{a}"], ds[f"FJV{a}"])) / lam2
            rhs = g(PH @ nB, JV) - th(a2, Xp) * g(s.C(a1, Yp), JV) + th(a1, Xp) * g(s.C(a2, Yp), JV)
            if not lemma:
                rhs += -g(CY, gl) * g(Xp, JV) + g(Xp, CY) * g(gl, JV)
            side.add(abs(lhs - rhs), "clause-2")
    return sides


def _th7(geo, p, idx, lemma=False):
    """Fibres totally geodesic vs. the D1/mu component conditions."""
    rng = geo.rng("vertical-geodesic", idx)
    s = geo.at(p)
    PV, PH = s.P["V"], s.P["H"]
    lam2 = geo.lam2(p)
    gl = geo.grad_log_lambda(p)
    g = lambda u, v: geo.g(p, u, v)
    sides = {"a": Side()} | {f"b[{a}]": Side() for a in ALPHAS}
    for _ in range(geo.pairs):
        U, V = _draw(geo, p, "V", rng), _draw(geo, p, "V", rng)
        Xs = {a: _draw(geo, p, ("mu", a), rng) for a in ALPHAS}
        if U is None or V is None:
            continue
        Up, Vp = geo.value(p, U), geo.value(p, V)

        def build(q, sq):
            d = {"U": U(q, sq)}
            for a in ALPHAS:
                d[f"phi{a}"] = sq.phi(a, d["U"])
                d[f"omega{a}"] = sq.omega(a, d["U"])
            return d

        vals, ds = geo.jet(build, p, Vp)  # along V
        sides["a"].add(geo.norm(p, PH @ geo.nabla(p, Vp, vals["U"], ds["U"])))
        for a in ALPHAS:
            side = sides[f"b[{a}]"]
            n_om = geo.nabla(p, Vp, vals[f"omega{a}"], ds[f"omega{a}"])
            n_phi = geo.nabla(p, Vp, vals[f"phi{a}"], ds[f"phi{a}"])
            if geo.dim(p, ("D2", a)):
                side.add(geo.norm(p, s.P[("D2", a)] @ (PV @ n_om + PV @ n_phi)), "clause-1")
            X = Xs[a]
            if X is None:
                continue
            Xv = geo.value(p, X)
            wV, wU = s.omega(a, Vp), s.omega(a, Up)
            phiV, phiU = s.phi(a, Vp), s.phi(a, Up)
            # C T_U phi V: derivative of the field phi V along U
            v1, d1 = geo.jet(lambda q, sq: [sq.phi(a, V(q, sq))], p, Up)
            T_U_phiV = PH @ geo.nabla(p, Up, v1[0], d1[0])
            # A_{omega V} phi U and the pull-back derivative of F_* X along omega V
            v2, d2 = geo.jet(lambda q, sq: {"phiU": sq.phi(a, U(q, sq)), "FX": sq.Jf @ X(q, sq)}, p, wV)
            A_wV_phiU = PH @ geo.nabla(p, wV, v2["phiU"], d2["phiU"])
            lhs = geo.gN(p, geo.nabla_pull(p, wV, v2["FX"], d2["FX"]), s.Jf @ wU) / lam2
            rhs = g(s.C(a, T_U_phiV) + A_wV_phiU, Xv)
            if not lemma:
                rhs += g(wV, wU) * g(gl, Xv)
            side.add(abs(lhs - rhs), "clause-2")
    return sides


def _th8(geo, p, idx):
    """Common D1 totally geodesic vs. its second-fundamental-form conditions."""
    rng = geo.rng("d1-geodesic", idx)
    s = geo.at(p)
    th = _theta(geo, p)
    lam2 = geo.lam2(p)
    g = lambda u, v: geo.g(p, u, v)
    sides = {"a": Side()} | {f"b[{a}]": Side() for a in ALPHAS}
    key = ("D1", 1)
    for _ in range(geo.pairs):
        U, V = _draw(geo, p, key, rng), _draw(geo, p, key, rng)
        Ws = {a: _draw(geo, p, ("D2", a), rng) for a in ALPHAS}
        X = _draw(geo, p, "H", rng)
        if U is None or V is None:
            continue
        Up, Vp, Xp = geo.value(p, U), geo.value(p, V), geo.value(p, X)
        v0, d0 = geo.jet(lambda q, sq: [U(q, sq)], p, Vp)
        nU = geo.nabla(p, Vp, v0[0], d0[0])
        sides["a"].add(geo.norm(p, nU - s.P[key] @ nU))
        for a in ALPHAS:
            a1, a2 = cyc(a, 1), cyc(a, 2)
            W = Ws[a]
            if W is None:
                continue
            side = sides[f"b[{a}]"]
            v1, d1 = geo.jet(lambda q, sq: {"JW": sq.J[a] @ W(q, sq), "FJW": sq.Jf @ (sq.J[a] @ W(q, sq))}, p, Vp)
            sff = _sff(geo, p, Vp, v1, d1, "JW", "FJW")
            proj = _image_projector(geo, p, ("mu", a))
            side.add(geo.normN(p, sff - proj @ sff), "clause-1")
            # printed second clause, taken literally
            JX = s.J[a] @ Xp
            v2, d2 = geo.jet(lambda q, sq: [sq.omega(a, sq.B(a, X(q, sq)))], p, Vp)
            T_V_wBX = s.P["V"] @ geo.nabla(p, Vp, v2[0], d2[0])
            lhs = geo.gN(p, sff, s.Jf @ s.C(a, Xp))
            rhs = lam2 * (g(Up, T_V_wBX)
                          - (th(a2, Vp) * g(s.phi(a1, Up), JX) - th(a2, Vp) * g(s.omega(a1, Up), JX))
                          + (th(a1, Vp) * g(s.phi(a2, Up), JX) + th(a1, Vp) * g(s.omega(a2, Up), JX)))
            side.add(abs(lhs - rhs) / lam2, "clause-2")
    return sides


def _th9(geo, p, idx):
    """Common D2 totally geodesic vs. its conditions."""
    rng = geo.rng("d2-geodesic", idx)
    s = geo.at(p)
    PH = s.P["H"]
    th = _theta(geo, p)
    lam2 = geo.lam2(p)
    hgl = PH @ geo.grad_log_lambda(p)
    g = lambda u, v: geo.g(p, u, v)
    sides = {"a": Side()} | {f"b[{a}]": Side() for a in ALPHAS}
    key = ("D2", 1)
    for _ in range(geo.pairs):
        U, V = _draw(geo, p, key, rng), _draw(geo, p, key, rng)
        Ws = {a: _draw(geo, p, ("D1", a), rng) for a in ALPHAS}
        X = _draw(geo, p, "H", rng)
        if U is None or V is None:
            continue
        Up, Vp, Xp = geo.value(p, U), geo.value(p, V), geo.value(p, X)
        v0, d0 = geo.jet(lambda q, sq: [U(q, sq)], p, Vp)
        nU = geo.nabla(p, Vp, v0[0], d0[0])
        sides["a"].add(geo.norm(p, nU - s.P[key] @ nU))
        for a in ALPHAS:
            a1, a2 = cyc(a, 1), cyc(a, 2)
            side = sides[f"b[{a}]"]
            W = Ws[a]
            if W is not None:
                v1, d1 = geo.jet(lambda q, sq: {"JW": sq.J[a] @ W(q, sq),
                                                "FJW": sq.Jf @ (sq.J[a] @ W(q, sq))}, p, Vp)
                sff = _sff(geo, p, Vp, v1, d1, "JW", "FJW")
                proj = _image_projector(geo, p, ("mu", a))
                side.add(geo.normN(p, sff - proj @ sff), "clause-1")
            JV = s.J[a] @ Vp
            v2, d2 = geo.jet(lambda q, sq: [sq.Jf @ (sq.J[a] @ U(q, sq))], p, JV)
            lhs = geo.gN(p, geo.nabla_pull(p, JV, v2[0], d2[0]), s.Jf @ (s.J[a] @ s.C(a, Xp))) / lam2
            v3, d3 = geo.jet(lambda q, sq: [sq.B(a, X(q, sq))], p, Up)
            T_U_BX = PH @ geo.nabla(p, Up, v3[0], d3[0])
            BX, CX = s.B(a, Xp), s.C(a, Xp)
            rhs = (g(Vp, s.B(a, T_U_BX)) + g(Up, Vp) * g(hgl, s.J[a] @ CX)
                   - th(a2, Up) * (g(s.B(a1, Vp), BX) + g(s.C(a1, Vp), CX))
                   + th(a1, Up) * (g(s.B(a2, Vp), BX) + g(s.C(a2, Vp), CX)))
            side.add(abs(lhs - rhs), "clause-2")
    return sides


def check_foliation_conditions(geo: Geometry, points, tol_a=DEFAULT_TOLERANCES["side-a"],
                               tol_b=DEFAULT_TOLERANCES["side-b"]) -> list:
    """Geodesy of the horizontal, vertical, D1 and D2 distributions vs. their conditions.

    Also emits the product verdicts: locally a product when both the
    horizontal and vertical foliations are totally geodesic, and the fibres
    locally a product of D1 and D2 leaves when both of those are.
    """
    split_gate = lambda g, p: _split_gate(g, p)
    reps = [
        evaluate_equivalence("horizontal-geodesic", geo, points, _th4, tol_a, tol_b, applicable=split_gate),
        evaluate_equivalence("vertical-geodesic", geo, points, _th7, tol_a, tol_b, applicable=split_gate),
        evaluate_equivalence("d1-geodesic", geo, points, _th8, tol_a, tol_b, applicable=_common_gate),
        evaluate_equivalence("d2-geodesic", geo, points, _th9, tol_a, tol_b, applicable=_common_gate),
    ]
    reps.append(_product_verdict("locally-product", reps[0], reps[1], tol_a,
                                 "horizontal and vertical foliations totally geodesic: locally a Riemannian product"))
    reps.append(_product_verdict("fibre-product", reps[2], reps[3], tol_a,
                                 "D1 and D2 foliations totally geodesic: fibres locally a product of their leaves"))
    return reps


def _product_verdict(name, r1, r2, tol, message):
    def holds(r):
        if r.verdict == "skipped":
            return None
        return r.data["sides"]["a"]["holds"] == r.data["points_evaluated"]

    h1, h2 = holds(r1), holds(r2)
    if h1 is None or h2 is None:
        return skipped(name, tol, "a component foliation check was skipped", r1.provenance)
    data = {r1.check_name: h1, r2.check_name: h2, "product": h1 and h2}
    notes = [message] if h1 and h2 else ["not a product: a component foliation is not totally geodesic"]
    # informational: the verdict is a conclusion, not a requirement
    return CheckReport(name, 0.0, tol, "pass", None, dict(r1.provenance), notes, data)


# --------------------------------------------------------------------------
# homothety criteria


def _homothety_theorem(geo, p, idx):
    rng = geo.rng("homothety", idx)
    s = geo.at(p)
    sides = {"a": Side()} | {f"b[{a}]": Side() for a in ALPHAS}
    sides["a"].add(geo.norm(p, s.P["H"] @ geo.grad_lambda(p)))
    for a in ALPHAS:
        for _ in range(geo.pairs):
            V, X = _draw(geo, p, ("D2", a), rng), _draw(geo, p, ("mu", a), rng)
            if V is None or X is None:
                continue
            Xp = geo.value(p, X)
            RV = s.J[a] @ geo.value(p, V)
            vals, ds = geo.jet(lambda q, sq: {"X": X(q, sq), "FX": sq.Jf @ X(q, sq)}, p, RV)
            sides[f"b[{a}]"].add(geo.normN(p, _sff(geo, p, RV, vals, ds, "X", "FX")))
    return sides


def _h_integrable_gate(tol):
    def gate(geo, p):
        reason = _split_gate(geo, p)
        if reason:
            return reason
        res = _th3(geo, p, 0)["a"].residual
        return None if res < tol else f"horizontal distribution not integrable here (residual {res:.3g})"
    return gate


def _homothety_after_integrable(geo, p, idx):
    sides = _th3(geo, p, idx, homothety=True)
    sides.pop("a")
    s = geo.at(p)
    a = Side()
    a.add(geo.norm(p, s.P["H"] @ geo.grad_lambda(p)))
    return {"a": a} | {k: Side(v.residual, v.vacuous, {t: r for t, r in v.terms.items() if t == "clause-2"})
                       if "clause-2" in v.terms else Side() for k, v in sides.items()}


def _d2_parallel_gate(tol):
    def gate(geo, p):
        reason = _split_gate(geo, p)
        if reason:
            return reason
        rng = geo.rng("d2-parallel", 0)
        s = geo.at(p)
        worst = 0.0
        for a in ALPHAS:
            for _ in range(geo.pairs):
                X, V = _draw(geo, p, "H", rng), _draw(geo, p, ("D2", a), rng)
                if X is None or V is None:
                    continue
                Xp = geo.value(p, X)
                v, d = geo.jet(lambda q, sq: [V(q, sq)], p, Xp)
                n = geo.nabla(p, Xp, v[0], d[0])
                worst = max(worst, geo.norm(p, n - s.P[("D2", a)] @ n))
        return None if worst < tol else f"D2 not parallel along the horizontal distribution (residual {worst:.3g})"
    return gate


def _homothety_d2_parallel(geo, p, idx):
    sides = _th4(geo, p, idx, lemma=True)
    s = geo.at(p)
    a = Side()
    a.add(geo.norm(p, s.P["H"] @ geo.grad_lambda(p)))
    out = {"a": a}
    for k, v in sides.items():
        if k != "a":
            out[k] = Side(v.terms["clause-2"], False, {"clause-2": v.terms["clause-2"]}) if "clause-2" in v.terms \
                else Side()
    return out


def _mu_parallel_gate(tol):
    def gate(geo, p):
        reason = _split_gate(geo, p)
        if reason:
            return reason
        rng = geo.rng("mu-parallel", 0)
        s = geo.at(p)
        worst = 0.0
        for a in ALPHAS:
            for _ in range(geo.pairs):
                U, X = _draw(geo, p, "V", rng), _draw(geo, p, ("mu", a), rng)
                if U is None or X is None:
                    continue
                Up = geo.value(p, U)
                v, d = geo.jet(lambda q, sq: [X(q, sq)], p, Up)
                n = geo.nabla(p, Up, v[0], d[0])
                worst = max(worst, geo.norm(p, n - s.P[("mu", a)] @ n))
        return None if worst < tol else f"mu not parallel along the fibres (residual {worst:.3g})"
    return gate


def _homothety_mu_parallel(geo, p, idx):
    sides = _th7(geo, p, idx, lemma=True)
    s = geo.at(p)
    a = Side()
    gl = geo.grad_lambda(p)
    for al in ALPHAS:
        if geo.dim(p, ("mu", al)):
            a.add(geo.norm(p, s.P[("mu", al)] @ gl))
    out = {"a": a}
    for k, v in sides.items():
        if k != "a":
            out[k] = Side(v.terms["clause-2"], False, {"clause-2": v.terms["clause-2"]}) if "clause-2" in v.terms \
                else Side()
    return out


def check_homothety_equivalences(geo: Geometry, points, tol_a=DEFAULT_TOLERANCES["side-a"],
                                 tol_b=DEFAULT_TOLERANCES["side-b"]) -> list:
    """h-homothety against the (J_a D2, mu)-geodesy condition and its conditional forms."""
    split_gate = lambda g, p: _split_gate(g, p)
    return [
        evaluate_equivalence("homothety:jd2-mu-geodesic", geo, points, _homothety_theorem, tol_a, tol_b,
                             applicable=split_gate),
        evaluate_equivalence("homothety:integrable-horizontal", geo, points, _homothety_after_integrable,
                             tol_a, tol_b, applicable=_h_integrable_gate(tol_a)),
        evaluate_equivalence("homothety:d2-parallel", geo, points, _homothety_d2_parallel, tol_a, tol_b,
                             applicable=_d2_parallel_gate(tol_a)),
        evaluate_equivalence("homothety:mu-parallel", geo, points, _homothety_mu_parallel, tol_a, tol_b,
                             applicable=_mu_parallel_gate(tol_a)),
    ]


# --------------------------------------------------------------------------
# totally geodesic maps, mean curvature and tension


def _map_geodesic(geo, p, idx):
    """Second fundamental form of F on all pairs vs. the vertical-pair conditions per alpha."""
    rng = geo.rng("map-geodesic", idx)
    s = geo.at(p)
    PV, PH = s.P["V"], s.P["H"]
    th = _theta(geo, p)
    sides = {"a": Side()} | {f"b[{a}]": Side() for a in ALPHAS}
    for _ in range(geo.pairs):
        for k1, k2 in (("V", "V"), ("V", "H"), ("H", "V"), ("H", "H")):
            X, Y = _draw(geo, p, k1, rng), _draw(geo, p, k2, rng)
            if X is None or Y is None:
                continue
            Xp = geo.value(p, X)
            v, d = geo.jet(lambda q, sq: {"Y": Y(q, sq), "FY": sq.Jf @ Y(q, sq)}, p, Xp)
            sides["a"].add(geo.normN(p, _sff(geo, p, Xp, v, d, "Y", "FY")), f"{k1}{k2}")
        for a in ALPHAS:
            a1, a2 = cyc(a, 1), cyc(a, 2)
            side = sides[f"b[{a}]"]
            U = _draw(geo, p, "V", rng)
            V = _draw(geo, p, ("D1", a), rng)
            W = _draw(geo, p, ("D2", a), rng)
            if U is None:
                continue
            Up = geo.value(p, U)
            if V is not None:
                v, d = geo.jet(lambda q, sq: [sq.J[a] @ V(q, sq)], p, Up)
                n = geo.nabla(p, Up, v[0], d[0])
                Vp = geo.value(p, V)
                r = (s.C(a, PH @ n) + s.omega(a, PV @ n)
                     - th(a2, Up) * (s.J[a2] @ Vp) - th(a1, Up) * (s.J[a1] @ Vp))
                side.add(geo.normN(p, s.Jf @ r), "i")
            if W is not None:
                v, d = geo.jet(lambda q, sq: [sq.J[a] @ W(q, sq)], p, Up)
                n = geo.nabla(p, Up, v[0], d[0])
                Wp = geo.value(p, W)
                r = (s.C(a, PH @ n) + s.omega(a, PV @ n)
                     - th(a2, Up) * (s.J[a2] @ Wp) - th(a1, Up) * (s.J[a1] @ Wp))
                side.add(geo.normN(p, s.Jf @ r), "ii")
    return sides


def mean_curvature_at(geo: Geometry, p):
    return np.asarray(mean_curvature(geo.F, p, geo.engine), dtype=float)


def _umbilic(geo, p, idx):
    rng = geo.rng("umbilic", idx)
    s = geo.at(p)
    H = mean_curvature_at(geo, p)
    side = Side()
    for _ in range(geo.pairs):
        U, V = _draw(geo, p, "V", rng), _draw(geo, p, "V", rng)
        if U is None or V is None:
            continue
        Up, Vp = geo.value(p, U), geo.value(p, V)
        v, d = geo.jet(lambda q, sq: [V(q, sq)], p, Up)
        T = s.P["H"] @ geo.nabla(p, Up, v[0], d[0])
        side.add(geo.norm(p, T - geo.g(p, Up, Vp) * H))
    return side, H


def _mean_curvature_in_jd2(geo, p, idx):
    hyp, H = _umbilic(geo, p, idx)
    s = geo.at(p)
    concl = Side()
    for a in ALPHAS:
        concl.add(geo.norm(p, H - s.P[("JD2", a)] @ H), f"alpha={a}")
    return hyp, concl


def _umbilic_geodesic(geo, p, idx):
    hyp, H = _umbilic(geo, p, idx)
    concl = Side()
    concl.add(geo.norm(p, H))
    return hyp, concl


def tension_two_route(geo: Geometry, p):
    """(direct trace of the second fundamental form, -k F_*H + (2 - n) F_* grad ln lambda)."""
    return tension_field(geo.F, p, geo.engine), baird_tension(geo.F, p, geo.engine)


def check_tension(geo: Geometry, points, tol=DEFAULT_TOLERANCES["tension"]) -> CheckReport:
    samples, per_point = [], []
    for p in points:
        p = np.asarray(p, dtype=float)
        direct, formula = tension_two_route(geo, p)
        r = geo.normN(p, direct - formula)
        samples.append((r, p))
        per_point.append({"direct": direct, "formula": formula})
    return from_samples("tension-two-route", samples, tol, _provenance(geo, len(points)),
                        data={"per_point": per_point})


def check_fibre_geometry(geo: Geometry, points, tol=DEFAULT_TOLERANCES["fibre"]) -> list:
    """Mean curvature, umbilicity and geodesy of the fibres (each a separate report)."""
    h, umb, geod = [], [], []
    for idx, p in enumerate(points):
        p = np.asarray(p, dtype=float)
        side, H = _umbilic(geo, p, idx)
        h.append((geo.norm(p, H), p))
        umb.append((side.residual, p))
        hyp, concl = _umbilic_geodesic(geo, p, idx)
        rng = geo.rng("geodesy", idx)
        worst = 0.0
        s = geo.at(p)
        for _ in range(geo.pairs):
            U, V = _draw(geo, p, "V", rng), _draw(geo, p, "V", rng)
            if U is None or V is None:
                continue
            Up = geo.value(p, U)
            v, d = geo.jet(lambda q, sq: [V(q, sq)], p, Up)
            worst = max(worst, geo.norm(p, s.P["H"] @ geo.nabla(p, Up, v[0], d[0])))
        geod.append((worst, p))
    prov = _provenance(geo, len(points))
    return [from_samples("fibre-mean-curvature", h, tol, prov),
            from_samples("fibre-umbilicity", umb, tol, prov),
            from_samples("fibre-geodesy", geod, tol, prov)]


def _harmonic_gate(tol):
    def gate(geo, p):
        direct, _ = tension_two_route(geo, p)
        r = geo.normN(p, direct)
        return None if r < tol else f"map not harmonic here (|tension| {r:.3g})"
    return gate


def _minimal_vs_homothetic(geo, p, idx):
    s = geo.at(p)
    a, b = Side(), Side()
    a.add(geo.norm(p, mean_curvature_at(geo, p)))
    b.add(geo.norm(p, s.P["H"] @ geo.grad_lambda(p)))
    return {"a": a, "b": b}


def _harmonic_vs_minimal(geo, p, idx):
    direct, _ = tension_two_route(geo, p)
    a, b = Side(), Side()
    a.add(geo.normN(p, direct))
    b.add(geo.norm(p, mean_curvature_at(geo, p)))
    return {"a": a, "b": b}


def check_totally_geodesic_criterion(geo: Geometry, points, tol_a=DEFAULT_TOLERANCES["side-a"],
                                     tol_b=DEFAULT_TOLERANCES["side-b"]) -> list:
    """Totally geodesic map vs. its vertical conditions, mean curvature claims and harmonicity corollaries."""
    split_gate = lambda g, p: _split_gate(g, p)
    k = geo.split(np.asarray(points[0], dtype=float)).vertical.shape[1] if len(points) else 0
    reps = [
        evaluate_equivalence("map-geodesic", geo, points, _map_geodesic, tol_a, tol_b, applicable=split_gate),
        evaluate_implication("umbilic-mean-curvature-in-jd2", geo, points, _mean_curvature_in_jd2, tol_a, tol_b),
        evaluate_implication("umbilic-fibres-geodesic", geo, points, _umbilic_geodesic, tol_a, tol_b),
    ]
    if k > 0 and geo.N.dim > 2:
        reps.append(evaluate_equivalence("harmonic:minimal-iff-homothetic", geo, points, _minimal_vs_homothetic,
                                         tol_a, tol_b, applicable=_harmonic_gate(tol_a), needs_qk=False))
    elif k > 0 and geo.N.dim == 2:
        reps.append(evaluate_equivalence("harmonic:iff-minimal", geo, points, _harmonic_vs_minimal,
                                         tol_a, tol_b, needs_qk=False))
    return reps

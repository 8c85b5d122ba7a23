"""Command-line runner: ``qksub <suite> [options]``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import theorems as T
from .engine import MODES, DiffEngine
from .examples import lookup, registry
from .manifold import DomainError, NumericError
from .quaternionic import (
    check_golden_table,
    check_hermitian_metric,
    check_hyperkahler,
    check_quaternionic_algebra,
    check_quaternionic_kahler,
)
from .report import CheckReport, from_samples
from .sampling import sample_points
from .semi_invariant import Geometry, classify, same_subspace
from .submersion import (
    analyze,
    check_h_homothetic,
    check_map_identities,
    check_oneill_skew,
    check_totally_geodesic_map,
)

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

SCHEMA_VERSION = 1
SUITES = ("structure", "submersion", "lemma1", "integrability", "foliations", "homothety", "geodesic",
          "classify", "golden-table")
DEFAULT_TOLERANCES = {
    "algebra": 1e-9,
    "hermitian": 1e-9,
    "qk": 1e-6,
    "hyperkahler": 1e-9,
    "conformality": 1e-9,
    "dilation": 1e-6,
    "map-identities": 1e-5,
    "oneill": 1e-6,
    "golden": 1e-6,
    "subspace": 1e-8,
    **T.DEFAULT_TOLERANCES,
}
CONFIG_KEYS = ("example", "metric", "map", "basis", "points", "seed", "pairs", "tolerances", "fd_step", "engine",
               "checks", "output")

NUMERIC_ERRORS = (NumericError, DomainError, FloatingPointError, np.linalg.LinAlgError)
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    example: str = "r4-qk"
    metric: str | None = None
    map: str | None = None
    basis: str | None = None
    points: int = 25
    seed: int = 42
    pairs: int = 2
    tolerances: dict = field(default_factory=dict)
    fd_step: float = 1e-5
    engine: str = "dual"
    checks: list = field(default_factory=lambda: ["all"])
    output: str = "text"

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def validate(self):
        if self.example not in {e.key for e in registry()}:
            raise ConfigError(f"unknown example {self.example!r}; valid: {', '.join(e.key for e in registry())}")
        entry = lookup(self.example)
        self.metric = self.metric or entry.default_metric
        self.map = self.map or entry.default_map
        self.basis = self.basis or entry.default_basis
        for what, value, valid in (("metric", self.metric, entry.metrics), ("map", self.map, tuple(entry.maps)),
                                   ("basis", self.basis, entry.bases)):
            if value not in valid:
                raise ConfigError(f"unknown {what} {value!r} for {self.example}; valid: {', '.join(valid)}")
        if not isinstance(self.points, int) or isinstance(self.points, bool) or self.points < 1:
            raise ConfigError("points must be a positive integer")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not isinstance(self.pairs, int) or isinstance(self.pairs, bool) or self.pairs < 1:
            raise ConfigError("pairs must be a positive integer")
        if self.engine not in MODES:
            raise ConfigError(f"unknown engine {self.engine!r}; valid: {', '.join(MODES)}")
        if not (isinstance(self.fd_step, (int, float)) and self.fd_step > 0):
            raise ConfigError("fd_step must be a positive number")
        if self.output not in ("text", "json"):
            raise ConfigError("output must be 'text' or 'json'")
        for name, value in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {name!r}; valid: {', '.join(sorted(DEFAULT_TOLERANCES))}")
            if not (isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0):
                raise ConfigError(f"tolerance {name!r} must be a positive number")
        checks = list(self.checks)
        for c in checks:
            if c != "all" and c not in SUITES:
                raise ConfigError(f"unknown check suite {c!r}; valid: all, {', '.join(SUITES)}")
        self.checks = list(SUITES) if "all" in checks else [s for s in SUITES if s in checks]
        return self


def load_config(path) -> dict:
    """Parse a TOML config into a dict of known keys (unknown keys are rejected)."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"malformed config {path}: {err}") from err
    unknown = sorted(set(doc) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s) {', '.join(unknown)}; valid: {', '.join(CONFIG_KEYS)}")
    if "tolerances" in doc and not isinstance(doc["tolerances"], dict):
        raise ConfigError("tolerances must be a table of name = value")
    if "checks" in doc and isinstance(doc["checks"], str):
        doc["checks"] = [doc["checks"]]
    return doc


# --------------------------------------------------------------------------
# suites


class Run:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.entry = lookup(cfg.example)
        self.M, self.B, self.F = self.entry.build(cfg.metric, cfg.map, cfg.basis)
        self.engine = DiffEngine(cfg.engine, cfg.fd_step)
        self.points = sample_points(self.M, cfg.points, seed=cfg.seed)
        self.geo = Geometry(self.F, self.B, self.engine, seed=cfg.seed, pairs=cfg.pairs)
        self.measurements: list = []

    def measure(self, name, value, tolerance, note=""):
        """Record a property of the example that is observed rather than claimed."""
        self.measurements.append({"name": name, "value": float(value), "tolerance": tolerance,
                                  "holds": bool(value < tolerance), "note": note})

    def _prov(self, rep: CheckReport) -> CheckReport:
        rep.provenance.setdefault("seed", self.cfg.seed)
        rep.provenance.setdefault("engine", self.engine.describe())
        rep.provenance.setdefault("points", len(self.points))
        return rep

    def structure(self):
        c = self.cfg
        reps = [check_quaternionic_algebra(self.B, self.points, c.tol("algebra")),
                check_hermitian_metric(self.M, self.B, self.points, seed=c.seed, tol=c.tol("hermitian")),
                check_quaternionic_kahler(self.M, self.B, self.points, c.tol("qk"), self.engine)]
        hk = check_hyperkahler(self.M, self.B, self.points, c.tol("hyperkahler"), self.engine)
        self.measure("hyperkahler", hk.residual, hk.tolerance, "worst |nabla J_a| in an orthonormal frame")
        return reps

    def submersion(self):
        c = self.cfg
        samples, dil = [], []
        expected = self.entry.expected.get("dilation", {}).get((c.map, c.metric))
        for p in self.points:
            a = analyze(self.F, p, self.engine)
            if not a.is_submersion:
                raise NumericError(f"map is not a submersion at {a.point.tolist()}")
            samples.append((a.conformality_residual / a.dilation ** 2, p))
            if expected is not None:
                ref = expected.value[1](p)
                dil.append((abs(a.dilation - ref) / abs(ref), p))
        reps = [from_samples("horizontal-conformality", samples, c.tol("conformality"),
                             notes=["relative defect of g_N(F_*X, F_*Y) = lambda^2 g(X, Y) on horizontal pairs"])]
        if expected is not None:
            reps.append(from_samples("dilation-formula", dil, c.tol("dilation"),
                                     notes=[f"lambda = {expected.value[0]}"], data={"origin": expected.origin}))
        reps += check_map_identities(self.F, self.points, pairs=5 * c.pairs, seed=c.seed, tol=c.tol("map-identities"), engine=self.engine)
        reps += check_oneill_skew(self.F, self.points, pairs=c.pairs, seed=c.seed, tol=c.tol("oneill"),
                                  engine=self.engine)
        hh = check_h_homothetic(self.F, self.points, c.tol("side-a"), self.engine)
        self.measure("h-homothetic", hh.residual, hh.tolerance, "worst |horizontal part of grad lambda|")
        tg = check_totally_geodesic_map(self.F, self.points, pairs=c.pairs, seed=c.seed, tol=c.tol("side-a"),
                                        engine=self.engine)
        self.measure("totally-geodesic-map", tg.residual, tg.tolerance, "worst |(nabla F_*)(X, Y)|")
        return reps

    def lemma1(self):
        tol = self.cfg.tol("lemma1")
        return [T.verify_lemma1(self.geo, self.points, tol), T.verify_nabla_phi_omega(self.geo, self.points, tol)]

    def integrability(self):
        c = self.cfg
        return ([T.check_D2_integrability(self.geo, self.points, c.tol("d2-closure")),
                 T.check_D1_integrability(self.geo, self.points, c.tol("side-a"), c.tol("side-b"))]
                + T.check_horizontal_integrability(self.geo, self.points, c.tol("side-a"), c.tol("side-b")))

    def foliations(self):
        return T.check_foliation_conditions(self.geo, self.points, self.cfg.tol("side-a"), self.cfg.tol("side-b"))

    def homothety(self):
        return T.check_homothety_equivalences(self.geo, self.points, self.cfg.tol("side-a"), self.cfg.tol("side-b"))

    def geodesic(self):
        c = self.cfg
        reps = T.check_totally_geodesic_criterion(self.geo, self.points, c.tol("side-a"), c.tol("side-b"))
        reps.append(T.check_tension(self.geo, self.points, c.tol("tension")))
        for r in T.check_fibre_geometry(self.geo, self.points, c.tol("fibre")):
            self.measure(r.check_name, r.residual, r.tolerance)
        return reps

    def classify(self):
        c = self.cfg
        exp_dil = self.entry.expected.get("dilation", {}).get((c.map, c.metric))
        verdict = classify(self.F, self.B, self.points, self.engine,
                           dilation_formula=exp_dil.value if exp_dil else None)
        self.classification = verdict
        expected = self.entry.expected.get("classification", {}).get(c.map)
        data = {"kind": verdict.kind, "summary": verdict.summary(), "dims": verdict.dims,
                "anti_invariant": verdict.anti_invariant, "dilation": verdict.dilation,
                "per_point": verdict.per_point}
        if expected is None:
            rep = CheckReport("classification", 0.0, c.tol("subspace"), "skipped", None, {},
                              [verdict.summary(), "no registered expectation for this map"], data)
            return [rep]
        mismatches = _classification_mismatches(self.geo, self.points, verdict, expected.value, c.tol("subspace"))
        data["expected"] = expected.value
        data["mismatches"] = mismatches
        notes = [verdict.summary()] + [m["what"] for m in mismatches]
        rep = CheckReport("classification", float(len(mismatches)), 1.0, "fail" if mismatches else "pass", None,
                          {}, notes, data)
        return [rep]

    def golden_table(self):
        c = self.cfg
        exp = self.entry.expected.get("golden-table")
        if exp is None:
            return [CheckReport("golden-table", 0.0, c.tol("golden"), "skipped", None, {},
                                ["no golden table registered for this example"], {})]
        basis = self.entry.basis(exp.basis)
        pts = self.points[: min(len(self.points), 10)]
        rep = check_golden_table(self.M, basis, self.entry.frame, list(exp.value), pts, c.tol("golden"), self.engine)
        rep.notes.append(f"J basis: {exp.basis}; table registered under metric {exp.metric}")
        return [rep]

    def run(self, suite: str):
        fn = {"golden-table": self.golden_table}.get(suite) or getattr(self, suite)
        return [self._prov(r) for r in fn()]

    def locate_failure(self, suite: str):
        """Index and coordinates of the first point on which ``suite`` raises, or None."""
        all_points = self.points
        try:
            for idx, p in enumerate(all_points):
                self.points = all_points[idx:idx + 1]
                try:
                    self.run(suite)
                except NUMERIC_ERRORS:
                    return idx, p
        finally:
            self.points = all_points
        return None


def _classification_mismatches(geo, points, verdict, expected: dict, tol: float) -> list:
    """Compare the verdict with a registered expectation (kinds, dimensions, subspaces)."""
    out = []
    if verdict.kind != expected["kind"]:
        out.append({"what": f"kind {verdict.kind!r} != expected {expected['kind']!r}"})
    n = geo.M.dim

    def span(idx_lists):
        return np.eye(n)[:, [i[0] - 1 for i in idx_lists]]

    for p in points:
        sp = geo.split(p)
        checks = []
        if "common_D1" in expected:
            checks.append(("common D1", sp.common_D1, span(expected["common_D1"])))
        if "common_D1_dim" in expected and sp.common_D1.shape[1] != expected["common_D1_dim"]:
            out.append({"what": f"dim common D1 = {sp.common_D1.shape[1]}, expected {expected['common_D1_dim']}"})
        if "D2" in expected:
            checks.append(("D2", sp.common_D2 if sp.common_valid() else sp.D2[1], span(expected["D2"])))
        if "D2_dim" in expected and sp.common_D2.shape[1] != expected["D2_dim"]:
            out.append({"what": f"dim D2 = {sp.common_D2.shape[1]}, expected {expected['D2_dim']}"})
        for key in ("D1[1]", "D2[1]"):
            if key in expected:
                got = (sp.D1 if key.startswith("D1") else sp.D2)[1]
                checks.append((key, got, span(expected[key])))
        for what, got, want in checks:
            if not same_subspace(got, want, sp.metric, tol):
                out.append({"what": f"{what} differs from expected span", "point": p})
        if out:
            break
    return out


# --------------------------------------------------------------------------
# output


def _jsonable(x):
    from .report import _clean

    return _clean(x)


def render_json(cfg: RunConfig, run: Run, results: dict) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(cfg),
        "effective_tolerances": {k: cfg.tol(k) for k in sorted(DEFAULT_TOLERANCES)},
        "points": run.points,
        "suites": {s: [r.to_dict() for r in reps] for s, reps in results.items()},
        "measurements": run.measurements,
        "exit_code": _exit_code(results),
    }
    if hasattr(run, "classification"):
        doc["classification"] = {"kind": run.classification.kind, "summary": run.classification.summary()}
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=False)


def render_text(cfg: RunConfig, run: Run, results: dict) -> str:
    lines = [f"qksub example={cfg.example} metric={cfg.metric} map={cfg.map} basis={cfg.basis} "
             f"points={cfg.points} seed={cfg.seed} engine={run.engine.describe()}"]
    for suite, reps in results.items():
        lines.append(f"[{suite}]")
        for r in reps:
            lines.append(f"  {r.verdict.upper():8s} {r.check_name:40s} residual={r.residual:.3e} tol={r.tolerance:.1e}"
                         + (f"  {r.notes[-1]}" if r.notes else ""))
            if r.verdict == "fail":
                lines += ["    " + d for d in _details(r)]
    if run.measurements:
        lines.append("[measurements]")
        for m in run.measurements:
            lines.append(f"  {m['name']:40s} {m['value']:.3e} ({'holds' if m['holds'] else 'does not hold'} "
                         f"at {m['tolerance']:.0e})")
    if hasattr(run, "classification"):
        lines.append(f"classification: {run.classification.summary()}")
    lines.append(f"exit code {_exit_code(results)}")
    return "\n".join(lines) + "\n"


def _details(r: CheckReport, limit: int = 8) -> list:
    """Short per-item diagnostics for a failing report."""
    out = []
    if "matched" in r.data:
        out.append(f"{r.data['matched']}/{r.data['total']} entries match")
    for m in r.data.get("mismatches", [])[:limit]:
        if "alpha" in m:
            out.append(f"(nabla_e{m['i']} J{m['alpha']}) e{m['j']}: expected {_fmt(m['expected'])}, "
                       f"got {_fmt(m['computed'])}")
        elif "point" in m:
            out.append(f"{m['what']} at {_fmt(m['point'])}")
        else:
            out.append(m["what"])
    for c in r.data.get("counterexamples", [])[:limit]:
        where = f"point #{c['point_index']} {_fmt(c['point'])}"
        if "side" in c:
            out.append(f"{where}: side {c['side']} residual {c['residual_side']:.3e}, side a residual "
                       f"{c['residual_a']:.3e} ({'holds' if c['a_holds'] else 'fails'})")
        else:
            out.append(f"{where}: hypothesis residual {c['hypothesis']:.3e}, conclusion residual {c['conclusion']:.3e}")
    total = len(r.data.get("mismatches", [])) + len(r.data.get("counterexamples", []))
    shown = len(out) - ("matched" in r.data)
    if total > shown:
        out.append(f"... {total - shown} more in JSON output")
    return out


def _fmt(v) -> str:
    return "[" + ", ".join(f"{float(x):.4g}" for x in np.ravel(v)) + "]"


def _exit_code(results: dict) -> int:
    return EXIT_FAIL if any(r.verdict == "fail" for reps in results.values() for r in reps) else EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qksub", description="Run numerical check suites on registered examples.")
    ap.add_argument("suite", nargs="+", help=f"one or more of: all, {', '.join(SUITES)}")
    ap.add_argument("--example", help="registry key (default r4-qk)")
    ap.add_argument("--metric", help="metric variant of the example")
    ap.add_argument("--map", help="submersion registered with the example")
    ap.add_argument("--basis", help="J basis variant (default coordinate)")
    ap.add_argument("--points", type=int, help="random sample points (default 25)")
    ap.add_argument("--seed", type=int, help="sampling seed (default 42, or QKSUB_SEED)")
    ap.add_argument("--pairs", type=int, help="random section pairs per point (default 2)")
    ap.add_argument("--tol", action="append", default=[], metavar="NAME=VAL", help="override a named tolerance")
    ap.add_argument("--fd-step", type=float, dest="fd_step", help="finite-difference step (default 1e-5)")
    ap.add_argument("--engine", choices=MODES, help="differentiation engine (default dual)")
    ap.add_argument("--config", help="TOML file with any of the options above")
    ap.add_argument("--output", choices=("text", "json"), help="report format (default text)")
    return ap


def make_config(args, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values = {}
    if args.config:
        values.update(load_config(args.config))
    if "seed" not in values and environ.get("QKSUB_SEED"):
        try:
            values["seed"] = int(environ["QKSUB_SEED"])
        except ValueError as err:
            raise ConfigError(f"QKSUB_SEED must be an integer, got {environ['QKSUB_SEED']!r}") from err
    for key in ("example", "metric", "map", "basis", "points", "seed", "pairs", "fd_step", "engine", "output"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    tols = dict(values.get("tolerances", {}))
    for item in args.tol:
        name, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects NAME=VAL, got {item!r}")
        try:
            tols[name.strip()] = float(val)
        except ValueError as err:
            raise ConfigError(f"--tol {name}: {val!r} is not a number") from err
    values["tolerances"] = tols
    values["checks"] = list(args.suite)
    return RunConfig(**values).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        run = Run(cfg)
    except (ConfigError, KeyError, TypeError) as err:
        print(f"qksub: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    results = {}
    with np.errstate(all="raise"):
        for suite in cfg.checks:
            try:
                results[suite] = run.run(suite)
            except NUMERIC_ERRORS as err:
                where = run.locate_failure(suite)
                at = f" at point #{where[0]} {where[1].tolist()}" if where else ""
                print(f"qksub: numeric failure in suite {suite!r}{at}: {err}", file=sys.stderr)
                return EXIT_NUMERIC
    out = render_json(cfg, run, results) if cfg.output == "json" else render_text(cfg, run, results)
    sys.stdout.write(out if out.endswith("\n") else out + "\n")
    return _exit_code(results)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

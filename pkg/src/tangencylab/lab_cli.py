"""Command line front end: configs in, JSON/CSV artifacts and a run manifest out."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import mpmath as mp
import numpy as np

from . import __version__
from .ce_verifier import (ConeSpec, certify_generation_two, check_induction_hypotheses, minimal_depth,
                          transit_angle, verify_tce)
from .critical_orbit import return_parameter
from .errors import AssertionFailure, LabError, NumericFailure, ValidationError
from .family_models import Params, model_from_config, select_theta
from .invariant_measures import standard_chain, verify_contraction
from .sinks_newhouse import boxes_to_json, certify_sink, nh_box_dimension, newhouse_recursion
from .symbolic_dynamics import (classify_omega, dense_point, graph_chain, build_graph, o2_point,
                                realize_partitions, saddle_point, shift_bijectivity, symbolic_json,
                                verify_conjugacy, check_renormalizable)
from .tangency_continuation import (continue_tangency_curve, derived_unfolding, find_secondary_tangency,
                                    make_strip, return_curve, strip_recursion)

log = logging.getLogger("tangencylab")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_ASSERTION = 0, 2, 3, 4

STAGES = ["theta-select", "return-curve", "tangency-scan", "continue", "strips", "sink-scan", "newhouse",
          "nh-dimension", "symbolic", "measure-converge", "ce-verify"]
DEPENDS = {
    "theta-select": [],
    "return-curve": ["theta-select"],
    "tangency-scan": ["theta-select"],
    "continue": ["tangency-scan"],
    "strips": ["continue"],
    "sink-scan": ["theta-select"],
    "newhouse": ["theta-select"],
    "nh-dimension": ["newhouse"],
    "symbolic": ["continue"],
    "measure-converge": [],
    "ce-verify": ["continue"],
}
MINIMAL_STAGES = ["theta-select", "return-curve", "tangency-scan", "continue", "sink-scan"]

DEFAULTS = {
    "model": {"backend": "ideal"},
    "theta": 0.33,
    "stages": MINIMAL_STAGES,
    "seed": 0,
    "return_curve": {"ns": list(range(5, 21)), "samples": 9},
    "tangency": {"n": 15, "start": -0.1, "kappa": 2},
    "continue": {"span": 0.01, "step": 0.005},
    "strips": {"n_child": 40, "depth_budget": 1, "span": 0.01},
    "sinks": {"ns": [8], "t": 0.0, "samples": 256},
    "newhouse": {"ns": list(range(13, 17)), "starts": [-0.1, -0.08, -0.06], "samples": 32},
    "symbolic": {"depth": 2, "windings": [[0, 2, 3, 1, 1], [1, 2, 4, 1, 1], [0, 1, 2, 1, 1],
                                           [0, 1, 2, 1, 1], [0, 1, 1, 1, 1]]},
    "measures": {"levels": 5, "trials": 1000},
    "ce": {"rho": 1.05, "C": 0.01, "cone_angle": 0.2, "T": None},
}


# ---------------------------------------------------------------------------
# configuration


def _merge(base, over):
    out = dict(base)
    for k, v in (over or {}).items():
        out[k] = _merge(base[k], v) if isinstance(v, dict) and isinstance(base.get(k), dict) else v
    return out


@dataclass
class RunConfig:
    model: dict
    theta: float | None
    stages: list
    seed: int
    grids: dict = field(default_factory=dict)
    out: str = "runs/latest"

    @classmethod
    def from_dict(cls, d: dict, out=None):
        d = _merge(DEFAULTS, d)
        unknown = set(d) - set(DEFAULTS) - {"out"}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        stages = d["stages"]
        if stages == "all":
            stages = list(STAGES)
        bad = [s for s in stages if s not in STAGES]
        if bad:
            raise ValidationError(f"unknown stages: {bad}")
        grids = {k: d[k] for k in DEFAULTS if k not in ("model", "theta", "stages", "seed")}
        return cls(d["model"], d["theta"], list(stages), int(d["seed"]), grids, out or d.get("out", "runs/latest"))

    def to_dict(self):
        d = {"model": self.model, "theta": self.theta, "stages": self.stages, "seed": self.seed}
        d.update(self.grids)
        return d

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def validate(self):
        """Build the model and select theta; raises ValidationError naming the failed condition."""
        model = model_from_config(self.model)
        theta = select_theta(model, override=self.theta)
        return model, theta


def load_config(path=None, out=None) -> RunConfig:
    if path is None:
        return RunConfig.from_dict({}, out)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(data, out)


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    config_hash: str
    version: str
    seed: int
    tasks: dict = field(default_factory=dict)      # stage -> {status, artifacts, error}
    timings: dict = field(default_factory=dict)    # stage -> seconds

    @property
    def artifacts(self):
        return sorted(p for t in self.tasks.values() for p in t.get("artifacts", []))

    @property
    def exit_code(self):
        codes = [t.get("exit_code", 0) for t in self.tasks.values()]
        return max(codes) if codes else EXIT_OK

    def canonical(self):
        """Everything except wall-clock timings."""
        return {"config_hash": self.config_hash, "version": self.version, "seed": self.seed,
                "tasks": self.tasks, "artifacts": self.artifacts}

    def to_dict(self):
        d = self.canonical()
        d["wall_clock"] = self.timings
        return d

    def write(self, out_dir):
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return path


def _code_for(exc):
    if isinstance(exc, ValidationError):
        return EXIT_VALIDATION
    if isinstance(exc, NumericFailure):
        return EXIT_NUMERIC
    if isinstance(exc, (AssertionFailure, AssertionError)):
        return EXIT_ASSERTION
    return EXIT_NUMERIC


def _f(v):
    return float(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (mp.mpf, np.floating)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _dump(out, name, obj):
    path = Path(out) / name
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True))
    return str(path)


def _write_csv(out, name, header, rows):
    path = Path(out) / name
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, mp.mpf, np.floating)) else v for v in r])
    return str(path)


# ---------------------------------------------------------------------------
# stages; each returns its artifact paths and may leave data in ctx


def _pool_map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def stage_theta_select(cfg, ctx, out):
    model, theta = cfg.validate()
    ctx["model"], ctx["theta"] = model, theta
    return [_dump(out, "theta.json", {"theta": theta.theta, "alpha": theta.alpha, "theta0": theta.theta0,
                                      "theta1": theta.theta1, "checks": theta.checks,
                                      "model": model.describe()})]


def stage_return_curve(cfg, ctx, out):
    model, theta = ctx["model"], ctx["theta"]
    g = cfg.grids["return_curve"]
    ts = np.linspace(-model.window.t0, model.window.t0, g["samples"])
    rows = []
    for n in g["ns"]:
        rc = return_curve(model, theta, n, ts)
        with mp.workdps(model.precision_hint(n, theta.theta)):
            for t, v in zip(rc.ts, rc.values):
                rows.append((n, _f(t), mp.nstr(v, 20), _f(rc.closed_form_deriv(t))))
    return [_write_csv(out, "return_curves.csv", ["n", "t", "a_n", "da_n_dt"], rows)]


def stage_tangency_scan(cfg, ctx, out):
    model, theta = ctx["model"], ctx["theta"]
    g = cfg.grids["tangency"]
    strip = make_strip(model, theta, g["n"], 0)
    p = find_secondary_tangency(model, theta, strip, g["start"], kappa=g["kappa"])
    ctx["tangency"] = p
    return [_dump(out, "tangency.json", {"n": p.n, "n0": p.n0, "t": _f(p.t), "a": mp.nstr(p.a, 30),
                                         "t_start": _f(p.t_start), "distance": _f(p.distance),
                                         "certificate": p.certificate})]


def stage_continue(cfg, ctx, out):
    model, theta, p = ctx["model"], ctx["theta"], ctx["tangency"]
    g = cfg.grids["continue"]
    strip = make_strip(model, theta, p.n, p.n0)
    t = float(p.t)
    curve = continue_tangency_curve(model, theta, p, t_range=(t - g["span"], t + g["span"]),
                                    step=g["step"], strip=strip)
    ctx["curve"], ctx["strip"] = curve, strip
    path = str(Path(out) / "b_curve.csv")
    curve.to_csv(path, strip)
    meta = _dump(out, "b_curve.json", {"n": curve.n, "n0": curve.n0, "complete": curve.complete,
                                       "notes": curve.notes,
                                       "residuals": [[_f(a), _f(b)] for a, b in curve.residuals]})
    return [path, meta]


def stage_strips(cfg, ctx, out):
    model, theta, p = ctx["model"], ctx["theta"], ctx["tangency"]
    g = cfg.grids["strips"]
    derived = derived_unfolding(model, theta, p)
    fam = strip_recursion(derived, theta, g["n_child"], depth_budget=g["depth_budget"], span=g["span"])
    d = fam.to_dict()
    ts = sorted({float(t) for c in fam.children for t, _ in c.samples})
    d["strips"] = [list(r) for s in fam.strips for r in s.to_rows(ts, f"B_{s.n}")]
    return [_dump(out, "strips.json", d)]


def stage_sink_scan(cfg, ctx, out):
    model, theta = ctx["model"], ctx["theta"]
    g = cfg.grids["sinks"]

    def one(n):
        with mp.workdps(model.precision_hint(n, theta.theta)):
            a = return_parameter(model, n, mp.mpf(g["t"]))
            return certify_sink(model, theta, Params(mp.mpf(g["t"]), a), n, samples=g["samples"]).to_dict()

    certs = _pool_map(one, g["ns"], ctx.get("threads"))
    bad = [c["n"] for c in certs if not c.get("valid", False)]
    path = _dump(out, "sinks.json", certs)
    if bad:
        raise AssertionFailure(f"sink certificates invalid for n in {bad}")
    return [path]


def stage_newhouse(cfg, ctx, out):
    model, theta = ctx["model"], ctx["theta"]
    g = cfg.grids["newhouse"]
    levels = newhouse_recursion(model, theta, depth=1, ns=g["ns"], t_starts=g["starts"], samples=g["samples"])
    ctx["boxes"] = levels
    path = Path(out) / "newhouse_boxes.json"
    path.write_text(boxes_to_json(levels))
    return [str(path)]


def stage_nh_dimension(cfg, ctx, out):
    rep = nh_box_dimension(ctx["boxes"][0], ctx["theta"])
    d = rep.to_dict()
    return [_dump(out, "nh_dimension.json", d)]


def stage_symbolic(cfg, ctx, out):
    model, theta, curve = ctx["model"], ctx["theta"], ctx["curve"]
    g = cfg.grids["symbolic"]
    base = build_graph(model.N, model.M)
    graphs, morphisms = graph_chain(base, [tuple(w) for w in g["windings"]])
    depth = min(int(g["depth"]), len(graphs))
    classes = {}
    for name, pt in (("dense", dense_point(graphs, morphisms, depth)),
                     ("o2", o2_point(graphs, morphisms, depth)), ("saddle", saddle_point(depth))):
        classes[name] = classify_omega(pt, graphs, morphisms).kind
    params = [Params(t, b) for t, b in (curve.samples[0], curve.samples[-1])]
    real = realize_partitions(model, theta, params, curve.n, curve.n0)
    reports = [verify_conjugacy(r.partitions, r.graphs, r.morphisms, model, depth=2).to_dict() for r in real]
    same = all(r.symbolic_data() == real[0].symbolic_data() for r in real)
    renorm = [check_renormalizable(model, theta, p, {"n": curve.n, "n0": curve.n0}) for p in params]
    data = {"classes": classes, "shift": shift_bijectivity(graphs[:4], morphisms[:3]),
            "conjugacy": reports, "identical_symbolic_data": same, "renormalizable": renorm,
            "realized_counts": [list(r.counts) for r in real],
            "realized": [p.to_dict() for p in real[0].partitions]}
    paths = [_dump(out, "symbolic.json", data)]
    (Path(out) / "graphs.json").write_text(symbolic_json(graphs, morphisms))
    paths.append(str(Path(out) / "graphs.json"))
    if not (same and all(r["passed"] for r in reports)):
        raise AssertionFailure("conjugacy diagram failed on the realized partitions")
    return paths


def stage_measure_converge(cfg, ctx, out):
    g = cfg.grids["measures"]
    dims, wins = standard_chain(g["levels"])
    rep = verify_contraction(dims, wins, trials=g["trials"], seed=cfg.seed)
    path = _dump(out, "measure_convergence.json", rep.to_dict())
    if not rep.passed:
        raise AssertionFailure("measure contraction failed")
    return [path]


def stage_ce_verify(cfg, ctx, out):
    model, theta, curve = ctx["model"], ctx["theta"], ctx["curve"]
    g = cfg.grids["ce"]
    cone = ConeSpec(g["cone_angle"], g["C"], g["rho"])
    cone.validate(model.lam(mp.mpf(0), mp.mpf(0)), model.mu(mp.mpf(0), mp.mpf(0)), theta.theta)
    t, b = curve.samples[len(curve.samples) // 2]
    params = Params(t, b)
    real = realize_partitions(model, theta, [params], curve.n, curve.n0)[0]
    rep = certify_generation_two(model, theta, params, curve.n, curve.n0, real.counts[4], cone)
    hyp = check_induction_hypotheses(model, theta, cone)
    beta = transit_angle(model)
    lam, mu = float(model.lam(0, 0)), float(model.mu(0, 0))
    data = {"certificate": rep.to_dict(), "hypotheses": hyp.to_dict(), "beta": beta,
            "n_min": minimal_depth(hyp.K, cone, lam, mu, theta.theta, model.N, model.M, beta)}
    if g.get("T"):
        saddle = verify_tce(model, theta, cone, (0, 0), int(g["T"]), params=params)
        data["saddle_check"] = saddle.to_dict()
    path = _dump(out, "ce_report.json", data)
    if not (rep.valid and hyp.passed):
        raise AssertionFailure("finite CE certificate or induction hypotheses failed")
    return [path]


STAGE_FUNCS = {
    "theta-select": stage_theta_select, "return-curve": stage_return_curve,
    "tangency-scan": stage_tangency_scan, "continue": stage_continue, "strips": stage_strips,
    "sink-scan": stage_sink_scan, "newhouse": stage_newhouse, "nh-dimension": stage_nh_dimension,
    "symbolic": stage_symbolic, "measure-converge": stage_measure_converge, "ce-verify": stage_ce_verify,
}


def _rel(path, out):
    return str(Path(path).relative_to(out))


def _closure(stages):
    need = []

    def visit(s):
        for d in DEPENDS[s]:
            visit(d)
        if s not in need:
            need.append(s)

    for s in stages:
        visit(s)
    return [s for s in STAGES if s in need]


def run_pipeline(config: RunConfig, threads: int = 1) -> RunManifest:
    """Run the requested stages (plus prerequisites) in dependency order and persist everything."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True))
    manifest = RunManifest(config.digest(), __version__, config.seed)
    manifest.tasks["config"] = {"status": "ok", "artifacts": ["config.json"]}
    ctx = {"threads": threads}
    failed = set()
    for stage in _closure(config.stages):
        if any(d in failed for d in _closure(DEPENDS[stage])):
            manifest.tasks[stage] = {"status": "skipped", "artifacts": [], "exit_code": EXIT_OK}
            failed.add(stage)
            continue
        start = time.perf_counter()
        try:
            paths = STAGE_FUNCS[stage](config, ctx, out)
            manifest.tasks[stage] = {"status": "ok", "artifacts": [_rel(p, out) for p in paths]}
        except (LabError, AssertionError, ArithmeticError, ValueError, ZeroDivisionError) as exc:
            log.error("stage %s failed: %s", stage, exc)
            failed.add(stage)
            arts = [p.name for p in sorted(out.glob("*")) if p.name not in ("manifest.json", "config.json")
                    and p.name not in manifest.artifacts]
            manifest.tasks[stage] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}",
                                     "exit_code": _code_for(exc), "artifacts": arts}
        manifest.timings[stage] = round(time.perf_counter() - start, 3)
    manifest.write(out)
    return manifest


# ---------------------------------------------------------------------------
# plot data


PLOT_KINDS = ("strip", "curve", "boxes", "dimension", "convergence")


def emit_plot_data(artifact, kind, dest=None):
    """Flatten a JSON/CSV artifact into a CSV table for plotting."""
    if kind not in PLOT_KINDS:
        raise ValidationError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    src = Path(artifact)
    if not src.exists():
        raise ValidationError(f"artifact {src} does not exist")
    dest = Path(dest) if dest else src.with_name(f"{src.stem}_{kind}.csv")
    if kind == "curve" and src.suffix == ".csv":
        with open(src) as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        cols = [header.index(c) for c in ("t", "b")]
        return _write_csv(dest.parent, dest.name, ["t", "b"], [[r[i] for i in cols] for r in body])
    data = json.loads(src.read_text())
    if kind == "strip":
        return _write_csv(dest.parent, dest.name, ["t", "lower", "upper", "label"],
                          [(r[0], r[1], r[2], r[4]) for r in data["strips"]])
    if kind == "curve":
        rows = [(c["depth"], t, b) for c in data["children"] for t, b in c["samples"]]
        return _write_csv(dest.parent, dest.name, ["depth", "t", "b"], rows)
    if kind == "boxes":
        rows = []
        for level in data:
            for b in level:
                lab = "/".join(f"{n}:{n0}" for n, n0 in b["labels"])
                rows.append((b["generation"], lab, b["t_window"][0], b["t_window"][1], b["t_star"],
                             b["eps0"], " ".join(str(p) for p in b["periods"])))
        return _write_csv(dest.parent, dest.name,
                          ["generation", "labels", "t_lo", "t_hi", "t_star", "eps0", "periods"], rows)
    if kind == "dimension":
        return _write_csv(dest.parent, dest.name, ["log_inv_eps", "log_count"],
                          list(zip(data["log_inv_eps"], data["log_count"])))
    rows = [(g, data["worst_factor"][g] if g < len(data["worst_factor"]) else "", data["max_distance"][g])
            for g in range(len(data["max_distance"]))]
    return _write_csv(dest.parent, dest.name, ["level", "worst_factor", "max_distance"], rows)


# ---------------------------------------------------------------------------
# argparse front end


def build_parser():
    p = argparse.ArgumentParser(prog="tangencylab", description="Homoclinic tangency laboratory")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (default runs/latest)")
    p.add_argument("--seed", type=int, help="random seed (overrides config)")
    p.add_argument("--threads", type=int, default=1, help="worker threads inside a stage")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in STAGES:
        sp = sub.add_parser(name, help=f"run the {name} stage and its prerequisites")
        if name == "tangency-scan":
            sp.add_argument("--n", type=int)
            sp.add_argument("--start", type=float)
        if name == "sink-scan":
            sp.add_argument("--ns", type=int, nargs="+")
        if name == "symbolic":
            sp.add_argument("action", nargs="?", default="verify-conjugacy",
                            choices=["verify-conjugacy", "classify"])
            sp.add_argument("--depth", type=int)
        if name == "ce-verify":
            sp.add_argument("--T", type=int)
            sp.add_argument("--cone-angle", type=float)
            sp.add_argument("--rho", type=float)
            sp.add_argument("--C", type=float)
        if name == "measure-converge":
            sp.add_argument("--levels", type=int)
            sp.add_argument("--trials", type=int)
    pp = sub.add_parser("pipeline", help="run the stages listed in the config (all with --all)")
    pp.add_argument("--all", action="store_true")
    pl = sub.add_parser("plot-data", help="flatten an artifact into CSV")
    pl.add_argument("artifact")
    pl.add_argument("kind", choices=PLOT_KINDS)
    pl.add_argument("--dest")
    return p


def _apply_overrides(cfg: RunConfig, args):
    g = cfg.grids
    pairs = {
        ("tangency", "n"): getattr(args, "n", None), ("tangency", "start"): getattr(args, "start", None),
        ("sinks", "ns"): getattr(args, "ns", None), ("symbolic", "depth"): getattr(args, "depth", None),
        ("ce", "T"): getattr(args, "T", None), ("ce", "cone_angle"): getattr(args, "cone_angle", None),
        ("ce", "rho"): getattr(args, "rho", None), ("ce", "C"): getattr(args, "C", None),
        ("measures", "levels"): getattr(args, "levels", None),
        ("measures", "trials"): getattr(args, "trials", None),
    }
    for (sec, key), v in pairs.items():
        if v is not None:
            g[sec] = dict(g[sec], **{key: v})
    if args.seed is not None:
        cfg.seed = args.seed


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "plot-data":
            print(emit_plot_data(args.artifact, args.kind, args.dest))
            return EXIT_OK
        cfg = load_config(args.config, args.out)
        _apply_overrides(cfg, args)
        if args.command == "pipeline":
            if args.all:
                cfg.stages = list(STAGES)
        else:
            cfg.stages = [args.command]
        cfg.validate()
        manifest = run_pipeline(cfg, threads=args.threads)
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _code_for(exc)
    for stage, task in manifest.tasks.items():
        line = f"{stage:18s} {task['status']}"
        if task.get("error"):
            line += f"  ({task['error']})"
        print(line)
    print(f"manifest: {Path(cfg.out) / 'manifest.json'}")
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Experiment runner: named fixtures or YAML configs in, traces and checks out.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or parse error,
3 a solver diverged.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import catalog
from .geometry import (
    FixedPointSetEmpty, GapData, GeometryReport, compute_geometry, dual_objective, dual_solution,
    primal_objective, subgradient_residuals,
)
from .operators import (
    AffineMonotone, MonotoneOperator, Order, ResolventAverage, Subdifferential, Weights,
)
from .solvers import (
    IterationTrace, Status, StoppingRule, run_alternating, run_composition, run_proximal_point,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

ALGORITHMS = ("proximal_point", "alternating", "composition_EF", "composition_FE")
AGREEMENT_TOL = 1e-6
IDENTITY_TOL = 1e-8
GAP_STARTS = 4  # extra starts, five in total


class ConfigError(ValueError):
    """Bad config; the message names the offending field or line."""


# ---------------------------------------------------------------- config

@dataclass
class Outputs:
    trace: bool = True
    geometry: bool = True
    dual_check: bool = False


@dataclass
class ExperimentConfig:
    a1: MonotoneOperator
    a2: MonotoneOperator
    dimension: int
    weights: Weights
    algorithms: tuple[str, ...]
    x0: np.ndarray
    rule: StoppingRule = StoppingRule()
    outputs: Outputs = field(default_factory=Outputs)
    seed: int = 0
    echo: dict = field(default_factory=dict)


def _vector(value, where: str, dim: int | None = None) -> np.ndarray:
    try:
        v = np.atleast_1d(np.asarray(value, dtype=float))
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a list of numbers") from None
    if v.ndim != 1:
        raise ConfigError(f"{where}: expected a flat list of numbers")
    if dim is not None and v.size != dim:
        raise ConfigError(f"{where}: dimension mismatch, expected {dim} entries, got {v.size}")
    return v


def _matrix(value, where: str, dim: int) -> np.ndarray:
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a matrix of numbers") from None
    if m.shape != (dim, dim):
        raise ConfigError(f"{where}: dimension mismatch, expected {dim}x{dim}, got shape {m.shape}")
    return m


def _scalar(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number")
    return float(value)


def _require(spec: dict, key: str, where: str):
    if key not in spec:
        raise ConfigError(f"{where}.{key}: missing")
    return spec[key]


def _operator(spec, where: str, dim: int) -> MonotoneOperator:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected a mapping with 'kind'")
    kind = _require(spec, "kind", where)
    r = lambda key: _require(spec, key, where)  # noqa: E731
    at = lambda key: f"{where}.{key}"  # noqa: E731
    if kind == "quadratic":
        f = catalog.Quadratic(_matrix(r("Q"), at("Q"), dim),
                              _vector(spec.get("q", np.zeros(dim)), at("q"), dim),
                              _scalar(spec.get("c", 0.0), at("c")))
    elif kind == "abs_sum":
        f = catalog.AbsSum(_vector(r("weights"), at("weights"), dim))
    elif kind == "box":
        f = catalog.IndicatorBox(_vector(r("lo"), at("lo"), dim), _vector(r("hi"), at("hi"), dim))
    elif kind == "ball":
        f = catalog.IndicatorBall(_vector(r("center"), at("center"), dim), _scalar(r("radius"), at("radius")))
    elif kind == "halfspace":
        f = catalog.IndicatorHalfspace(_vector(r("normal"), at("normal"), dim), _scalar(r("offset"), at("offset")))
    elif kind == "affine_set":
        dirs = np.asarray(r("directions"), dtype=float).reshape(-1, dim)
        f = catalog.IndicatorAffine.from_directions(_vector(r("anchor"), at("anchor"), dim), dirs)
    elif kind == "point":
        f = catalog.IndicatorPoint(_vector(r("p"), at("p"), dim))
    elif kind == "affine_monotone":
        return AffineMonotone(_matrix(r("M"), at("M"), dim), _vector(spec.get("b", np.zeros(dim)), at("b"), dim))
    else:
        raise ConfigError(f"{where}.kind: unsupported variant {kind!r}")
    return Subdifferential(f)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{source}: {where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")

    problem = _require(raw, "problem", "config")
    if not isinstance(problem, dict):
        raise ConfigError("problem: expected a mapping")
    dim = _require(problem, "dimension", "problem")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ConfigError("problem.dimension: expected a positive integer")
    try:
        specs = [problem.get(a, problem.get(f)) for a, f in (("A1", "f1"), ("A2", "f2"))]
        if specs[0] is None or specs[1] is None:
            raise ConfigError("problem: needs A1 (or f1) and A2 (or f2)")
        a1 = _operator(specs[0], "problem.A1", dim)
        a2 = _operator(specs[1], "problem.A2", dim)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"problem: {exc}") from None

    weights = raw.get("weights", {})
    lam = _scalar(_require(weights, "lambda1", "weights") if isinstance(weights, dict) else None, "weights.lambda1")
    try:
        w = Weights(lam)
    except ValueError as exc:
        raise ConfigError(f"weights.lambda1: {exc}") from None

    alg = raw.get("algorithm", "all")
    if alg == "all":
        algorithms = ALGORITHMS
    elif alg in ALGORITHMS:
        algorithms = (alg,)
    else:
        raise ConfigError(f"algorithm: expected one of {ALGORITHMS + ('all',)}, got {alg!r}")

    x0 = _vector(raw.get("x0", [0.0] * dim), "x0", dim)

    stopping = raw.get("stopping", {}) or {}
    if not isinstance(stopping, dict):
        raise ConfigError("stopping: expected a mapping")
    allowed = set(StoppingRule.__dataclass_fields__)
    for key in stopping:
        if key not in allowed:
            raise ConfigError(f"stopping.{key}: unknown field")
    try:
        rule = StoppingRule(**stopping)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"stopping: {exc}") from None

    out_raw = raw.get("outputs", {}) or {}
    outputs = Outputs()
    for key, val in out_raw.items():
        if key not in Outputs.__dataclass_fields__:
            raise ConfigError(f"outputs.{key}: unknown field")
        if not isinstance(val, bool):
            raise ConfigError(f"outputs.{key}: expected true or false")
        setattr(outputs, key, val)
    if outputs.dual_check and not (isinstance(a1, Subdifferential) and isinstance(a2, Subdifferential)):
        raise ConfigError("outputs.dual_check: needs both operators to be subdifferentials")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed: expected an integer")
    return ExperimentConfig(a1, a2, dim, w, algorithms, x0, rule, outputs, seed, raw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


# ---------------------------------------------------------------- fixtures

EXAMPLES = ("disk_line", "quadratics", "abs_quadratic")


def example_config(name: str, lambda1: float, seed: int = 0) -> ExperimentConfig:
    if name == "disk_line":
        problem = {"dimension": 2,
                   "A1": {"kind": "ball", "center": [0.0, 2.0], "radius": 1.0},
                   "A2": {"kind": "affine_set", "anchor": [0.0, 0.0], "directions": [[1.0, 0.0]]}}
        x0 = [5.0, 7.0]
    elif name == "quadratics":
        problem = {"dimension": 1,
                   "A1": {"kind": "quadratic", "Q": [[2.0]], "q": [0.0], "c": 0.0},
                   "A2": {"kind": "quadratic", "Q": [[2.0]], "q": [-2.0], "c": 1.0}}
        x0 = [5.0]
    elif name == "abs_quadratic":
        problem = {"dimension": 1,
                   "A1": {"kind": "abs_sum", "weights": [1.0]},
                   "A2": {"kind": "quadratic", "Q": [[2.0]], "q": [-2.0], "c": 1.0}}
        x0 = [5.0]
    else:
        raise ConfigError(f"unknown example {name!r}; choose from {EXAMPLES}")
    raw = {"problem": problem, "weights": {"lambda1": lambda1}, "algorithm": "all", "x0": x0,
           "outputs": {"trace": True, "geometry": True, "dual_check": True}, "seed": seed}
    return parse_config(yaml.safe_dump(raw), f"example {name}")


# ---------------------------------------------------------------- running

@dataclass
class CheckRow:
    identity: str
    residual: float
    tolerance: float
    passed: bool


@dataclass
class ReportBundle:
    config: dict
    traces: dict[str, IterationTrace]
    fix_values: dict[str, np.ndarray]
    geometry: GeometryReport | None
    checks: list[CheckRow]
    timings: dict[str, float] = field(default_factory=dict)
    diverged: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        if self.diverged:
            return EXIT_DIVERGED
        return EXIT_OK if self.passed else EXIT_CHECK


def _row(name: str, residual: float, tol: float) -> CheckRow:
    return CheckRow(name, float(residual), float(tol), bool(residual <= tol))


def _run_algorithm(cfg: ExperimentConfig, name: str):
    a1, a2, w, x0, rule = cfg.a1, cfg.a2, cfg.weights, cfg.x0, cfg.rule
    if name == "proximal_point":
        tr = run_proximal_point(ResolventAverage(a1, a2, w), x0, rule)
        return {name: tr}, tr.final
    if name == "alternating":
        res = run_alternating(a1, a2, w, x0, rule)
        return {name: res.trace_x, "alternating_y": res.trace_y}, res.averaged_limit
    order = Order.EF if name.endswith("EF") else Order.FE
    res = run_composition(a1, a2, w, order, x0, rule)
    return {name: res.trace}, res.recovered_fix


def run_experiment(cfg: ExperimentConfig) -> ReportBundle:
    traces: dict[str, IterationTrace] = {}
    fixes: dict[str, np.ndarray] = {}
    timings: dict[str, float] = {}
    checks: list[CheckRow] = []
    diverged = False
    for name in cfg.algorithms:
        t0 = time.perf_counter()
        tr, fix = _run_algorithm(cfg, name)
        timings[name] = time.perf_counter() - t0
        traces.update(tr)
        fixes[name] = fix
        main = tr[name]
        scale = 1.0 + np.linalg.norm(main.final)
        checks.append(CheckRow(f"converged_{name}", main.residual / scale, cfg.rule.residual_tol,
                               main.converged))
        diverged |= main.status is Status.DIVERGED

    if len(fixes) > 1 and not diverged:
        vals = list(fixes.values())
        spread = max(np.linalg.norm(a - b) for a in vals for b in vals)
        checks.append(_row("algorithms_agree", spread, AGREEMENT_TOL))

    geo = None
    if (cfg.outputs.geometry or cfg.outputs.dual_check) and not diverged:
        t0 = time.perf_counter()
        try:
            geo = compute_geometry(cfg.a1, cfg.a2, cfg.weights, cfg.x0, cfg.rule, tol=IDENTITY_TOL,
                                   restarts=GAP_STARTS, seed=cfg.seed)
        except FixedPointSetEmpty:
            diverged = True
        timings["geometry"] = time.perf_counter() - t0
    if geo is not None and cfg.outputs.geometry:
        checks.extend(_row(k, v, geo.tolerance) for k, v in geo.identity_residuals.items())
    if geo is not None and cfg.outputs.dual_check:
        f1, f2 = cfg.a1.f, cfg.a2.f
        phi = dual_solution(geo)
        p = primal_objective(f1, f2, cfg.weights, geo.e_rep, geo.f_rep)
        d = dual_objective(f1, f2, cfg.weights, phi)
        scale = 1.0 + np.linalg.norm(geo.fix_rep)
        gap = abs(p + d) / (1.0 + abs(p)) if math.isfinite(p + d) else math.inf
        checks.append(_row("duality_gap", gap, IDENTITY_TOL))
        for k, v in subgradient_residuals(f1, f2, cfg.weights, geo, seed=cfg.seed).items():
            checks.append(_row(k, v / scale, IDENTITY_TOL))
    return ReportBundle(cfg.echo, traces, fixes, geo, checks, timings, diverged)


def run_example(name: str, lambda1: float, seed: int = 0) -> ReportBundle:
    return run_experiment(example_config(name, lambda1, seed))


def run_config(path, seed: int | None = None) -> ReportBundle:
    cfg = load_config(path)
    if seed is not None:
        cfg.seed = seed
        cfg.echo = {**cfg.echo, "seed": seed}
    return run_experiment(cfg)


# ---------------------------------------------------------------- serialization

def _num(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    s = format(v, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def _dump(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_dump(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_dump(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _dump(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return json.dumps(str(obj))


def _trace_doc(tr: IterationTrace) -> dict:
    return {"status": tr.status.value, "iterations_used": tr.iterations_used, "final": tr.final,
            "residual": tr.residual,
            "iterate_indices": tr.iterate_indices, "iterates": tr.iterates, "step_norms": tr.step_norms}


def _geometry_doc(g: GeometryReport) -> dict:
    return {"e_rep": g.e_rep, "f_rep": g.f_rep, "s_rep": [g.s_rep[0], g.s_rep[1]], "fix_rep": g.fix_rep,
            "u_star": g.gap.u_star, "v_star": g.gap.v_star, "phi_bar": g.gap.phi_bar,
            "identity_residuals": g.identity_residuals, "tolerance": g.tolerance,
            "solver_status": g.solver_status.value}


def bundle_document(b: ReportBundle) -> dict:
    return {
        "config": b.config,
        "diverged": b.diverged,
        "passed": b.passed,
        "fix_values": b.fix_values,
        "geometry": None if b.geometry is None else _geometry_doc(b.geometry),
        "checks": [{"identity": c.identity, "residual": c.residual, "tolerance": c.tolerance,
                    "pass": c.passed} for c in b.checks],
        "traces": {k: _trace_doc(t) for k, t in b.traces.items()},
    }


def dumps_report(b: ReportBundle) -> str:
    """Deterministic JSON (17 significant digits); timings are left out."""
    return _dump(bundle_document(b)) + "\n"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def emit_report(b: ReportBundle, fmt: str, dest) -> list[Path]:
    """Write the bundle under ``dest``; returns the written paths.

    ``json`` writes ``report.json``; ``csv`` writes ``trace_<name>.csv`` per
    trace plus ``summary.csv``.  Wall-clock timings go to ``timings.json`` so
    the report itself stays byte-identical across runs.
    """
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        p = dest / "report.json"
        p.write_text(dumps_report(b))
        written.append(p)
    elif fmt == "csv":
        for name, tr in b.traces.items():
            n = tr.iterates.shape[1]
            rows = []
            for idx, x in zip(tr.iterate_indices, tr.iterates):
                step = "" if idx == 0 else repr(float(tr.step_norms[idx - 1]))
                rows.append([int(idx), step, *(repr(float(v)) for v in x)])
            p = dest / f"trace_{name}.csv"
            _write_csv(p, ["iter", "step_norm", *(f"coord_{i}" for i in range(n))], rows)
            written.append(p)
        p = dest / "summary.csv"
        _write_csv(p, ["identity", "residual", "tolerance", "pass"],
                   [[c.identity, repr(c.residual), repr(c.tolerance), "true" if c.passed else "false"]
                    for c in b.checks])
        written.append(p)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    p = dest / "timings.json"
    p.write_text(json.dumps(b.timings, indent=2) + "\n")
    written.append(p)
    return written


def _arr(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


def loads_report(text: str, timings: dict | None = None) -> ReportBundle:
    doc = json.loads(text)
    traces = {
        k: IterationTrace(_arr(t["iterates"]).reshape(len(t["iterate_indices"]), -1),
                          np.asarray(t["iterate_indices"], dtype=np.int64), _arr(t["step_norms"]),
                          Status(t["status"]), _arr(t["final"]), int(t["iterations_used"]),
                          float(t["residual"]))
        for k, t in doc["traces"].items()
    }
    geo = None
    if doc["geometry"] is not None:
        g = doc["geometry"]
        u = _arr(g["u_star"])
        geo = GeometryReport(_arr(g["e_rep"]), _arr(g["f_rep"]), (_arr(g["s_rep"][0]), _arr(g["s_rep"][1])),
                             _arr(g["fix_rep"]), GapData(u, _arr(g["v_star"]), _arr(g["phi_bar"])),
                             {k: float(v) for k, v in g["identity_residuals"].items()},
                             float(g["tolerance"]), Status(g["solver_status"]))
    checks = [CheckRow(c["identity"], float(c["residual"]), float(c["tolerance"]), bool(c["pass"]))
              for c in doc["checks"]]
    return ReportBundle(doc["config"], traces, {k: _arr(v) for k, v in doc["fix_values"].items()},
                        geo, checks, dict(timings or {}), bool(doc["diverged"]))


def load_report(dest) -> ReportBundle:
    dest = Path(dest)
    tpath = dest / "timings.json"
    timings = json.loads(tpath.read_text()) if tpath.exists() else {}
    return loads_report((dest / "report.json").read_text(), timings)


# ---------------------------------------------------------------- entry point

def _print_summary(b: ReportBundle, out=sys.stdout) -> None:
    for name, fix in b.fix_values.items():
        print(f"{name:>16}: fix = {np.array2string(fix, precision=10)}", file=out)
    if b.geometry is not None:
        g = b.geometry
        print(f"{'gap u*':>16}: {np.array2string(g.gap.u_star, precision=10)}", file=out)
    width = max((len(c.identity) for c in b.checks), default=8)
    for c in b.checks:
        print(f"  {'PASS' if c.passed else 'FAIL'}  {c.identity:<{width}}  {c.residual:.3e}  (tol {c.tolerance:.0e})", file=out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="resavg", description="Fixed points of resolvent averages and compositions.")
    sub = ap.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("run-example", help="run one of the built-in fixtures")
    ex.add_argument("name", choices=EXAMPLES)
    ex.add_argument("--lambda1", type=float, required=True)
    ex.add_argument("--out", type=Path)
    ex.add_argument("--format", choices=("json", "csv"), default="json")
    ex.add_argument("--seed", type=int, default=0)

    rc = sub.add_parser("run-config", help="run an experiment described by a YAML file")
    rc.add_argument("path", type=Path)
    rc.add_argument("--out", type=Path)
    rc.add_argument("--format", choices=("json", "csv"), default="json")
    rc.add_argument("--seed", type=int)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "run-example":
            bundle = run_example(args.name, args.lambda1, args.seed)
        else:
            bundle = run_config(args.path, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _print_summary(bundle)
    if args.out is not None:
        try:
            emit_report(bundle, args.format, args.out)
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_USAGE
    if bundle.diverged:
        print("error: solver diverged; the fixed point sets are empty", file=sys.stderr)
    for c in bundle.checks:
        if not c.passed:
            print(f"check failed: {c.identity} residual {c.residual:.3e} > {c.tolerance:.0e}", file=sys.stderr)
    return bundle.exit_code


if __name__ == "__main__":
    sys.exit(main())

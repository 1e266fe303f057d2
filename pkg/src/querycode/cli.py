"""Command-line front end.

Subcommands: bounds, simulate, exact, make-queries, decode-answers. Every
failure exits nonzero after writing a single JSON line to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, csvio, schemes, sim
from .decoders import decode_threshold_alg1, resolve_thresholds
from .errors import DomainError, QueryCodeError, ValidationError
from .model import Prior

FIGURES = {
    "fig1": ("xor_achievable", "gallager", "counting", "trivial"),
    "fig2": ("thm3", "massey", "and_formula", "unconstrained"),
    "fig6": ("xor_achievable", "miller"),
}
DEFAULT_GRID = {"fig1": "0.01:0.49:0.01", "fig2": "0.01:0.99:0.01", "fig6": "0.01:0.49:0.01"}


class UsageError(QueryCodeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_grid(text, integer=False):
    """``lo:hi:step`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            lo, hi, step = (float(s) for s in parts)
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            values = [round(lo + i * step, 12) for i in range(count)]
        else:
            values = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}: use lo:hi:step or a comma list") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise UsageError(f"bad grid {text!r}")
    if integer:
        if any(v != int(v) for v in values):
            raise UsageError(f"grid {text!r} must contain integers")
        return [int(v) for v in values]
    return values


def _floats(text, what):
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"bad {what} {text!r}") from None


def _ints(text, what):
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"bad {what} {text!r}") from None


def _prior_from_args(args):
    if (args.prior is None) == (args.sizes is None):
        raise UsageError("give exactly one of --prior or --sizes")
    if args.sizes is not None:
        sizes = _ints(args.sizes, "sizes")
        return Prior.from_sizes(sizes), sizes
    return Prior(_floats(args.prior, "prior")), None


def parse_threshold(text, k):
    """``formula`` -> None; ``more-than:T`` -> T+1 for every label; ``at-least:t1,..`` -> per label."""
    if text == "formula":
        return None
    kind, _, rest = text.partition(":")
    if kind == "more-than":
        return _ints(rest, "threshold")[0] + 1 if rest else _bad_threshold(text)
    if kind == "at-least":
        ts = _ints(rest, "threshold")
        if len(ts) == 1:
            return ts[0]
        if len(ts) != k - 1:
            raise UsageError(f"at-least needs 1 or {k - 1} values, got {len(ts)}")
        return ts
    return _bad_threshold(text)


def _bad_threshold(text):
    raise UsageError(f"bad threshold {text!r}: use formula, more-than:T or at-least:t1,...")


def _sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------- bounds

def _safe(func):
    def wrapped(x):
        try:
            return func(x)
        except DomainError:
            return None
    return wrapped


def _bound_funcs(name, args, delta):
    p, n = args.p, args.n
    table = {
        "xor_achievable": (lambda x: bounds.xor_achievable_rate(x, delta), ("p", "queries per element")),
        "miller": (lambda x: bounds.miller_rate(x, delta), ("p", "queries per element")),
        "gallager": (lambda x: bounds.gallager_lower_rate(x, delta), ("p", "queries per element")),
        "counting": (lambda x: bounds.counting_lower_rate(x, delta), ("p", "queries per element")),
        "trivial": (lambda x: bounds.trivial_lower_rate(delta), ("p", "queries per element")),
        "thm3": (lambda r: bounds.distortion_lower_thm3(r, p, delta), ("rate", "distortion")),
        "massey": (lambda r: bounds.massey_bound(r, p), ("rate", "distortion")),
        "and_formula": (lambda r: bounds.and_distortion_formula(n, int(round(r * n)), p), ("rate", "distortion")),
        "unconstrained": (lambda r: bounds.distortion_rate_unconstrained(r, p), ("rate", "distortion")),
    }
    return table[name]


def cmd_bounds(args):
    figure = args.figure
    names = args.bound or list(FIGURES[figure])
    unknown = [b for b in names if b not in FIGURES[figure]]
    if unknown:
        raise UsageError(f"bound(s) {unknown} not part of {figure}; choose from {FIGURES[figure]}")
    grid = parse_grid(args.grid or DEFAULT_GRID[figure])
    if args.delta is not None:
        deltas = list(_ints(args.delta, "delta"))
    else:
        deltas = [7, 10] if figure == "fig6" else [10]
    if any(d < 2 for d in deltas):
        raise UsageError("delta must be at least 2")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for delta in deltas:
        for name in names:
            func, units = _bound_funcs(name, args, delta)
            params = {"delta": delta}
            if figure == "fig2":
                params.update(p=args.p, n=args.n)
            curve = bounds.tabulate(name, _safe(func), grid, units, **params)
            suffix = f"_delta{delta}" if len(deltas) > 1 else ""
            path = out_dir / f"{figure}_{name}{suffix}.csv"
            csvio.write_curve(path, curve)
            written.append(str(path))
    for path in written:
        print(path)
    return 0


# ---------------------------------------------------------------- simulate

CONFIG_FIELDS = {f.name for f in dataclasses.fields(sim.ExperimentConfig)} - {"base_seed"}


def load_sim_config(path, seed):
    """(ExperimentConfig, sweep or None); the seed must come from the command line."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    raw = dict(raw)
    if "seed" in raw or "base_seed" in raw:
        raise ValidationError("the seed is set only by --seed, not in the config file")
    sweep_spec = raw.pop("sweep", None)
    unknown = sorted(set(raw) - CONFIG_FIELDS)
    if unknown:
        raise ValidationError(f"unknown config field(s) {unknown}")
    for key in ("scheme", "n"):
        if key not in raw:
            raise ValidationError(f"config needs {key!r}")
    try:
        config = sim.ExperimentConfig(base_seed=seed, **raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad config: {exc}") from None
    config.validate()
    if sweep_spec is not None:
        if not isinstance(sweep_spec, dict) or set(sweep_spec) != {"axis", "grid"}:
            raise ValidationError("sweep must be an object with 'axis' and 'grid'")
        if sweep_spec["axis"] not in sim.SWEEP_AXES:
            raise ValidationError(f"unknown sweep axis {sweep_spec['axis']!r}; choose from {sim.SWEEP_AXES}")
        grid = sweep_spec["grid"]
        if isinstance(grid, str):
            grid = parse_grid(grid)
        if not isinstance(grid, list):
            raise ValidationError("sweep grid must be a list or lo:hi:step string")
        for value in grid:
            sim.with_axis(config, sweep_spec["axis"], value).validate()
        sweep_spec = {"axis": sweep_spec["axis"], "grid": grid}
    return config, sweep_spec


def config_hash(config, sweep_spec):
    payload = {"config": config.semantic_dict(), "sweep": sweep_spec}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def cmd_simulate(args):
    config, sweep_spec = load_sim_config(args.config, args.seed)
    if sweep_spec is None:
        res = sim.run_experiment(config, workers=args.workers)
        rows = [sim.SweepRow(float("nan"), res.mean_distortion, res.std_error,
                             res.exact_recovery_rate, res.queries_used)]
        axis = "none"
    else:
        rows = sim.sweep(config, sweep_spec["axis"], sweep_spec["grid"], workers=args.workers)
        axis = sweep_spec["axis"]
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    header = [f"config_sha256: {config_hash(config, sweep_spec)}", f"seed: {args.seed}",
              f"axis: {axis}", f"trials: {config.trials}", f"generated: {stamp}"]
    _emit(csvio.write_sim_table(None, rows, header), args.out)
    return 0


# ---------------------------------------------------------------- exact

def cmd_exact(args):
    prior, _ = _prior_from_args(args)
    if not 0.0 <= args.q <= 1.0:
        raise ValidationError("q must lie in [0, 1]")
    if args.target_delta is not None:
        choice = bounds.queries_for_target_delta(prior, args.q, args.target_delta)
        if choice is None:
            raise DomainError(f"no degree reaches delta <= {args.target_delta} at q={args.q}")
        delta, _ = bounds.alg1_exact_error(prior, args.q, choice.d)
        lines = ["# target_delta: " + repr(args.target_delta), "d,queries_per_element,delta,vacuous",
                 f"{choice.d},{choice.rate!r},{delta!r},{int(choice.vacuous)}"]
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    if (args.d is None) == (args.d_grid is None):
        raise UsageError("give exactly one of --d, --d-grid or --target-delta")
    grid = [args.d] if args.d is not None else parse_grid(args.d_grid, integer=True)
    override = parse_threshold(args.threshold, prior.k)
    cols = ["d", "queries_per_element", "delta"] + [f"error_{i}" for i in range(prior.k)] + ["thresholds"]
    lines = [f"# prior: {','.join(repr(x) for x in prior.probs)}", f"# q: {args.q!r}",
             f"# threshold: {args.threshold}", ",".join(cols)]
    for d in grid:
        if d < 1:
            raise UsageError("degrees must be positive")
        delta, per = bounds.alg1_exact_error(prior, args.q, d, override)
        th = resolve_thresholds(prior, args.q, d, override)
        lines.append(",".join([str(d), repr(d / 2.0), repr(delta)] + [repr(e) for e in per]
                              + ['"' + ",".join(map(str, th)) + '"']))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------- pipeline

MANIFEST_VERSION = 1


def cmd_make_queries(args):
    ids, names, _ = csvio.read_dataset(args.dataset)
    n = len(ids)
    if args.d < 2 or args.d >= n:
        raise ValidationError(f"need 2 <= d < n={n}, got d={args.d}")
    graph = schemes.build_ring_regular_scheme(n, args.d, args.seed)
    sheet = Path(args.sheet)
    manifest_path = Path(args.manifest)
    answers = Path(args.answers) if args.answers else sheet.with_name(sheet.stem + "_answers.csv")
    paths = [Path(args.dataset).resolve(), sheet.resolve(), manifest_path.resolve(), answers.resolve()]
    if len(set(paths)) != len(paths):
        raise ValidationError("dataset, query sheet, manifest and answer paths must be distinct")
    csvio.write_query_sheet(sheet, graph, ids, names,
                            [f"n: {n}", f"d: {args.d}", f"seed: {args.seed}", "kind: kary_and"])
    base = manifest_path.resolve().parent

    def rel(path):
        return os.path.relpath(Path(path).resolve(), base)

    manifest = {
        "version": MANIFEST_VERSION,
        "scheme": "ring",
        "dataset": rel(args.dataset),
        "dataset_sha256": _sha256_file(args.dataset),
        "n": n,
        "d": args.d,
        "seed": args.seed,
        "query_sheet": rel(sheet),
        "answers": rel(answers),
        "m": graph.m,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(json.dumps({"queries": graph.m, "sheet": str(sheet), "manifest": str(manifest_path)}))
    return 0


def load_manifest(path):
    try:
        man = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read manifest {path}: {exc}") from None
    for key in ("dataset", "n", "d", "seed", "query_sheet", "answers"):
        if key not in man:
            raise ValidationError(f"manifest lacks {key!r}")
    if man.get("scheme", "ring") != "ring":
        raise ValidationError("only ring manifests are supported")
    # stored paths are relative to the manifest's directory
    base = Path(path).resolve().parent
    for key in ("dataset", "query_sheet", "answers"):
        man[key] = str(base / man[key])
    return man


def rebuild_graph(man):
    return schemes.build_ring_regular_scheme(int(man["n"]), int(man["d"]), int(man["seed"]))


def cmd_decode_answers(args):
    prior, sizes = _prior_from_args(args)
    override = parse_threshold(args.threshold, prior.k)
    man = load_manifest(args.manifest)
    n = int(man["n"])
    if sizes is not None and sum(sizes) != n:
        raise ValidationError(f"cluster sizes sum to {sum(sizes)}, expected n={n}")
    graph = rebuild_graph(man)
    ids = _dataset_ids(man)
    answers_path = args.answers or man["answers"]
    answers = csvio.read_answers(answers_path, graph.m, prior.k)
    report = decode_threshold_alg1(graph, answers, prior, args.q, override)
    used = resolve_thresholds(prior, args.q, int(man["d"]), override)
    counts = np.bincount(report.labels.labels, minlength=prior.k).tolist()
    summary = {"threshold_mode": args.threshold, "thresholds": list(used), "label_counts": counts, "n": n}
    header = [f"threshold_mode: {args.threshold}", f"thresholds: {','.join(map(str, used))}",
              f"label_counts: {','.join(map(str, counts))}"]
    _emit(csvio.write_labels(None, report.labels, ids, header), args.out)
    if args.report:
        csvio.write_report(args.report, report, ids, header)
    print(json.dumps(summary), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def _dataset_ids(man):
    try:
        ids, _, _ = csvio.read_dataset(man["dataset"])
    except QueryCodeError:
        return list(range(int(man["n"])))
    if "dataset_sha256" in man and _sha256_file(man["dataset"]) != man["dataset_sha256"]:
        raise ValidationError("dataset changed since the queries were generated")
    if len(ids) != int(man["n"]):
        raise ValidationError("dataset row count differs from the manifest")
    return ids


# ---------------------------------------------------------------- parser

def build_parser():
    parser = _Parser(prog="querycode", description="Query-based label recovery: bounds, simulation, pipeline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", help="tabulate bound curves as CSV")
    b.add_argument("--figure", choices=sorted(FIGURES), required=True)
    b.add_argument("--bound", action="append", help="restrict to this bound (repeatable)")
    b.add_argument("--delta", help="query size, or comma list (default 10; 7,10 for fig6)")
    b.add_argument("--p", type=float, default=0.5, help="P(label=1) for distortion curves")
    b.add_argument("--n", type=int, default=1000, help="population size for the AND formula")
    b.add_argument("--grid", help="abscissa grid lo:hi:step or a,b,c")
    b.add_argument("--out-dir", default=".")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    s.add_argument("config")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("exact", help="closed-form error of threshold decoding")
    e.add_argument("--prior")
    e.add_argument("--sizes")
    e.add_argument("--q", type=float, required=True)
    e.add_argument("--d", type=int)
    e.add_argument("--d-grid")
    e.add_argument("--threshold", default="formula")
    e.add_argument("--target-delta", type=float)
    e.add_argument("--out")
    e.set_defaults(func=cmd_exact)

    m = sub.add_parser("make-queries", help="build a ring query sheet for a dataset")
    m.add_argument("dataset")
    m.add_argument("--d", type=int, required=True)
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--sheet", required=True)
    m.add_argument("--manifest", required=True)
    m.add_argument("--answers", help="where answers are expected (recorded in the manifest)")
    m.set_defaults(func=cmd_make_queries)

    d = sub.add_parser("decode-answers", help="label a dataset from collected answers")
    d.add_argument("manifest")
    d.add_argument("--answers", help="answer file (default: path in the manifest)")
    d.add_argument("--prior")
    d.add_argument("--sizes")
    d.add_argument("--q", type=float, default=0.0)
    d.add_argument("--threshold", default="formula")
    d.add_argument("--out")
    d.add_argument("--report")
    d.set_defaults(func=cmd_decode_answers)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _error("usage", exc, 2)
        return 2
    except QueryCodeError as exc:
        _error(type(exc).__name__, exc, 1)
        return 1
    except ValueError as exc:
        _error("ValueError", exc, 1)
        return 1


def _error(kind, exc, code):
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit": code}) + "\n")


if __name__ == "__main__":
    sys.exit(main())

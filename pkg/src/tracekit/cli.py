"""
Command-line front end.

Subcommands: validate, metrics, compare, whatif, export-graph, search, package-entry.
JSON goes to stdout (``--format table`` for humans), logs go to stderr.

Exit codes:
    0  success
    1  validation or input failure
    2  internal error
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import polars as pl

from tracekit.card.peaks import load_peaks
from tracekit.card.schema import load_card
from tracekit.card.validation import validate_submission
from tracekit.config import DEFAULT_MAX_UNSIZED_FRACTION, log_level
from tracekit.entry import package_entry, verify_entry
from tracekit.errors import SearchConfigError, TracekitError
from tracekit.metrics import MetricContext, MetricOptions, load_profile, run_suite
from tracekit.metrics.base import Direction
from tracekit.search import (
    Composite,
    MinimizeMetric,
    get_executor,
    get_proposer,
    load_objective,
    load_space,
    run_search,
)
from tracekit.sim import NetworkConfig, Resource, build_graph, export_graph, whatif
from tracekit.trace.loader import load_trace
from tracekit.trace.patterns import load_patterns
from tracekit.utils.time import ns_to_seconds, str_to_ns

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class InputFailure(Exception):
    """Refusal with an explanation; exits with status 1."""


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_json(data) -> None:
    _emit(json.dumps(data, indent=2, sort_keys=True))


def _emit_table(rows: list[dict]) -> None:
    if not rows:
        _emit("(empty)")
        return
    flat = [{k: (json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v) for k, v in r.items()}
            for r in rows]
    df = pl.DataFrame(flat, infer_schema_length=None)
    with pl.Config(
        tbl_rows=-1,
        tbl_cols=-1,
        tbl_hide_dataframe_shape=True,
        tbl_hide_column_data_types=True,
        fmt_str_lengths=120,
    ):
        _emit(str(df))


def _load_evidence(args):
    card = load_card(args.card)
    patterns = load_patterns(args.patterns) if args.patterns else None
    trace = load_trace(
        args.traces,
        dialect=args.dialect,
        patterns=patterns,
        phase=card.phase,
        first_is_prefill=card.first_step_is_prefill,
        workers=args.workers,
    )
    return card, trace


def cmd_validate(args) -> int:
    card, trace = _load_evidence(args)
    report = validate_submission(card, trace, relaxed=args.relaxed)
    if args.format == "table":
        _emit_table([{**vars(f), "severity": str(f.severity)} for f in report.findings])
    else:
        _emit(report.to_json())
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_metrics(args) -> int:
    card, trace = _load_evidence(args)
    ctx = MetricContext(
        peaks=load_peaks(args.peaks) if args.peaks else None,
        patterns=load_patterns(args.patterns) if args.patterns else None,
        options=MetricOptions(drop_edge_steps=args.drop_edge_steps),
    )
    only = [k.strip() for k in args.only.split(",") if k.strip()] if args.only else None
    profile = run_suite(card, trace, ctx=ctx, only=only)
    if args.out:
        Path(args.out).write_text(profile.to_json())
    if args.format == "table":
        _emit_table([{"key": e.key, "value": e.value, "unit": e.unit} for e in profile.entries])
        _emit_table([{"key": s.key, "reason": s.reason} for s in profile.skipped])
    else:
        _emit(profile.to_json())
    return EXIT_OK


def _verdict(direction: Direction, delta: float) -> str:
    if delta == 0:
        return "same"
    better = delta > 0 if direction == Direction.HIGHER_BETTER else delta < 0
    return "better" if better else "worse"


def _read_profile(path: str):
    try:
        return load_profile(path)
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise InputFailure(f"{path} is not a performance profile: {type(e).__name__}: {e}") from e


def compare_profiles(paths: list[str]) -> dict:
    """Metric rows aligned by key; deltas are relative to the first profile."""
    profiles = [_read_profile(p) for p in paths]
    keys: list[str] = []
    for profile in profiles:
        for entry in profile.entries:
            if entry.key not in keys:
                keys.append(entry.key)
    reference = profiles[0]
    rows = []
    for key in keys:
        results = [p.get(key) for p in profiles]
        known = next(r for r in results if r is not None)
        row = {
            "key": key,
            "unit": known.unit,
            "direction": str(known.direction),
            "values": [None if r is None else r.value for r in results],
            "missing_in": [paths[i] for i, r in enumerate(results) if r is None],
            "deltas": [],
        }
        ref = reference.get(key)
        for path, result in zip(paths[1:], results[1:]):
            if ref is None or result is None:
                row["deltas"].append({"profile": path, "delta": None, "delta_pct": None, "verdict": "missing"})
                continue
            delta = result.value - ref.value
            row["deltas"].append(
                {
                    "profile": path,
                    "delta": delta,
                    "delta_pct": delta / ref.value * 100 if ref.value else None,
                    "verdict": _verdict(known.direction, delta),
                }
            )
        rows.append(row)
    return {"reference": paths[0], "profiles": list(paths), "rows": rows}


def cmd_compare(args) -> int:
    if len(args.profiles) < 2:
        raise InputFailure("compare needs at least two profiles")
    result = compare_profiles(args.profiles)
    if args.format == "table":
        table = []
        for row in result["rows"]:
            line = {"key": row["key"], "unit": row["unit"]}
            for i, value in enumerate(row["values"]):
                line[f"p{i}"] = value
            for i, d in enumerate(row["deltas"], start=1):
                line[f"delta_pct_p{i}"] = d["delta_pct"]
                line[f"verdict_p{i}"] = d["verdict"]
            table.append(line)
        _emit_table(table)
    else:
        _emit_json(result)
    return EXIT_OK


def _duration(value: str) -> float:
    """Seconds from a duration such as '5us' or '1.5ms'."""
    try:
        return ns_to_seconds(str_to_ns(value))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _network(args, card) -> NetworkConfig:
    overrides = {
        "scale_up_bandwidth": args.scale_up_bw,
        "scale_out_bandwidth": args.scale_out_bw,
        "scale_up_domain_size": args.domain_size,
        "scale_up_latency": args.scale_up_latency,
        "scale_out_latency": args.scale_out_latency,
    }
    if args.net:
        base = NetworkConfig.from_json(args.net).to_dict()
        base.update({k: v for k, v in overrides.items() if v is not None})
        return NetworkConfig(**base)
    try:
        return NetworkConfig.from_card(card, **overrides)
    except ValueError as e:
        raise InputFailure(str(e)) from e


def _graph(args):
    card, trace = _load_evidence(args)
    graph = build_graph(trace, card, step=args.step)
    if graph.unsized_fraction > args.max_unsized:
        raise InputFailure(
            f"{graph.unsized_collectives} of {graph.collectives} collectives carry no message size "
            f"({graph.unsized_fraction:.1%} > {args.max_unsized:.1%}); modeled replay would be meaningless"
        )
    return card, graph


def cmd_whatif(args) -> int:
    card, graph = _graph(args)
    net = _network(args, card)
    resources = [Resource(r) for r in args.resources] if args.resources else list(Resource)
    results = whatif(graph, net, resources)
    if args.format == "table":
        _emit_table([r.to_dict() for r in results])
    else:
        _emit_json({"network": net.to_dict(), "step": args.step, "results": [r.to_dict() for r in results]})
    return EXIT_OK


def cmd_export_graph(args) -> int:
    _, graph = _graph(args)
    document = export_graph(graph)
    if args.out:
        Path(args.out).write_text(document)
    else:
        _emit(document)
    return EXIT_OK


def _search_parts(args):
    space = load_space(args.space)
    if args.objective:
        objective = load_objective(args.objective)
    else:
        objective = MinimizeMetric(args.minimize)
    if args.budget < 1:
        raise SearchConfigError(f"search budget must be >= 1, got {args.budget}")
    if args.proposer == "external":
        if not args.proposer_cmd:
            raise SearchConfigError("--proposer external needs --proposer-cmd")
        proposer = get_proposer("external", cmd=args.proposer_cmd)
    elif args.proposer == "hillclimb":
        proposer = get_proposer("hillclimb", seed=args.seed, random_start=args.random_start)
    else:
        proposer = get_proposer(args.proposer, seed=args.seed)
    if args.executor == "table":
        if not args.table:
            raise SearchConfigError("--executor table needs --table")
        executor = get_executor("table", path=args.table)
    else:
        if not (args.graph and args.net):
            raise SearchConfigError("--executor sim needs --graph and --net")
        executor = get_executor("sim", graph=args.graph, net=args.net)
    return space, objective, proposer, executor


def cmd_search(args) -> int:
    try:
        space, objective, proposer, executor = _search_parts(args)
    except (ValueError, OSError) as e:
        raise SearchConfigError(str(e)) from e
    history = run_search(
        space,
        objective,
        proposer,
        executor,
        args.budget,
        history_path=args.history,
        record_timing=args.record_timing,
        entries_dir=args.entries,
    )
    best = history.best()
    summary = {
        "objective": objective.to_dict(),
        "budget": args.budget,
        "succeeded": len(history.succeeded()),
        "failed": len(history) - len(history.succeeded()),
        "best": None if best is None else best.to_dict(),
        "running_best": history.running_best(),
        "history": args.history,
    }
    if isinstance(objective, Composite):
        summary["pareto"] = [t.to_dict() for t in history.pareto()]
    if args.format == "table":
        _emit_table(
            [
                {**t.config, "status": t.status, "step_time": t.metrics.get("avg_step_time"), "score": t.score,
                 "failure": t.failure}
                for t in history
            ]
        )
        if best is not None:
            _emit(f"best: iteration {best.iteration} {best.config} score {best.score}")
    else:
        summary["trials"] = history.to_dicts()
        _emit_json(summary)
    return EXIT_OK


def cmd_package_entry(args) -> int:
    if args.verify:
        problems = verify_entry(args.verify)
        _emit_json({"manifest": args.verify, "ok": not problems, "problems": problems})
        return EXIT_OK if not problems else EXIT_INPUT
    if not args.card or not args.trace:
        raise InputFailure("package-entry needs --card and at least one --trace (or --verify MANIFEST)")
    entry = package_entry(args.card, args.trace, args.script or [], profile=args.profile, manifest=args.out)
    _emit(entry.to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "table"], default="json")
    common.add_argument("--patterns", help="classification pattern JSON overriding the defaults")
    common.add_argument("--peaks", help="peak FLOP/s YAML overriding the defaults")
    common.add_argument("--relaxed", action="store_true", help="downgrade step-count rules to warnings")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--log-level", default=None)

    evidence = argparse.ArgumentParser(add_help=False)
    evidence.add_argument("--card", required=True)
    evidence.add_argument("traces", nargs="+")
    evidence.add_argument("--dialect", default="auto")
    evidence.add_argument("--workers", type=int, default=1)

    graph = argparse.ArgumentParser(add_help=False)
    graph.add_argument("--step", type=int, default=0, help="inner step to convert")
    graph.add_argument("--max-unsized", type=float, default=DEFAULT_MAX_UNSIZED_FRACTION)

    parser = argparse.ArgumentParser(prog="tracekit", description="Trace evidence toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common, evidence])
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("metrics", parents=[common, evidence])
    p.add_argument("--only", help="comma-separated metric keys")
    p.add_argument("--drop-edge-steps", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("compare", parents=[common])
    p.add_argument("profiles", nargs="+")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("whatif", parents=[common, evidence, graph])
    p.add_argument("--net", help="NetworkConfig JSON")
    p.add_argument("--scale-up-bw", type=float, help="GB/s")
    p.add_argument("--scale-out-bw", type=float, help="GB/s")
    p.add_argument("--domain-size", type=int)
    p.add_argument("--scale-up-latency", type=_duration, help="per-message latency, e.g. 2us")
    p.add_argument("--scale-out-latency", type=_duration, help="per-message latency, e.g. 10us")
    p.add_argument("--resources", nargs="*", choices=[str(r) for r in Resource])
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("export-graph", parents=[common, evidence, graph])
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_graph)

    p = sub.add_parser("search", parents=[common])
    p.add_argument("--space", required=True)
    p.add_argument("--objective", help="objective YAML/JSON")
    p.add_argument("--minimize", default="avg_step_time")
    p.add_argument("--proposer", default="hillclimb", choices=["random", "grid", "hillclimb", "external"])
    p.add_argument("--proposer-cmd")
    p.add_argument("--random-start", action="store_true")
    p.add_argument("--executor", default="table", choices=["table", "sim"])
    p.add_argument("--table")
    p.add_argument("--graph")
    p.add_argument("--net")
    p.add_argument("--budget", type=int, default=15)
    p.add_argument("--history", help="JSONL trial log")
    p.add_argument("--entries", help="directory receiving one profile per succeeded trial")
    p.add_argument("--record-timing", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("package-entry", parents=[common])
    p.add_argument("--card")
    p.add_argument("--trace", action="append")
    p.add_argument("--script", action="append")
    p.add_argument("--profile")
    p.add_argument("--out", default="entry.json")
    p.add_argument("--verify", metavar="MANIFEST")
    p.set_defaults(func=cmd_package_entry)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or log_level()).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (InputFailure, TracekitError, OSError, ValueError) as e:
        logger.error("%s", e)
        print(f"tracekit {args.command}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        logger.exception("Internal error in %s", args.command)
        return EXIT_INTERNAL

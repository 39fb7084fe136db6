"""Command-line surface tying ingestion, analysis, simulation and fitting
into reproducible runs.

Every stochastic command requires an explicit --seed; outputs are written
atomically, and --emit-manifest records the config, package version and
input digests next to each result.  Exit codes: 0 success, 1 usage error,
2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    composite_split_trajectory,
    heaps_fit,
    monthly_trajectory,
    stratified_trajectory,
)
from .estimate import fit_report, trace_from_corpus
from .ingest import (
    CanonicalFormatError,
    DumpFormatError,
    SkipLog,
    parse_posts_stream,
    read_canonical,
    sort_records_by_month,
    write_canonical,
)
from .reports import (
    atomic_write,
    execution_manifest,
    write_heaps_csv,
    write_json,
    write_snapshots_csv,
    write_sweep_csv,
)
from .simulate import PROPORTIONAL, SOFTMAX, ModelParams, simulate, sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1, not argparse's 2
        raise UsageError(message)


def _add_io(parser: argparse.ArgumentParser, need_input: bool = True) -> None:
    if need_input:
        parser.add_argument("--input", required=True, help="input file path")
    parser.add_argument("--output", required=True, help="output file path")
    parser.add_argument(
        "--emit-manifest",
        action="store_true",
        help="write a <output>.run.json manifest with config and input digests",
    )


def _add_model_flags(parser: argparse.ArgumentParser, with_pq: bool) -> None:
    if with_pq:
        parser.add_argument("--p", type=float, required=True, help="resource reinforcement probability")
        parser.add_argument("--q", type=float, required=True, help="tag reinforcement probability")
    parser.add_argument(
        "--selection",
        choices=[PROPORTIONAL, SOFTMAX],
        default=PROPORTIONAL,
        help="tag selection kernel",
    )
    parser.add_argument("--d", type=float, default=None, help="diversity factor for softmax selection")
    parser.add_argument("--users", type=int, default=4000, help="number of simulated users")
    parser.add_argument("--tag-n", type=int, default=5, help="binomial n of the tags-per-question draw")
    parser.add_argument("--tag-p", type=float, default=0.6, help="binomial p of the tags-per-question draw")
    parser.add_argument("--seed-resources", type=int, default=1, help="initial resource urn size")
    parser.add_argument("--seed-tags", type=int, default=1, help="initial tag urn size")
    parser.add_argument("--seed", type=int, required=True, help="RNG seed (required: runs must be reproducible)")


def build_parser() -> _Parser:
    parser = _Parser(prog="tagmetrics", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="convert a posts dump to the canonical corpus format")
    _add_io(p_ingest)
    p_ingest.add_argument("--skip-report", default=None, help="path for the line/reason skip report")

    p_analyze = sub.add_parser("analyze", help="monthly efficiency metrics of a canonical corpus")
    _add_io(p_analyze)

    p_strat = sub.add_parser("stratify", help="metrics restricted to questions with at most N tags")
    _add_io(p_strat)
    p_strat.add_argument("--max-tags", type=int, required=True, help="tag-count ceiling, 1..5")

    p_comp = sub.add_parser("composite", help="metrics split by composite-tag usage")
    _add_io(p_comp)

    p_heaps = sub.add_parser("heaps", help="distinct-tag growth exponent fit")
    _add_io(p_heaps)
    p_heaps.add_argument("--head-fraction", type=float, default=0.1, help="fraction of assignments fitted")

    p_sim = sub.add_parser("simulate", help="run the growth model and emit its trajectory")
    _add_io(p_sim, need_input=False)
    _add_model_flags(p_sim, with_pq=True)
    p_sim.add_argument("--snapshot-every", type=int, default=50, help="users between snapshots")

    p_sweep = sub.add_parser("sweep", help="grid of tail slopes over (p, q)")
    _add_io(p_sweep, need_input=False)
    _add_model_flags(p_sweep, with_pq=False)
    p_sweep.add_argument("--grid", type=int, default=11, help="grid resolution per axis")
    p_sweep.add_argument("--replicates", type=int, default=3, help="simulations per cell")
    p_sweep.add_argument("--window", type=int, default=1000, help="tail window in users")
    p_sweep.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")

    p_fit = sub.add_parser("fit", help="estimate model parameters from a canonical corpus")
    _add_io(p_fit)
    p_fit.add_argument("--d-min", type=float, default=0.01, help="lower bound of the diversity search")
    p_fit.add_argument("--d-max", type=float, default=100.0, help="upper bound of the diversity search")

    return parser


def _model_params(args: argparse.Namespace, p: float | None = None, q: float | None = None) -> ModelParams:
    return ModelParams(
        p=args.p if p is None else p,
        q=args.q if q is None else q,
        selection=args.selection,
        d=args.d,
        tag_count_n=args.tag_n,
        tag_count_p=args.tag_p,
        seed_resources=args.seed_resources,
        seed_tags=args.seed_tags,
    )


def _maybe_manifest(args: argparse.Namespace, inputs: list[str], outputs: list[str]) -> None:
    if not getattr(args, "emit_manifest", False):
        return
    config = {
        k: v for k, v in vars(args).items() if k not in ("command", "emit_manifest") and v is not None
    }
    manifest = execution_manifest(args.command, config, inputs, outputs)
    with atomic_write(f"{args.output}.run.json") as sink:
        write_json(manifest, sink)


def _cmd_ingest(args: argparse.Namespace) -> int:
    skip_sink = None
    try:
        if args.skip_report:
            skip_sink = open(args.skip_report + ".tmp", "w", encoding="utf-8")
        skip_log = SkipLog(skip_sink)
        with open(args.input, "rb") as source:
            records = sort_records_by_month(parse_posts_stream(source, skip_log))
            with atomic_write(args.output) as sink:
                manifest = write_canonical(records, sink)
    finally:
        if skip_sink is not None:
            skip_sink.close()
    if args.skip_report:
        import os

        os.replace(args.skip_report + ".tmp", args.skip_report)
    with atomic_write(f"{args.output}.manifest.json") as sink:
        write_json(manifest.to_dict(), sink)
    print(
        f"ingested {manifest.record_count} questions, "
        f"{manifest.distinct_tags} distinct tags, skipped {skip_log.total} rows"
    )
    _maybe_manifest(args, [args.input], [args.output, f"{args.output}.manifest.json"])
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as source:
        snapshots = monthly_trajectory(read_canonical(source))
    with atomic_write(args.output) as sink:
        write_snapshots_csv(snapshots, sink)
    print(f"wrote {len(snapshots)} monthly snapshots to {args.output}")
    _maybe_manifest(args, [args.input], [args.output])
    return EXIT_OK


def _cmd_stratify(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as source:
        snapshots = stratified_trajectory(read_canonical(source), args.max_tags)
    with atomic_write(args.output) as sink:
        write_snapshots_csv(snapshots, sink)
    print(f"wrote {len(snapshots)} snapshots (max_tags={args.max_tags}) to {args.output}")
    _maybe_manifest(args, [args.input], [args.output])
    return EXIT_OK


def _composite_paths(output: str) -> tuple[str, str]:
    path = Path(output)
    return (
        str(path.with_name(f"{path.stem}.composite{path.suffix}")),
        str(path.with_name(f"{path.stem}.simple{path.suffix}")),
    )


def _cmd_composite(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as source:
        with_composite, without = composite_split_trajectory(read_canonical(source))
    composite_path, simple_path = _composite_paths(args.output)
    with atomic_write(composite_path) as sink:
        write_snapshots_csv(with_composite, sink)
    with atomic_write(simple_path) as sink:
        write_snapshots_csv(without, sink)
    print(
        f"wrote {len(with_composite)} composite-side and {len(without)} simple-side "
        f"snapshots to {composite_path} / {simple_path}"
    )
    _maybe_manifest(args, [args.input], [composite_path, simple_path])
    return EXIT_OK


def _cmd_heaps(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as source:
        fit = heaps_fit(read_canonical(source), head_fraction=args.head_fraction)
    with atomic_write(args.output) as sink:
        write_heaps_csv(fit, sink)
    print(f"beta={fit.beta:.6g} k={fit.k:.6g} r_squared={fit.r_squared:.6g}")
    _maybe_manifest(args, [args.input], [args.output])
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    params = _model_params(args)
    snapshots = simulate(params, args.users, args.snapshot_every, args.seed)
    with atomic_write(args.output) as sink:
        write_snapshots_csv(snapshots, sink, include_users=True)
    print(f"simulated {args.users} users, wrote {len(snapshots)} snapshots to {args.output}")
    _maybe_manifest(args, [], [args.output])
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    base = _model_params(args, p=0.0, q=0.0)
    result = sweep(
        grid_resolution=args.grid,
        base_params=base,
        users=args.users,
        window=args.window,
        replicates=args.replicates,
        seed=args.seed,
        threads=args.threads,
    )
    with atomic_write(args.output) as sink:
        write_sweep_csv(result, sink)
    print(f"swept {args.grid}x{args.grid} grid, wrote {args.output}")
    _maybe_manifest(args, [], [args.output])
    return EXIT_OK


def _cmd_fit(args: argparse.Namespace) -> int:
    with open(args.input, encoding="utf-8") as source:
        trace = trace_from_corpus(read_canonical(source))
    if trace.n_resource_events == 0:
        raise CanonicalFormatError("corpus is empty, nothing to fit")
    report = fit_report(trace, search_interval=(args.d_min, args.d_max))
    with atomic_write(args.output) as sink:
        write_json(report, sink)
    print(
        f"p_hat={report['p_hat']:.4f} q_hat={report['q_hat']:.4f} "
        f"d_hat={report['d_hat']} flag={report['d_flag']}"
    )
    _maybe_manifest(args, [args.input], [args.output])
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "analyze": _cmd_analyze,
    "stratify": _cmd_stratify,
    "composite": _cmd_composite,
    "heaps": _cmd_heaps,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "fit": _cmd_fit,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, CanonicalFormatError, DumpFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

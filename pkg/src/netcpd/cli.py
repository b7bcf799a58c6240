"""Command-line interface: generate corpora, detect changes, evaluate, benchmark.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.  The
``NETCPD_SEED`` environment variable supplies the default seed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from .chains import WindowConfig
from .detector import (
    DetectorConfig,
    run_pipeline,
    write_flagged,
    write_manifest,
    write_scores,
)
from .evaluate import bench_scaling, run_benchmark_scenario, write_plot_data, write_report
from .generate import ModelSchedule, benchmark_schedule, iter_sequence
from .models import BTER, ChungLu, ErdosRenyi, StochasticBlockModel
from .streams import IngestError, ingest_snapshots, write_corpus

__all__ = ["main", "build_parser"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _default_seed() -> int:
    return int(os.environ.get("NETCPD_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netcpd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic snapshot corpus")
    gen.add_argument("--model", choices=["er", "cl", "sbm", "sbm-cl", "bter"], default="sbm-cl")
    gen.add_argument("--schedule", choices=["none", "benchmark"], default="none",
                     help="benchmark: the seven-change block-weights scenario")
    gen.add_argument("--n", type=int, required=True, help="node count")
    gen.add_argument("--t", type=int, required=True, help="snapshot count")
    gen.add_argument("--alpha", type=float, default=0.49, help="per-step resampling rate")
    gen.add_argument("--p", type=float, default=0.1, help="edge probability (er)")
    gen.add_argument("--p-in", type=float, default=0.3, help="intra-community rate (sbm, sbm-cl)")
    gen.add_argument("--p-out", type=float, default=0.05, help="inter-community rate (sbm, sbm-cl)")
    gen.add_argument("--p-intra", type=float, default=0.3, help="intra-community rate (bter)")
    gen.add_argument("--beta", type=float, default=1.0, help="edge density (cl, bter)")
    gen.add_argument("--communities", type=int, default=10)
    gen.add_argument("--weight-low", type=float, default=0.2)
    gen.add_argument("--weight-high", type=float, default=1.8)
    gen.add_argument("--window-size", "--s", dest="window_size", type=int, default=20,
                     help="window size used to place benchmark changes")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", required=True, help="corpus output directory")

    det = sub.add_parser("detect", help="run change-point detection on a snapshot stream")
    det.add_argument("--in", dest="input", required=True, help="corpus directory or edge-list file")
    det.add_argument("--out", default="netcpd-detect", help="result directory")
    det.add_argument("--estimator", choices=["frequency", "mle"], default="frequency")
    det.add_argument("--measure", choices=["kl", "ks", "euclidean", "euclidean-grouped"],
                     default="kl")
    det.add_argument("--window-size", "--s", dest="window_size", type=int, default=None,
                     help="snapshots per window (default 20)")
    det.add_argument("--step", type=int, default=None, help="window step (default window size)")
    det.add_argument("--k", type=int, default=250, help="tracked dyads")
    det.add_argument("--groups", "--g", dest="groups", type=int, default=25)
    det.add_argument("--quantile", type=float, default=0.05, help="upper-quantile significance")
    det.add_argument("--strategy", choices=["uniform-dyads", "observed-dyads"],
                     default="uniform-dyads")
    det.add_argument("--ks-samples", type=int, default=100_000)
    det.add_argument("--bootstrap", type=int, default=0, help="threshold bootstrap resamples")
    det.add_argument("--weight-exponent", type=float, default=math.inf)
    det.add_argument("--kl-direction", choices=["prev-curr", "curr-prev"], default="prev-curr")
    det.add_argument("--window-column", action="store_true",
                     help="input has an explicit window-key column")
    det.add_argument("--node-map", default=None,
                     help="file of node labels (one per line) for single-pass ingestion")
    det.add_argument("--workers", type=int, default=1)
    det.add_argument("--seed", type=int, default=None)

    ev = sub.add_parser("eval", help="run evaluation scenarios")
    ev.add_argument("--scenario", choices=["benchmark"], default="benchmark")
    ev.add_argument("--seeds", type=int, default=5, help="number of seeds (0 .. seeds-1)")
    ev.add_argument("--n", type=int, default=1000)
    ev.add_argument("--t", type=int, default=3000)
    ev.add_argument("--window-size", "--s", dest="window_size", type=int, default=20)
    ev.add_argument("--alpha", type=float, default=0.49)
    ev.add_argument("--k", type=int, default=250)
    ev.add_argument("--groups", "--g", dest="groups", type=int, default=25)
    ev.add_argument("--quantile", type=float, default=0.05)
    ev.add_argument("--ks-samples", type=int, default=20_000)
    ev.add_argument("--tolerance", type=int, default=1)
    ev.add_argument("--out", default=None, help="report directory")

    bench = sub.add_parser("bench", help="time/memory scaling benchmarks")
    bench.add_argument("--n", default="1000,10000", help="comma-separated node counts")
    bench.add_argument("--t", default="1250,2500,5000", help="comma-separated snapshot counts")
    bench.add_argument("--k", type=int, default=250)
    bench.add_argument("--edge-target", type=float, default=3000.0,
                       help="expected edges per snapshot, held constant across n")
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--out", default=None, help="write the timing table here")
    return parser


def _build_model(args, rng: np.random.Generator):
    n = args.n
    weights = rng.uniform(args.weight_low, args.weight_high, size=n)
    communities = rng.permutation(np.arange(n, dtype=np.int64) % args.communities)
    if args.model == "er":
        return ErdosRenyi(args.p)
    if args.model == "cl":
        return ChungLu(weights, args.beta)
    if args.model == "sbm":
        rates = np.full((args.communities, args.communities), args.p_out)
        np.fill_diagonal(rates, args.p_in)
        return StochasticBlockModel(communities, rates)
    if args.model == "sbm-cl":
        from .models import BlockChungLu

        rates = np.full((args.communities, args.communities), args.p_out)
        np.fill_diagonal(rates, args.p_in)
        return BlockChungLu(communities, rates, weights)
    if args.model == "bter":
        return BTER(communities, args.p_intra, weights, args.beta)
    raise _UsageError(f"unknown model {args.model!r}")


def _cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.schedule == "benchmark":
        if args.model != "sbm-cl":
            raise _UsageError("the benchmark schedule requires --model sbm-cl")
        schedule = benchmark_schedule(args.n, args.window_size, args.alpha, seed,
                                      n_communities=args.communities)
    else:
        model_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9,)))
        schedule = ModelSchedule(initial=_build_model(args, model_rng), alpha=args.alpha)
    meta = {
        "n_nodes": args.n,
        "length": args.t,
        "seed": seed,
        "alpha": args.alpha,
        "model": args.model,
        "schedule": args.schedule,
    }
    write_corpus(
        args.out,
        iter_sequence(schedule, args.n, args.t, seed),
        meta,
        change_points=sorted(schedule.change_points()),
    )
    print(f"wrote corpus to {args.out} ({args.t} snapshots, {args.n} nodes)")
    return 0


def _cmd_detect(args) -> int:
    if args.window_column and args.window_size is not None:
        raise _UsageError("--window-column and --window-size are mutually exclusive")
    window_size = args.window_size if args.window_size is not None else 20
    seed = args.seed if args.seed is not None else _default_seed()
    node_map = None
    if args.node_map:
        with open(args.node_map, encoding="utf-8") as fh:
            node_map = [int(line) for line in fh if line.strip()]
    config = DetectorConfig(
        window=WindowConfig(window_size, args.step),
        tracked_dyads=args.k,
        strategy=args.strategy,
        estimator=args.estimator,
        measure=args.measure,
        groups=args.groups,
        significance=args.quantile,
        weight_exponent=args.weight_exponent,
        ks_samples=args.ks_samples,
        threshold_resamples=args.bootstrap,
        kl_direction=args.kl_direction,
        grouping="by-key" if args.window_column else "fixed",
        workers=args.workers,
        seed=seed,
    )
    source = ingest_snapshots(args.input, window_column=args.window_column, node_map=node_map)
    result = run_pipeline(source, config, measure_memory=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_scores(out / "scores.tsv", result)
    write_flagged(out / "flagged.txt", result)
    write_manifest(out / "manifest.txt", result, extra={"input": args.input})
    for idx in result.flagged:
        print(idx)
    return 0


def _cmd_eval(args) -> int:
    report = run_benchmark_scenario(
        seeds=range(args.seeds),
        n_nodes=args.n,
        length=args.t,
        window_size=args.window_size,
        alpha=args.alpha,
        tracked_dyads=args.k,
        groups=args.groups,
        significance=args.quantile,
        ks_samples=args.ks_samples,
        tolerance=args.tolerance,
    )
    print("estimator+measure\tmean_precision\tmean_recall")
    for estimator, measure in [(v.estimator, v.measure) for v in report.seeds[0].variants]:
        precision = report.mean_metric(estimator, measure, "precision")
        recall = report.mean_metric(estimator, measure, "recall")
        print(f"{estimator}+{measure}\t{precision:.4f}\t{recall:.4f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report(out / "report.tsv", report)
        write_plot_data(out / "plot-data.tsv", report.seeds[0])
        print(f"wrote report to {out}")
    return 0


def _cmd_bench(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    n_list = [int(x) for x in args.n.split(",") if x]
    t_list = [int(x) for x in args.t.split(",") if x]
    cells = bench_scaling(n_list, t_list, tracked_dyads=args.k,
                          edge_target=args.edge_target, seed=seed)
    lines = ["n_nodes\tsnapshots\twindows\twall_seconds\tpeak_memory_bytes"]
    lines += [
        f"{c.n_nodes}\t{c.length}\t{c.n_windows}\t{c.wall_seconds:.3f}\t{c.peak_memory}"
        for c in cells
    ]
    table = "\n".join(lines)
    print(table)
    if args.out:
        Path(args.out).write_text(table + "\n", encoding="utf-8")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "detect": _cmd_detect,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (IngestError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

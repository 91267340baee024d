"""Command-line surface: audit, filter, filter-one, eval, inspect, simulate, sum-sims.

Every command writes a ReportEnvelope JSON (or prints, for inspect) and
returns exit code 0 only when its outputs were completely written. Data
errors exit 1 with a diagnostic on stderr; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

from framebias import __version__
from framebias.audit import (
    class_stats,
    discrepancy_table,
    global_length_summary,
    histogram_csv,
    length_histogram,
)
from framebias.dataset import ActionClass, load_annotations, to_native_csv
from framebias.errors import FrameBiasError
from framebias.filtering import FilterConfig, filter_margin, filter_single_class, sum_similarity_matrices
from framebias.matrices import load_matrix, save_matrix
from framebias.metrics import inspect_query, metrics_report
from framebias.reports import (
    action_class_dict,
    build_envelope,
    class_stats_dict,
    filter_report_dict,
    histogram_dict,
    metrics_report_dict,
    sweep_row_dict,
    write_report,
)
from framebias.simulate import SimConfig, bias_sweep


def _parse_class(text: str) -> ActionClass:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected verb,noun class pair, got {text!r}")
    try:
        return ActionClass(int(parts[0]), int(parts[1]))
    except ValueError:
        raise ValueError(f"class components must be integers, got {text!r}") from None


def _parse_list(text: str, cast):
    try:
        return [cast(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise ValueError(f"expected comma-separated list, got {text!r}") from None


def _load(args):
    paths = args.annotations if len(args.annotations) > 1 else args.annotations[0]
    return load_annotations(paths, args.format)


def _annotation_args(sub) -> None:
    sub.add_argument(
        "--annotations",
        nargs="+",
        required=True,
        metavar="PATH",
        help="annotation file (native) or train+test pair (ek100_pair)",
    )
    sub.add_argument("--format", choices=("native", "ek100_pair"), default="native")


def cmd_audit(args) -> int:
    dataset = _load(args)
    selected = _parse_class(args.cls) if args.cls else None
    hist = length_histogram(dataset, selected, args.bin_width)
    train_mean, test_mean, train_count, test_count = global_length_summary(dataset)
    payload = {
        "num_clips": len(dataset),
        "num_classes": len(dataset.classes()),
        "global": {
            "train_mean_len": train_mean,
            "test_mean_len": test_mean,
            "train_count": train_count,
            "test_count": test_count,
        },
        "class_stats": [class_stats_dict(s) for s in class_stats(dataset)],
        "discrepancy_table": [class_stats_dict(s) for s in discrepancy_table(dataset)],
        "histogram": histogram_dict(hist, selected),
    }
    if args.hist_out:
        Path(args.hist_out).write_text(histogram_csv(hist), encoding="utf-8")
    config = {
        "annotations": args.annotations,
        "format": args.format,
        "class": args.cls,
        "bin_width": args.bin_width,
        "out": args.out,
        "hist_out": args.hist_out,
    }
    write_report(args.out, build_envelope("audit", config, payload))
    return 0


def cmd_filter(args) -> int:
    dataset = _load(args)
    filtered, report = filter_margin(
        dataset, FilterConfig(alpha=args.alpha, min_class_size=args.min_class_size)
    )
    Path(args.out).write_text(to_native_csv(filtered), encoding="utf-8")
    payload = {
        "filter": {"kind": "margin", "alpha": args.alpha, "min_class_size": args.min_class_size},
        **filter_report_dict(report),
    }
    config = {
        "annotations": args.annotations,
        "format": args.format,
        "alpha": args.alpha,
        "min_class_size": args.min_class_size,
        "out": args.out,
        "report": args.report,
    }
    write_report(args.report, build_envelope("filter", config, payload))
    return 0


def cmd_filter_one(args) -> int:
    dataset = _load(args)
    action_class = ActionClass(args.verb, args.noun)
    mode = "remove_long" if args.mode == "long" else "remove_short"
    filtered, report = filter_single_class(dataset, action_class, mode, args.fraction)
    Path(args.out).write_text(to_native_csv(filtered), encoding="utf-8")
    payload = {
        "filter": {
            "kind": "single_class",
            "action_class": action_class_dict(action_class),
            "mode": mode,
            "fraction": args.fraction,
        },
        **filter_report_dict(report),
    }
    config = {
        "annotations": args.annotations,
        "format": args.format,
        "verb": args.verb,
        "noun": args.noun,
        "mode": args.mode,
        "fraction": args.fraction,
        "out": args.out,
        "report": args.report,
    }
    write_report(args.report, build_envelope("filter_one", config, payload))
    return 0


def cmd_eval(args) -> int:
    dataset = _load(args)
    sim = load_matrix(args.sim)
    report = metrics_report(sim, dataset, threshold=args.threshold, depth=args.depth)
    payload = {"threshold": args.threshold, "depth": args.depth, **metrics_report_dict(report)}
    config = {
        "sim": args.sim,
        "annotations": args.annotations,
        "format": args.format,
        "threshold": args.threshold,
        "depth": args.depth,
        "out": args.out,
    }
    write_report(args.out, build_envelope("eval", config, payload))
    return 0


def cmd_inspect(args) -> int:
    dataset = _load(args)
    sim = load_matrix(args.sim)
    entries = inspect_query(sim, dataset, args.query, args.topk)
    print(f"query {args.query}: top {len(entries)} of {len(sim.cols)} gallery clips")
    print(f"{'rank':>4}  {'gallery_id':<24} {'score':>12} {'frames':>7} {'rel':>4}  caption")
    for rank, e in enumerate(entries, start=1):
        print(
            f"{rank:>4}  {e.gallery_id:<24} {e.score:>12.6f} {e.frame_length:>7} "
            f"{e.relevance:>4.1f}  {e.caption}"
        )
    return 0


def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = SimConfig(
        num_classes=args.classes,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        train_len_mean=args.train_len_mean,
        test_len_mean=args.train_len_mean + args.test_offset,
        len_stddev=args.len_stddev,
        class_len_spread=args.class_spread,
        bias_strength=args.bias,
        noise_stddev=args.noise_stddev,
        num_len_buckets=args.buckets,
    )
    seeds = _parse_list(args.seeds, int)
    alphas = _parse_list(args.alphas, float)

    def emit(seed, alpha, dataset, reference, sim):
        if alpha is None:
            (out_dir / f"annotations_seed{seed}.csv").write_text(
                to_native_csv(dataset), encoding="utf-8"
            )
            save_matrix(sim, out_dir / f"sim_seed{seed}_baseline.simm")
        else:
            tag = f"seed{seed}_alpha{alpha:g}"
            (out_dir / f"annotations_{tag}.csv").write_text(
                to_native_csv(reference), encoding="utf-8"
            )
            save_matrix(sim, out_dir / f"sim_{tag}.simm")

    rows = bias_sweep(
        config, alphas, seeds, min_class_size=args.min_class_size, topk=args.topk,
        on_condition=emit,
    )
    payload = {
        "sim_config": asdict(config),
        "alphas": alphas,
        "seeds": seeds,
        "min_class_size": args.min_class_size,
        "topk": args.topk,
        "conditions": [sweep_row_dict(r) for r in rows],
    }
    config_echo = {
        "classes": args.classes,
        "train_per_class": args.train_per_class,
        "test_per_class": args.test_per_class,
        "bias": args.bias,
        "test_offset": args.test_offset,
        "train_len_mean": args.train_len_mean,
        "len_stddev": args.len_stddev,
        "class_spread": args.class_spread,
        "noise_stddev": args.noise_stddev,
        "buckets": args.buckets,
        "min_class_size": args.min_class_size,
        "topk": args.topk,
        "seeds": args.seeds,
        "alphas": args.alphas,
        "out_dir": args.out_dir,
    }
    write_report(out_dir / "sweep_report.json", build_envelope("simulate", config_echo, payload))
    return 0


def cmd_sum_sims(args) -> int:
    matrices = [load_matrix(p) for p in args.paths]
    total = sum_similarity_matrices(matrices, mean=args.mean)
    save_matrix(total, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framebias",
        description="Frame-length bias audit, debiasing filters, and retrieval metrics "
        "for trimmed-clip text-video datasets.",
    )
    parser.add_argument("--version", action="version", version=f"framebias {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="per-class and global length discrepancy report")
    _annotation_args(p)
    p.add_argument("--class", dest="cls", metavar="V,N", help="histogram class (default: all clips)")
    p.add_argument("--bin-width", type=int, default=30)
    p.add_argument("--out", required=True, metavar="PATH", help="report JSON path")
    p.add_argument("--hist-out", metavar="PATH", help="histogram plot-data CSV path")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("filter", help="greedy margin filter over every class")
    _annotation_args(p)
    p.add_argument("--alpha", type=float, required=True, help="discrepancy margin in frames")
    p.add_argument("--min-class-size", type=int, default=11)
    p.add_argument("--out", required=True, metavar="PATH", help="filtered annotations CSV path")
    p.add_argument("--report", required=True, metavar="PATH", help="report JSON path")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("filter-one", help="remove longest/shortest train clips of one class")
    _annotation_args(p)
    p.add_argument("--verb", type=int, required=True)
    p.add_argument("--noun", type=int, required=True)
    p.add_argument("--mode", choices=("long", "short"), required=True)
    p.add_argument("--fraction", type=float, default=31 / 88, help="fraction of train clips to remove")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--report", required=True, metavar="PATH")
    p.set_defaults(func=cmd_filter_one)

    p = sub.add_parser("eval", help="score a similarity matrix against annotations")
    p.add_argument("--sim", required=True, metavar="PATH")
    _annotation_args(p)
    p.add_argument("--threshold", type=float, default=1.0, help="mAP relevance binarization")
    p.add_argument("--depth", type=int, default=None, help="nDCG ranking depth (default: full)")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="print the top-k retrieved clips for one query")
    p.add_argument("--sim", required=True, metavar="PATH")
    _annotation_args(p)
    p.add_argument("--query", required=True, metavar="ID")
    p.add_argument("--topk", type=int, default=10)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("simulate", help="bias-mechanism sweep on synthetic data")
    p.add_argument("--classes", type=int, default=40)
    p.add_argument("--train-per-class", type=int, default=30)
    p.add_argument("--test-per-class", type=int, default=10)
    p.add_argument("--bias", type=float, default=0.6, help="length leakage strength in [0,1]")
    p.add_argument("--test-offset", type=float, default=80.0, help="test minus train mean length")
    p.add_argument("--train-len-mean", type=float, default=400.0)
    p.add_argument("--len-stddev", type=float, default=40.0)
    p.add_argument("--class-spread", type=float, default=600.0, help="per-class base length band")
    p.add_argument("--noise-stddev", type=float, default=0.02)
    p.add_argument("--buckets", type=int, default=24)
    p.add_argument("--min-class-size", type=int, default=11)
    p.add_argument("--topk", type=int, default=20)
    p.add_argument("--seeds", default="0,1,2,3,4", metavar="LIST")
    p.add_argument("--alphas", default="20", metavar="LIST")
    p.add_argument("--out-dir", required=True, metavar="PATH")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sum-sims", help="elementwise sum of similarity matrices")
    p.add_argument("paths", nargs="+", metavar="PATH")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--mean", action="store_true", help="divide by the number of matrices")
    p.set_defaults(func=cmd_sum_sims)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FrameBiasError, ValueError, OSError) as err:
        print(f"framebias {args.command}: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

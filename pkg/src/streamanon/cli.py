"""Command-line interface.

Subcommands:
  run                run the anonymization pipeline between two endpoints
  bench delay        per-message delay statistics across message rates
  bench throughput   unthrottled throughput, optionally engine-bypassed
  bench gen          write a synthetic event stream to an NDJSON file
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .errors import StreamAnonError
from .model import ReductionConfig, load_config
from .transport import Endpoint, run_pipeline


def _load_config_file(path: str):
    return load_config(Path(path).read_text(encoding="utf-8"))


def _cmd_run(args: argparse.Namespace) -> int:
    anon, red = _load_config_file(args.config)
    ingress = Endpoint.parse(args.inp, "ingress")
    egress = Endpoint.parse(args.out, "egress")
    report, dictionary = run_pipeline(
        ingress, egress, anon, red,
        queue_capacity=args.queue_capacity,
        decode_categories=args.decode_categories,
    )
    if args.dump_categories:
        with open(args.dump_categories, "w", encoding="utf-8") as fh:
            for attr, category_id, value in dictionary.dump():
                fh.write(f"{attr},{category_id},{value}\n")
    report_doc = json.dumps(report.to_document(), indent=2)
    if args.report:
        Path(args.report).write_text(report_doc + "\n", encoding="utf-8")
    else:
        print(report_doc, file=sys.stderr)
    return 1 if report.error else 0


def _cmd_bench_delay(args: argparse.Namespace) -> int:
    anon, red = _load_config_file(args.config)
    rates = [float(r) for r in args.rates.split(",") if r]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rep in range(args.reps):
        stats = bench.bench_delay(rates, anon, red, count=args.count, seed=args.seed + rep)
        bench.emit_delay_results(stats, out_dir / f"delay_rep{rep}.csv")
        for rate in rates:
            s = stats[rate]
            print(f"rep={rep} rate={rate:g} median={s.median:.4f}s mean={s.mean:.4f}s n={s.n}")
    return 0


def _cmd_bench_throughput(args: argparse.Namespace) -> int:
    anon, red = _load_config_file(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = bench.bench_throughput(
        None if args.baseline else anon, red,
        count=args.count, seed=args.seed, window_seconds=args.window,
    )
    name = "throughput_baseline.csv" if args.baseline else "throughput_anonymized.csv"
    bench.emit_throughput_results(series, out_dir / name)
    print(f"mean throughput: {series.mean():.1f} msgs/s over {len(series.counts)} s")
    if not args.baseline:
        baseline = bench.bench_throughput(
            None, red, count=args.count, seed=args.seed, window_seconds=args.window
        )
        bench.emit_throughput_results(baseline, out_dir / "throughput_baseline.csv")
        ratio = series.mean() / baseline.mean() if baseline.mean() else float("nan")
        print(f"baseline: {baseline.mean():.1f} msgs/s, anonymized/baseline ratio: {ratio:.3f}")
    return 0


def _cmd_bench_gen(args: argparse.Namespace) -> int:
    spec = bench.EmulatorSpec(count=args.count, rate=0.0, seed=args.seed)
    n = bench.write_events_file(spec, Path(args.out))
    print(f"wrote {n} records to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamanon")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the anonymization pipeline")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--in", dest="inp", required=True,
                       help="stdin | file:<path> | tcp-listen:<host>:<port> | tcp:<host>:<port>")
    run_p.add_argument("--out", required=True,
                       help="stdout | file:<path> | tcp-listen:<host>:<port> | tcp:<host>:<port>")
    run_p.add_argument("--decode-categories", action="store_true")
    run_p.add_argument("--dump-categories", metavar="PATH")
    run_p.add_argument("--report", metavar="PATH")
    run_p.add_argument("--queue-capacity", type=int, default=10_000)
    run_p.set_defaults(func=_cmd_run)

    bench_p = sub.add_parser("bench", help="benchmark experiments")
    bench_sub = bench_p.add_subparsers(dest="experiment", required=True)

    delay_p = bench_sub.add_parser("delay")
    delay_p.add_argument("--rates", default="15,30,60")
    delay_p.add_argument("--count", type=int, default=300)
    delay_p.add_argument("--config", required=True)
    delay_p.add_argument("--out-dir", required=True)
    delay_p.add_argument("--reps", type=int, default=3)
    delay_p.add_argument("--seed", type=int, default=0)
    delay_p.set_defaults(func=_cmd_bench_delay)

    tp_p = bench_sub.add_parser("throughput")
    tp_p.add_argument("--count", type=int, default=50_000)
    tp_p.add_argument("--config", required=True)
    tp_p.add_argument("--baseline", action="store_true")
    tp_p.add_argument("--window", type=int, default=10)
    tp_p.add_argument("--out-dir", required=True)
    tp_p.add_argument("--seed", type=int, default=0)
    tp_p.set_defaults(func=_cmd_bench_throughput)

    gen_p = bench_sub.add_parser("gen")
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--count", type=int, required=True)
    gen_p.add_argument("--out", required=True)
    gen_p.set_defaults(func=_cmd_bench_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StreamAnonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line harness.

Subcommands:
  gen      synthesize a problem batch and write it to a .pmf file
  run      solve a batch end to end and export a report
  worker   serve cut requests over TCP for remote runs
  verify   run the self-check battery
  report   reload a report and re-export / summarize it
"""

from __future__ import annotations

import argparse
import logging
import sys
import threading
from dataclasses import replace

from .harness.bench import (check_against_sequential, export_report, load_report,
                            run_benchmark, summarize)
from .harness.config import BenchConfig, ConfigError, load_config
from .harness.problemio import read_problem_file, write_problem_file
from .harness.synth import generate_batch
from .harness.verify import run_battery
from .rpc import WorkerServer, parse_endpoint


def _load(args) -> BenchConfig:
    config = load_config(args.config) if args.config else BenchConfig()
    overrides = {}
    for key in ("policy", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        config = replace(config, **overrides).validate()
    return config


def _print_summary(report) -> None:
    rows = summarize(report)
    width = max(len(r[0]) for r in rows) if rows else 6
    print(f"{'metric':<{width}}  {'min':>12}  {'avg':>12}  {'max':>12}")
    for name, lo, avg, hi in rows:
        print(f"{name:<{width}}  {str(lo):>12}  {str(avg):>12}  {str(hi):>12}")


def cmd_gen(args) -> int:
    config = _load(args)
    meta, problems, truths = generate_batch(config)
    path = write_problem_file(args.out, problems, truths, meta)
    print(f"wrote {len(problems)} problems ({config.width}x{config.height}, "
          f"{len(truths)} truth masks) to {path}")
    return 0


def cmd_run(args) -> int:
    config = _load(args)
    problems = truths = None
    if args.problems:
        meta, problems, truths = read_problem_file(args.problems)
        if all(t is None for t in truths):
            truths = None
    run = run_benchmark(config, problems=problems, truths=truths)
    path = export_report(run.report, args.report, args.csv)
    meta = run.report.meta
    print(f"{len(run.report.tasks)} tasks, {len(run.report.cuts)} cuts, "
          f"policy={config.policy}, makespan {meta['makespan_seconds']:.3f}s, "
          f"wall {meta['wall_seconds']:.3f}s")
    _print_summary(run.report)
    print(f"report written to {path}")
    if args.check:
        ok = check_against_sequential(run, config)
        print(f"sequential cross-check: {'ok' if ok else 'MISMATCH'}")
        if not ok:
            return 1
    return 0


def cmd_worker(args) -> int:
    logging.basicConfig(level=getattr(logging, args.log_level.upper()),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    host, port = parse_endpoint(args.listen)
    server = WorkerServer(host, port, max_concurrent=args.max_concurrent,
                          solver_threads=args.solver_threads)
    host, port = server.start()
    print(f"worker listening on {host}:{port}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        print("stopping")
    finally:
        server.stop()
    return 0


def cmd_verify(args) -> int:
    return 0 if run_battery(quick=args.quick) else 1


def cmd_report(args) -> int:
    report = load_report(args.input)
    if args.out or args.csv:
        out = args.out or args.input
        export_report(report, out, args.csv)
        print(f"re-exported to {out}" + (f" and {args.csv}" if args.csv else ""))
    _print_summary(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmflow",
                                     description="parametric grid cut benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="synthesize a problem batch")
    gen.add_argument("--config", help="config file (key = value lines)")
    gen.add_argument("--out", default="problems.pmf", help="output .pmf path")
    gen.set_defaults(fn=cmd_gen)

    run = sub.add_parser("run", help="solve a batch and export a report")
    run.add_argument("--config", help="config file")
    run.add_argument("--problems", help="input .pmf (defaults to generating fresh)")
    run.add_argument("--report", default="report.jsonl", help="output report path")
    run.add_argument("--csv", help="also write a summary csv")
    run.add_argument("--policy", choices=("static", "dynamic", "lpt"),
                     help="override the configured policy")
    run.add_argument("--workers", help="override the worker spec, e.g. 'local*2'")
    run.add_argument("--check", action="store_true",
                     help="cross-check every cut against the sequential solver")
    run.set_defaults(fn=cmd_run)

    worker = sub.add_parser("worker", help="serve cut requests over TCP")
    worker.add_argument("--listen", default="127.0.0.1:0", help="host:port to bind")
    worker.add_argument("--max-concurrent", type=int, default=4,
                        help="frames admitted per connection before pausing reads")
    worker.add_argument("--solver-threads", type=int, default=2)
    worker.add_argument("--log-level", default="info",
                        choices=("debug", "info", "warning", "error"))
    worker.set_defaults(fn=cmd_worker)

    verify = sub.add_parser("verify", help="run the self-check battery")
    verify.add_argument("--quick", action="store_true", help="smaller sample counts")
    verify.set_defaults(fn=cmd_verify)

    report = sub.add_parser("report", help="summarize or re-export a report")
    report.add_argument("input", help="report .jsonl path")
    report.add_argument("--out", help="re-export the report here")
    report.add_argument("--csv", help="write a summary csv")
    report.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"not found: {exc.filename or exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Run a benchmark against real TCP workers, all inside one process.

Starts two loopback cut servers, points the remote worker slots at them
through PMFLOW_ENDPOINTS, runs the configured batch, and cross-checks
every cut against the sequential solver.
"""

import argparse

from pmflow.harness.bench import check_against_sequential, run_benchmark, summarize
from pmflow.harness.config import BenchConfig, load_config
from pmflow.rpc import WorkerServer


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="benchmark config file")
    args = ap.parse_args()

    config = load_config(args.config) if args.config else BenchConfig()
    config = type(config)(**{**config.__dict__,
                             "workers": "127.0.0.1:1*1, 127.0.0.1:1*1"})

    with WorkerServer() as a, WorkerServer() as b:
        endpoints = ",".join(f"{h}:{p}" for h, p in (a.address, b.address))
        print(f"workers listening at {endpoints}")
        run = run_benchmark(config, env={"PMFLOW_ENDPOINTS": endpoints})

    meta = run.report.meta
    print(f"{len(run.report.tasks)} composite tasks, {len(run.report.cuts)} "
          f"cuts, makespan {meta['makespan_seconds']:.3f}s")
    for name, lo, avg, hi in summarize(run.report):
        print(f"  {name}: min {lo}  avg {avg}  max {hi}")
    ok = check_against_sequential(run, config)
    print(f"sequential cross-check: {'ok' if ok else 'MISMATCH'}")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()

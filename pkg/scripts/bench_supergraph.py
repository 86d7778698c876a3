#!/usr/bin/env python3
"""Measure how knitting problems into composites changes solve wall time.

Generates one batch, then solves it with group sizes 1, 2, 4, ... and
compares against the plain per-problem sequential loop.  Everything runs
in-process; the point is solver cost per pixel, not transport.
"""

import argparse
import time

from pmflow.harness.config import BenchConfig, load_config
from pmflow.harness.synth import generate_batch
from pmflow.parametric import solve_schedule_sequential
from pmflow.supergraph import build_seed_supergraph, solve_composite, split


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="benchmark config file")
    ap.add_argument("--groups", default="1,2,4,8",
                    help="comma list of seeds-per-composite to try")
    args = ap.parse_args()

    config = load_config(args.config) if args.config else BenchConfig()
    schedule = config.schedule()
    _, problems, _ = generate_batch(config)
    print(f"{len(problems)} problems of {config.width}x{config.height}, "
          f"{len(schedule)} lambda values")

    t0 = time.perf_counter()
    sequential = [solve_schedule_sequential(p, schedule) for p in problems]
    t_seq = time.perf_counter() - t0
    flows = {(i, j): cut.flow
             for i, r in enumerate(sequential) for j, cut in enumerate(r.cuts)}
    print(f"sequential loop: {t_seq:.3f}s ({len(flows)} cuts)")

    for group in (int(g) for g in args.groups.split(",")):
        if group > len(problems):
            break
        t0 = time.perf_counter()
        n_cuts = 0
        for start in range(0, len(problems), group):
            chunk = problems[start:start + group]
            composite, layout, originals = build_seed_supergraph(
                chunk, schedule, config.swap_mode)
            parts = split(layout, solve_composite(composite, layout), originals)
            k = len(schedule)
            for j, part in enumerate(parts):
                assert part.flow == flows[(start + j // k, j % k)]
                n_cuts += 1
        dt = time.perf_counter() - t0
        print(f"group={group:<3} composites: {dt:.3f}s  "
              f"({t_seq / dt:.2f}x vs sequential, {n_cuts} cuts verified)")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Compare scheduling policies on random duration families.

Simulated virtual time, so results are exact and instant.  Prints per-policy
makespans relative to the brute-forced optimum while the instances stay
small enough to brute force.
"""

import argparse

import numpy as np

from pmflow.scheduler import makespan_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--max-tasks", type=int, default=8)
    ap.add_argument("--machines", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    sums = {"static": 0.0, "dynamic": 0.0, "lpt": 0.0}
    worst = {k: 0.0 for k in sums}
    dyn_vs_lpt = []
    for _ in range(args.instances):
        n = int(rng.integers(2, args.max_tasks + 1))
        durations = [int(d) for d in rng.integers(1, 20, n)]
        rep = makespan_report(durations, args.machines)
        for key in sums:
            ratio = rep[key] / rep["optimal"]
            sums[key] += ratio
            worst[key] = max(worst[key], ratio)
        dyn_vs_lpt.append(rep["dynamic"] / rep["lpt"])

    print(f"{args.instances} instances, up to {args.max_tasks} tasks on "
          f"{args.machines} machines (durations 1..19)")
    print(f"{'policy':<8}  {'mean/opt':>9}  {'worst/opt':>9}")
    for key in ("static", "dynamic", "lpt"):
        print(f"{key:<8}  {sums[key] / args.instances:>9.4f}  {worst[key]:>9.4f}")
    mean = sum(dyn_vs_lpt) / len(dyn_vs_lpt)
    print(f"dynamic/lpt mean ratio: {mean:.4f} "
          f"({(mean - 1) * 100:+.1f}% for the offline plan)")


if __name__ == "__main__":
    main()

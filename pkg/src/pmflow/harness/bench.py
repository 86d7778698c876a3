"""Batch runs end to end: knit, schedule, solve, decode, score, report.

``run_benchmark`` chunks the seed problems into supergraphs, dispatches the
composite tasks under the configured policy, then splits every composite
cut back into per-(seed, lambda) results and scores them against the ground
truth with the exact Jaccard overlap.

Reports have two faces: a JSONL file (one schema record, then one record
per task and per cut; exact values, fractions kept as strings) and a CSV
min/avg/max summary.  Both are deterministic functions of the run data, so
re-exporting a loaded report reproduces the files byte for byte.  Timing
columns describe the machine the run happened on; nothing in the package
asserts against them.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..parametric import solve_schedule_sequential
from ..scheduler import (Task, ThreadedBackend, run_dynamic, run_lpt, run_static)
from ..supergraph import build_seed_supergraph, split
from .config import BenchConfig, apply_endpoint_overrides, parse_workers
from .synth import generate_batch

POLICY_RUNNERS = {"static": run_static, "dynamic": run_dynamic, "lpt": run_lpt}


def overlap(mask, truth) -> Fraction:
    """Exact Jaccard overlap |S & G| / |S | G| of two 0/1 masks."""
    a = np.asarray(mask).reshape(-1).astype(bool)
    b = np.asarray(truth).reshape(-1).astype(bool)
    if a.size != b.size:
        raise ValueError(f"mask sizes differ: {a.size} vs {b.size}")
    union = int((a | b).sum())
    if union == 0:
        raise ValueError("overlap of two empty masks is undefined")
    return Fraction(int((a & b).sum()), union)


@dataclass(frozen=True)
class RunReport:
    meta: dict
    tasks: tuple  # dict rows: task, worker, start, finish, pixels, segments
    cuts: tuple   # dict rows: problem, lambda, flow, foreground, overlap


@dataclass(frozen=True)
class BenchmarkRun:
    report: RunReport
    cuts: dict      # (problem_index, lambda_index) -> CutResult
    problems: list
    truths: list


def _chunks(seq, size):
    for i in range(0, len(seq), size):
        yield i, seq[i:i + size]


def run_benchmark(config: BenchConfig, problems=None, truths=None,
                  env: dict | None = None) -> BenchmarkRun:
    """Generate (or accept) problems, solve the whole batch, score it."""
    config.validate()
    if problems is None:
        _, problems, truths = generate_batch(config)
    problems = list(problems)
    truths = list(truths) if truths else []
    schedule = config.schedule()
    tasks = []
    groups = []
    for start, group in _chunks(problems, config.seeds_per_supergraph):
        composite, layout, originals = build_seed_supergraph(
            group, schedule, config.swap_mode)
        tasks.append(Task(id=len(tasks), graph=composite, layout=layout,
                          duration=composite.n))
        groups.append((start, layout, originals))
    workers = apply_endpoint_overrides(parse_workers(config.workers), env)
    runner = POLICY_RUNNERS[config.policy]
    backend = ThreadedBackend()
    t0 = time.monotonic()
    try:
        task_schedule, composite_cuts = runner(tasks, workers, backend)
    finally:
        backend.close()
    wall = time.monotonic() - t0

    cuts = {}
    cut_rows = []
    for task, (start, layout, originals) in zip(tasks, groups):
        parts = split(layout, composite_cuts[task.id], originals)
        k = len(schedule)
        for j, part in enumerate(parts):
            p_idx = start + j // k
            l_idx = j % k
            cuts[(p_idx, l_idx)] = part
            row = {
                "problem": p_idx,
                "lambda": schedule[l_idx],
                "flow": part.flow,
                "foreground": int(part.labels.sum()),
            }
            if truths:
                row["overlap"] = str(overlap(part.labels, truths[p_idx]))
            cut_rows.append(row)
    cut_rows.sort(key=lambda r: (r["problem"], r["lambda"]))

    task_rows = []
    for r in sorted(task_schedule.records, key=lambda r: r.task_id):
        task_rows.append({
            "task": r.task_id,
            "worker": r.worker_id,
            "start": round(r.start, 6),
            "finish": round(r.finish, 6),
            "pixels": tasks[r.task_id].graph.n,
            "segments": len(tasks[r.task_id].layout.segments),
        })
    meta = {
        "width": config.width,
        "height": config.height,
        "problems": len(problems),
        "lambda_values": list(config.lambda_values),
        "seeds_per_supergraph": config.seeds_per_supergraph,
        "policy": config.policy,
        "workers": config.workers,
        "swap_mode": config.swap_mode,
        "rng_seed": config.rng_seed,
        "makespan_seconds": round(task_schedule.makespan, 6),
        "wall_seconds": round(wall, 6),
    }
    report = RunReport(meta, tuple(task_rows), tuple(cut_rows))
    return BenchmarkRun(report, cuts, problems, truths)


def check_against_sequential(run: BenchmarkRun, config: BenchConfig) -> bool:
    """Every decoded (seed, lambda) cut must match the direct solve exactly."""
    schedule = config.schedule()
    for p_idx, problem in enumerate(run.problems):
        seq = solve_schedule_sequential(problem, schedule)
        for l_idx, want in enumerate(seq.cuts):
            got = run.cuts[(p_idx, l_idx)]
            if got.flow != want.flow or not np.array_equal(got.labels, want.labels):
                return False
    return True


def export_report(report: RunReport, jsonl_path, csv_path=None) -> Path:
    """Write the JSONL records (schema first) and optionally the CSV summary."""
    jsonl_path = Path(jsonl_path)
    lines = [json.dumps({"record": "schema", "version": 1, **report.meta},
                        sort_keys=True)]
    for row in report.tasks:
        lines.append(json.dumps({"record": "task", **row}, sort_keys=True))
    for row in report.cuts:
        lines.append(json.dumps({"record": "cut", **row}, sort_keys=True))
    jsonl_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if csv_path is not None:
        _write_summary_csv(report, csv_path)
    return jsonl_path


def load_report(jsonl_path) -> RunReport:
    meta = None
    tasks = []
    cuts = []
    with open(jsonl_path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            kind = row.pop("record", None)
            if kind == "schema":
                row.pop("version", None)
                meta = row
            elif kind == "task":
                tasks.append(row)
            elif kind == "cut":
                cuts.append(row)
            else:
                raise ValueError(f"unknown record type {kind!r}")
    if meta is None:
        raise ValueError("report has no schema record")
    return RunReport(meta, tuple(tasks), tuple(cuts))


def summarize(report: RunReport) -> list:
    """Min/avg/max rows for the headline columns, exact where the data is."""
    rows = []

    def frac_stats(name, values):
        if not values:
            return
        avg = sum(values, Fraction(0)) / len(values)
        rows.append((name, str(min(values)), str(avg), str(max(values))))

    def float_stats(name, values):
        if not values:
            return
        # start/finish are stored at 6 decimals, so differences are too
        rows.append((name, repr(round(min(values), 6)),
                     repr(round(sum(values) / len(values), 6)),
                     repr(round(max(values), 6))))

    overlaps = [Fraction(r["overlap"]) for r in report.cuts if "overlap" in r]
    frac_stats("overlap", overlaps)
    flows = [Fraction(r["flow"]) for r in report.cuts]
    frac_stats("flow", flows)
    seconds = [r["finish"] - r["start"] for r in report.tasks]
    float_stats("task_seconds", seconds)
    return rows


def _write_summary_csv(report: RunReport, csv_path) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "min", "avg", "max"])
        writer.writerows(summarize(report))

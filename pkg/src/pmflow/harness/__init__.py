"""Benchmark harness: synthetic problems, batch runs, reports."""

from .bench import BenchmarkRun, RunReport, export_report, load_report, overlap, run_benchmark
from .config import BenchConfig, load_config, parse_config_text, parse_workers
from .problemio import read_problem_file, write_problem_file
from .synth import generate_batch, quantize_weights, seed_coords

__all__ = [
    "BenchConfig",
    "BenchmarkRun",
    "RunReport",
    "export_report",
    "generate_batch",
    "load_config",
    "load_report",
    "overlap",
    "parse_config_text",
    "parse_workers",
    "quantize_weights",
    "read_problem_file",
    "run_benchmark",
    "seed_coords",
    "write_problem_file",
]

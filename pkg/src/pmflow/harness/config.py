"""Benchmark configuration: dataclass, key=value files, worker specs.

Config files are plain ``key = value`` lines with ``#`` comments.  The
worker pool is a comma-separated spec like ``local*2, 10.0.0.5:7117*4``;
the ``PMFLOW_ENDPOINTS`` environment variable substitutes the remote
endpoints (and only the endpoints) in order, so a config written for one
cluster can follow the batch to another.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from ..parametric import DEFAULT_LAMBDA_VALUES, LambdaSchedule, ScheduleError
from ..scheduler import WorkerHandle

POLICIES = ("static", "dynamic", "lpt")
SWAP_MODES = ("auto", "on", "off")

ENDPOINTS_ENV = "PMFLOW_ENDPOINTS"


class ConfigError(ValueError):
    pass


@dataclass
class BenchConfig:
    """Desk-scale defaults: a 32x32 image with a 4x4 grid of seed problems
    solved over the full 20-value lambda ladder on two local workers."""

    width: int = 32
    height: int = 32
    seed_rows: int = 4
    seed_cols: int = 4
    regions: int = 4
    noise: int = 10
    lambda_values: tuple = DEFAULT_LAMBDA_VALUES
    seeds_per_supergraph: int = 2
    policy: str = "dynamic"
    workers: str = "local*2"
    swap_mode: str = "auto"
    rng_seed: int = 0

    def validate(self) -> "BenchConfig":
        if self.width < self.seed_cols + 1 or self.height < self.seed_rows + 1:
            raise ConfigError(
                f"{self.width}x{self.height} image cannot hold a "
                f"{self.seed_rows}x{self.seed_cols} interior seed grid")
        if self.seed_rows < 1 or self.seed_cols < 1:
            raise ConfigError("need at least one seed row and column")
        if self.regions < 1:
            raise ConfigError("need at least one region")
        if self.noise < 0:
            raise ConfigError("noise must be non-negative")
        if self.seeds_per_supergraph < 1:
            raise ConfigError("seeds_per_supergraph must be positive")
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.swap_mode not in SWAP_MODES:
            raise ConfigError(f"swap_mode must be one of {SWAP_MODES}, got {self.swap_mode!r}")
        try:
            LambdaSchedule(self.lambda_values)
        except ScheduleError as exc:
            raise ConfigError(f"lambda_values: {exc}") from None
        parse_workers(self.workers)
        return self

    def schedule(self) -> LambdaSchedule:
        return LambdaSchedule(self.lambda_values)


def _coerce(name: str, kind, raw: str):
    raw = raw.strip()
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from None
    if kind is tuple:
        try:
            return tuple(int(v) for v in raw.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"{name}: expected integers, got {raw!r}") from None
    return raw


_KEY_KINDS = {
    "width": int, "height": int, "seed_rows": int, "seed_cols": int,
    "regions": int, "noise": int, "seeds_per_supergraph": int, "rng_seed": int,
    "lambda_values": tuple,
    "policy": str, "workers": str, "swap_mode": str,
}


def parse_config_text(text: str, base: BenchConfig | None = None) -> BenchConfig:
    cfg = base if base is not None else BenchConfig()
    kinds = _KEY_KINDS
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _coerce(key, kinds[key], value)
    return replace(cfg, **updates).validate()


def load_config(path, base: BenchConfig | None = None) -> BenchConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read(), base)


def parse_workers(spec: str) -> list:
    """``local*2, host:port*3`` into WorkerHandle objects, ids in spec order."""
    handles = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        name, star, count_s = item.rpartition("*")
        if star and name:
            base = name.strip()
            try:
                count = int(count_s)
            except ValueError:
                raise ConfigError(f"bad worker count in {item!r}") from None
        else:
            base, count = item, 1
        if count < 1:
            raise ConfigError(f"worker count must be positive in {item!r}")
        if base == "local":
            kind, endpoint = "local", None
        elif ":" in base:
            kind, endpoint = "remote", base
        else:
            raise ConfigError(
                f"worker {base!r} is neither 'local' nor a host:port endpoint")
        for _ in range(count):
            handles.append(WorkerHandle(id=len(handles), kind=kind, endpoint=endpoint))
    if not handles:
        raise ConfigError(f"worker spec {spec!r} names no workers")
    return handles


def apply_endpoint_overrides(handles, env: dict | None = None) -> list:
    """Substitute remote endpoints from PMFLOW_ENDPOINTS, in order.

    Only the endpoint strings change; worker count, kinds, and order stay as
    configured.  Missing entries leave the configured endpoint; extras are
    ignored.
    """
    env = os.environ if env is None else env
    raw = env.get(ENDPOINTS_ENV, "")
    endpoints = [e.strip() for e in raw.split(",") if e.strip()]
    if not endpoints:
        return list(handles)
    out = []
    i = 0
    for h in handles:
        if h.kind == "remote" and i < len(endpoints):
            out.append(WorkerHandle(h.id, h.kind, endpoints[i], h.slots))
            i += 1
        else:
            out.append(h)
    return out

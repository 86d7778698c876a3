"""Parametric figure-ground problems: one grid graph per lambda value.

A SeedProblem fixes per-pixel unary terms, pairwise terms, and seed pixels.
For a given lambda the source capacities are ``unary_base + lambda *
unary_slope`` (slope >= 0, so source affinity is monotone in lambda), sink
and pairwise capacities do not depend on lambda, and seed pixels get CAP_MAX
on their terminal.  Lambda values are plain non-negative integers: callers
working in real units pre-scale their weights to a fixed-point grid (see
``pmflow.harness.synth.quantize_weights``).  Monotonicity makes the optimal
foreground sets nested along an increasing schedule, which ``check_nested``
verifies on solver output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import CAP_MAX, CapacityOverflowError, GridGraph, ShapeError, admit, cut_cost
from .solvers import maxflow_pushrelabel

# Default schedule: 20 values, roughly x1.5 per step.  This is configuration,
# not a derived constant; runs that need other ranges pass their own list.
DEFAULT_LAMBDA_VALUES = (1, 2, 3, 5, 7, 11, 16, 24, 36, 54,
                         81, 122, 183, 274, 411, 617, 925, 1388, 2082, 3123)
# Halved schedule for cheaper runs: every other default value.
HALVED_LAMBDA_VALUES = DEFAULT_LAMBDA_VALUES[::2]

_PRODUCT_LIMIT = 1 << 62


class ScheduleError(ValueError):
    pass


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class LambdaSchedule:
    """A strictly increasing tuple of non-negative integer lambda values."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise ScheduleError("schedule must hold at least one value")
        if vals[0] < 0:
            raise ScheduleError("lambda values must be non-negative")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ScheduleError("lambda values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def default(cls) -> "LambdaSchedule":
        return cls(DEFAULT_LAMBDA_VALUES)

    @classmethod
    def halved(cls) -> "LambdaSchedule":
        return cls(HALVED_LAMBDA_VALUES)

    @property
    def mid_index(self) -> int:
        """Index of the mid-schedule value, ceil(n/2) - 1."""
        return (len(self.values) - 1) // 2

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True, eq=False)
class SeedProblem:
    """A parametric problem: unary/pairwise terms plus foreground and
    background seed pixels (flat indices)."""

    width: int
    height: int
    unary_base: np.ndarray
    unary_slope: np.ndarray
    sink_base: np.ndarray
    pairwise: np.ndarray  # (4, n), same direction rows as GridGraph.nbr_cap
    fg_seeds: frozenset = field(default_factory=frozenset)
    bg_seeds: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ProblemError(f"bad dimensions {self.width}x{self.height}")
        n = self.width * self.height

        def arr(v, name):
            a = np.asarray(v, dtype=np.int64).reshape(-1)
            if a.size != n:
                raise ShapeError(f"{name}: expected {n} entries, got {a.size}")
            return a

        object.__setattr__(self, "unary_base", arr(self.unary_base, "unary_base"))
        object.__setattr__(self, "unary_slope", arr(self.unary_slope, "unary_slope"))
        object.__setattr__(self, "sink_base", arr(self.sink_base, "sink_base"))
        pw = np.asarray(self.pairwise, dtype=np.int64)
        try:
            pw = pw.reshape(4, n)
        except ValueError:
            raise ShapeError(f"pairwise: expected shape (4, {n}), got {pw.shape}") from None
        object.__setattr__(self, "pairwise", pw)
        if int(self.unary_slope.min(initial=0)) < 0:
            raise ProblemError("unary_slope must be non-negative")
        fg = frozenset(int(i) for i in self.fg_seeds)
        bg = frozenset(int(i) for i in self.bg_seeds)
        if fg & bg:
            raise ProblemError("a pixel cannot be both a foreground and background seed")
        for name, seeds in (("fg_seeds", fg), ("bg_seeds", bg)):
            if any(i < 0 or i >= n for i in seeds):
                raise ProblemError(f"{name} contains an out-of-range pixel index")
        object.__setattr__(self, "fg_seeds", fg)
        object.__setattr__(self, "bg_seeds", bg)
        object.__setattr__(self, "_fg_idx", np.fromiter(sorted(fg), np.int64, len(fg)))
        object.__setattr__(self, "_bg_idx", np.fromiter(sorted(bg), np.int64, len(bg)))

    @property
    def n(self) -> int:
        return self.width * self.height


def instantiate(problem: SeedProblem, lam: int) -> GridGraph:
    """Build the admitted graph for one lambda value.

    Uses exact integer arithmetic.  Rejects overflowing unary terms with the
    offending pixel, and enforces the seed-safety budget: the capacities
    below CAP_MAX must sum below CAP_MAX, so no finite cut can ever compete
    with severing a seed.
    """
    lam = int(lam)
    if lam < 0:
        raise ScheduleError(f"lambda must be non-negative, got {lam}")
    max_slope = int(problem.unary_slope.max(initial=0))
    if max_slope and lam > _PRODUCT_LIMIT // max_slope:
        raise CapacityOverflowError(f"lambda {lam} overflows the unary term")
    src = problem.unary_base + lam * problem.unary_slope
    over = src > CAP_MAX
    if bool(over.any()):
        p = int(np.argmax(over))
        raise CapacityOverflowError(
            f"unary_base + lambda*unary_slope exceeds CAP_MAX at pixel {p} (lambda={lam})")
    snk = problem.sink_base.copy()
    if problem._fg_idx.size:
        src[problem._fg_idx] = CAP_MAX
    if problem._bg_idx.size:
        snk[problem._bg_idx] = CAP_MAX
    g = GridGraph(problem.width, problem.height, src, snk, problem.pairwise.copy())
    admit(g)
    finite = (int(src[src < CAP_MAX].sum()) + int(snk[snk < CAP_MAX].sum())
              + int(g.nbr_cap[g.nbr_cap < CAP_MAX].sum()))
    if finite >= CAP_MAX:
        raise CapacityOverflowError(
            f"finite capacities sum to {finite}, leaving no headroom under CAP_MAX; "
            "seed pixels could be severed")
    return g


@dataclass(frozen=True, eq=False)
class ParametricResult:
    """Cuts for one problem solved at every schedule value, in order."""

    schedule: LambdaSchedule
    cuts: tuple

    def masks(self):
        return [c.labels.astype(bool) for c in self.cuts]


def solve_schedule_sequential(problem: SeedProblem, schedule: LambdaSchedule) -> ParametricResult:
    """Reference path: instantiate and solve each lambda independently."""
    cuts = tuple(maxflow_pushrelabel(instantiate(problem, lam)) for lam in schedule)
    return ParametricResult(schedule, cuts)


def energy(problem: SeedProblem, lam: int, labels) -> int:
    """Segmentation energy of a mask at one lambda: the cut cost it induces."""
    return cut_cost(instantiate(problem, lam), labels)


def check_nested(result: ParametricResult):
    """Verify foreground sets grow with lambda.

    Returns (True, None) when every mask contains its predecessor, otherwise
    (False, i) for the first schedule index i whose mask loses a pixel.
    """
    masks = result.masks()
    for i in range(1, len(masks)):
        if bool((masks[i - 1] & ~masks[i]).any()):
            return False, i
    return True, None

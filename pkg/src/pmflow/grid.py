"""4-connected grid graphs with terminal capacities, admission checks, cut costs.

Pixels are stored row-major: pixel (x, y) has flat index ``y * width + x``.
Neighbor capacities are directed: ``nbr_cap[d, p]`` is the capacity of the
edge from pixel p to its d-neighbor.  Edges that would cross the image border
must carry capacity zero.  All capacities are non-negative integers and
``CAP_MAX`` is the "practically infinite" capacity used to pin seed pixels to
a terminal: any cut severing a CAP_MAX edge costs more than any cut made of
smaller capacities, provided those sum below CAP_MAX (checked where seeds are
introduced, see :mod:`pmflow.parametric`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CAP_MAX = 1 << 30
TOTAL_CAP_LIMIT = 1 << 62
MAX_PIXELS = 1 << 26

LEFT, RIGHT, UP, DOWN = range(4)
DIRECTIONS = (LEFT, RIGHT, UP, DOWN)
OPPOSITE = (RIGHT, LEFT, DOWN, UP)
DIRECTION_NAMES = ("left", "right", "up", "down")


class GraphError(ValueError):
    """Base class for graph admission failures."""


class ShapeError(GraphError):
    """Array sizes do not match the declared grid dimensions."""


class NegativeCapacityError(GraphError):
    """A capacity is negative."""


class BorderEdgeError(GraphError):
    """A border-crossing neighbor edge has nonzero capacity."""


class CapacityOverflowError(GraphError):
    """Capacities exceed CAP_MAX or an admission budget."""


def _cap_array(values, n, name):
    arr = np.asarray(values, dtype=np.int64).reshape(-1)
    if arr.size != n:
        raise ShapeError(f"{name}: expected {n} entries, got {arr.size}")
    return arr


@dataclass(frozen=True, eq=False)
class GridGraph:
    """An s-t flow network over a width x height pixel grid."""

    width: int
    height: int
    src_cap: np.ndarray
    snk_cap: np.ndarray
    nbr_cap: np.ndarray  # shape (4, n); rows indexed by LEFT/RIGHT/UP/DOWN

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ShapeError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        n = self.width * self.height
        if n > MAX_PIXELS:
            raise ShapeError(f"grid has {n} pixels, limit is {MAX_PIXELS}")
        object.__setattr__(self, "src_cap", _cap_array(self.src_cap, n, "src_cap"))
        object.__setattr__(self, "snk_cap", _cap_array(self.snk_cap, n, "snk_cap"))
        nbr = np.asarray(self.nbr_cap, dtype=np.int64)
        try:
            nbr = nbr.reshape(4, n)
        except ValueError:
            raise ShapeError(f"nbr_cap: expected shape (4, {n}), got {nbr.shape}") from None
        object.__setattr__(self, "nbr_cap", nbr)
        object.__setattr__(self, "_admitted", False)

    @property
    def n(self) -> int:
        return self.width * self.height

    @classmethod
    def zeros(cls, width: int, height: int) -> "GridGraph":
        n = width * height
        return cls(width, height, np.zeros(n, np.int64), np.zeros(n, np.int64),
                   np.zeros((4, n), np.int64))

    def equals(self, other: "GridGraph") -> bool:
        return (self.width == other.width and self.height == other.height
                and bool(np.array_equal(self.src_cap, other.src_cap))
                and bool(np.array_equal(self.snk_cap, other.snk_cap))
                and bool(np.array_equal(self.nbr_cap, other.nbr_cap)))

    def __repr__(self):
        return f"GridGraph({self.width}x{self.height})"


def admit(g: GridGraph) -> GridGraph:
    """Validate all graph invariants and freeze the capacity arrays.

    Each failure mode raises its own GraphError subclass: negative capacity,
    border edge nonzero, capacity above CAP_MAX, total above the 2**62
    budget.  Admission is idempotent and returns the same (now immutable)
    graph object.
    """
    if getattr(g, "_admitted", False):
        return g
    for name, arr in (("src_cap", g.src_cap), ("snk_cap", g.snk_cap), ("nbr_cap", g.nbr_cap)):
        if int(arr.min(initial=0)) < 0:
            p = int(np.argmin(arr.reshape(-1)))
            raise NegativeCapacityError(f"{name} has a negative capacity (flat index {p})")
        if int(arr.max(initial=0)) > CAP_MAX:
            raise CapacityOverflowError(f"{name} exceeds CAP_MAX = 2**30")
    nbr = g.nbr_cap.reshape(4, g.height, g.width)
    for d, edge in ((LEFT, nbr[LEFT, :, 0]), (RIGHT, nbr[RIGHT, :, -1]),
                    (UP, nbr[UP, 0, :]), (DOWN, nbr[DOWN, -1, :])):
        if int(edge.max(initial=0)) > 0:
            raise BorderEdgeError(
                f"nonzero {DIRECTION_NAMES[d]} capacity on the image border")
    total = int(g.src_cap.sum()) + int(g.snk_cap.sum()) + int(g.nbr_cap.sum())
    if total >= TOTAL_CAP_LIMIT:
        raise CapacityOverflowError("total capacity exceeds the 2**62 admission budget")
    for arr in (g.src_cap, g.snk_cap, g.nbr_cap):
        arr.flags.writeable = False
    object.__setattr__(g, "_admitted", True)
    return g


def neighbor_values(a: np.ndarray, d: int, fill) -> np.ndarray:
    """Array whose entry at p holds a's value at p's d-neighbor (`fill` off-grid)."""
    out = np.full_like(a, fill)
    if d == LEFT:
        out[:, 1:] = a[:, :-1]
    elif d == RIGHT:
        out[:, :-1] = a[:, 1:]
    elif d == UP:
        out[1:, :] = a[:-1, :]
    else:
        out[:-1, :] = a[1:, :]
    return out


def scatter_to_neighbor(dst: np.ndarray, d: int, delta: np.ndarray) -> None:
    """Add delta[p] onto the d-neighbor of p, in place (off-grid entries drop)."""
    if d == LEFT:
        dst[:, :-1] += delta[:, 1:]
    elif d == RIGHT:
        dst[:, 1:] += delta[:, :-1]
    elif d == UP:
        dst[:-1, :] += delta[1:, :]
    else:
        dst[1:, :] += delta[:-1, :]


def cut_cost(g: GridGraph, labels) -> int:
    """Cost of the s-t cut induced by a 0/1 mask (1 = source side).

    Counts snk_cap of source-side pixels, src_cap of sink-side pixels, and
    every directed neighbor edge leaving the source side.
    """
    lab = np.asarray(labels).reshape(-1)
    if lab.size != g.n:
        raise ShapeError(f"labels: expected {g.n} entries, got {lab.size}")
    if lab.dtype != np.bool_ and not bool(((lab == 0) | (lab == 1)).all()):
        raise ValueError("labels must be a 0/1 mask")
    fg = lab.astype(bool)
    cost = int(g.snk_cap[fg].sum()) + int(g.src_cap[~fg].sum())
    fg2 = fg.reshape(g.height, g.width)
    nbr = g.nbr_cap.reshape(4, g.height, g.width)
    for d in DIRECTIONS:
        crossing = fg2 & ~neighbor_values(fg2, d, True)
        if crossing.any():
            cost += int(nbr[d][crossing].sum())
    return cost


@dataclass(frozen=True, eq=False)
class CutResult:
    """A maximum-flow value and the matching minimum-cut label mask."""

    flow: int
    labels: np.ndarray  # (n,) uint8, 1 = source side

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.uint8).reshape(-1)
        object.__setattr__(self, "flow", int(self.flow))
        object.__setattr__(self, "labels", lab)

    def equals(self, other: "CutResult") -> bool:
        return self.flow == other.flow and bool(np.array_equal(self.labels, other.labels))

    def __repr__(self):
        return f"CutResult(flow={self.flow}, fg={int(self.labels.sum())}/{self.labels.size})"

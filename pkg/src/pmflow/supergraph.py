"""Knitting independent grid problems into one composite "supergraph".

``join`` places same-height graphs side by side with a one-pixel-wide
zero-capacity bridge column between neighbors.  No flow can cross a bridge,
so the composite max flow is exactly the sum of the constituent max flows
and one composite solve answers every constituent at once.  ``split``
decodes a composite cut back into per-constituent cuts.

The s-t swap mirrors a graph (source and sink exchange roles, every directed
neighbor capacity trades places with its reverse partner).  The max-flow
value is invariant, but swapping can shrink the source side the solver has
to grow, which is the point: a composite can mix swapped and unswapped
constituents and still decode exactly.  ``swap_decision`` picks the
orientation from the sign pattern of the per-pixel terminal difference.

``solve_composite`` is the one solver entry point used by local workers and
the wire service.  For swapped segments it reports the complement of the
sink-reaching residual set instead of the source-reachable set; after
``split`` complements those spans again, every constituent comes back as the
canonical (minimal source side) cut of its *original* graph, bit-identical
to a direct solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (CutResult, DOWN, GridGraph, LEFT, RIGHT, UP, admit, cut_cost)
from .parametric import LambdaSchedule, SeedProblem, instantiate
from .solvers import extract_canonical_cut, push_relabel_residual, sink_side


class SupergraphError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    """One constituent's column span inside a composite graph."""

    constituent: int
    offset: int
    width: int
    swapped: bool


@dataclass(frozen=True)
class SupergraphLayout:
    """Geometry of a composite: column spans, bridge columns, height."""

    segments: tuple
    bridge_columns: tuple
    height: int

    @property
    def total_width(self) -> int:
        last = self.segments[-1]
        return last.offset + last.width

    @property
    def any_swapped(self) -> bool:
        return any(s.swapped for s in self.segments)


@dataclass(frozen=True)
class SwapStats:
    """Sign pattern of src_cap - snk_cap over the pixels of a graph."""

    positive_count: int
    negative_count: int
    positive_sum: int
    negative_sum: int  # absolute value


def terminal_balance(g: GridGraph) -> SwapStats:
    d = g.src_cap - g.snk_cap
    pos = d > 0
    neg = d < 0
    return SwapStats(int(pos.sum()), int(neg.sum()),
                     int(d[pos].sum()), int(-d[neg].sum()))


def swap_decision(g: GridGraph) -> bool:
    """Swap when strictly more pixels lean toward the sink than the source.

    The rule counts pixels; the magnitude sums are exposed in SwapStats for
    diagnostics but do not influence the decision.  Ties mean no swap.
    """
    stats = terminal_balance(g)
    return stats.negative_count > stats.positive_count


def apply_swap(g: GridGraph) -> GridGraph:
    """Exchange source/sink roles; an involution that preserves the max flow.

    Terminal capacities trade places and each directed neighbor capacity is
    exchanged with its reverse partner, which is a horizontal or vertical
    shift of the opposite direction plane.
    """
    H, W = g.height, g.width
    nbr = g.nbr_cap.reshape(4, H, W)
    out = np.zeros((4, H, W), np.int64)
    out[LEFT, :, 1:] = nbr[RIGHT, :, :-1]
    out[RIGHT, :, :-1] = nbr[LEFT, :, 1:]
    out[UP, 1:, :] = nbr[DOWN, :-1, :]
    out[DOWN, :-1, :] = nbr[UP, 1:, :]
    return admit(GridGraph(W, H, g.snk_cap.copy(), g.src_cap.copy(), out))


def join(graphs, swapped=None, pad=False):
    """Knit graphs left to right with zero-capacity bridge columns between.

    All graphs must share one height unless ``pad`` is set, in which case
    shorter constituents gain zero-capacity rows at the bottom (split strips
    them again).  ``swapped`` records, per constituent, whether the caller
    embedded it swapped; join itself never swaps.  Returns the admitted
    composite and its layout.
    """
    graphs = list(graphs)
    if not graphs:
        raise SupergraphError("join needs at least one graph")
    if swapped is None:
        swapped = [False] * len(graphs)
    swapped = [bool(s) for s in swapped]
    if len(swapped) != len(graphs):
        raise SupergraphError("swapped flags must match the graph count")
    heights = [g.height for g in graphs]
    height = max(heights)
    if not pad and any(h != height for h in heights):
        raise SupergraphError(f"height mismatch {sorted(set(heights))}; pass pad=True to pad")
    total_w = sum(g.width for g in graphs) + len(graphs) - 1
    src = np.zeros((height, total_w), np.int64)
    snk = np.zeros((height, total_w), np.int64)
    nbr = np.zeros((4, height, total_w), np.int64)
    segments = []
    bridges = []
    off = 0
    for i, g in enumerate(graphs):
        cols = slice(off, off + g.width)
        rows = slice(0, g.height)
        src[rows, cols] = g.src_cap.reshape(g.height, g.width)
        snk[rows, cols] = g.snk_cap.reshape(g.height, g.width)
        nbr[:, rows, cols] = g.nbr_cap.reshape(4, g.height, g.width)
        segments.append(Segment(i, off, g.width, swapped[i]))
        off += g.width
        if i + 1 < len(graphs):
            bridges.append(off)
            off += 1
    composite = admit(GridGraph(total_w, height, src.reshape(-1), snk.reshape(-1),
                                nbr.reshape(4, -1)))
    layout = SupergraphLayout(tuple(segments), tuple(bridges), height)
    return composite, layout


def split(layout: SupergraphLayout, composite: CutResult, graphs) -> list:
    """Decode a composite cut into per-constituent cuts.

    ``graphs`` are the original (pre-swap, pre-pad) constituents; they supply
    the per-constituent flow values via cut_cost and the row counts used to
    strip padding.  Swapped spans are complemented.  The decoded flows must
    sum to the composite flow or the composite labels were not optimal.
    """
    graphs = list(graphs)
    if len(graphs) != len(layout.segments):
        raise SupergraphError("graph count does not match the layout")
    n = layout.total_width * layout.height
    if composite.labels.size != n:
        raise SupergraphError(
            f"composite labels have {composite.labels.size} entries, layout implies {n}")
    lab2 = composite.labels.reshape(layout.height, layout.total_width)
    results = []
    for seg, g in zip(layout.segments, graphs):
        if g.width != seg.width or g.height > layout.height:
            raise SupergraphError(f"constituent {seg.constituent} does not fit its segment")
        span = lab2[:g.height, seg.offset:seg.offset + seg.width]
        if seg.swapped:
            span = 1 - span
        labels = np.ascontiguousarray(span, dtype=np.uint8).reshape(-1)
        results.append(CutResult(cut_cost(g, labels), labels))
    total = sum(r.flow for r in results)
    if total != composite.flow:
        raise SupergraphError(
            f"decoded flows sum to {total}, composite flow is {composite.flow}; "
            "the composite labels are not an optimal cut")
    return results


def solve_composite(g: GridGraph, layout: SupergraphLayout | None = None) -> CutResult:
    """Solve a (possibly composite) graph; the single solver entry point for
    local execution and the wire service.

    Unswapped spans report the minimal source side.  Swapped spans report the
    complement of the sink-reaching set, i.e. the maximal source side, so
    that the complement taken later by ``split`` lands back on the minimal
    source side of the original constituent.
    """
    state = push_relabel_residual(g)
    labels = extract_canonical_cut(state).reshape(g.height, g.width)
    if layout is not None and layout.any_swapped:
        keep = sink_side(state)
        for seg in layout.segments:
            if seg.swapped:
                cols = slice(seg.offset, seg.offset + seg.width)
                labels[:, cols] = (~keep[:, cols]).astype(np.uint8)
    return CutResult(state.flow, labels.reshape(-1))


def family_swap_decision(problem: SeedProblem, schedule: LambdaSchedule) -> bool:
    """One swap decision for a whole lambda family, taken at mid-schedule."""
    return swap_decision(instantiate(problem, schedule[schedule.mid_index]))


def build_lambda_supergraph(problem: SeedProblem, schedule: LambdaSchedule, swap: bool):
    """Compose one problem's whole lambda family into a single composite.

    Returns (composite, layout, originals) where originals are the unswapped
    per-lambda graphs that ``split`` needs for decoding.
    """
    originals = [instantiate(problem, lam) for lam in schedule]
    embedded = [apply_swap(g) for g in originals] if swap else originals
    composite, layout = join(embedded, swapped=[swap] * len(originals))
    return composite, layout, originals


def build_seed_supergraph(problems, schedule: LambdaSchedule, swap_mode: str = "auto"):
    """Compose several problems' lambda families into one flat composite.

    Each problem gets its own swap decision (``swap_mode``: "auto" decides at
    mid-schedule, "on"/"off" force an orientation).  Segment order is problem
    major, schedule minor.  Returns (composite, layout, originals).
    """
    problems = list(problems)
    if not problems:
        raise SupergraphError("need at least one problem")
    if swap_mode not in ("auto", "on", "off"):
        raise SupergraphError(f"unknown swap_mode {swap_mode!r}")
    originals = []
    embedded = []
    flags = []
    for p in problems:
        if swap_mode == "auto":
            swap = family_swap_decision(p, schedule)
        else:
            swap = swap_mode == "on"
        for lam in schedule:
            g = instantiate(p, lam)
            originals.append(g)
            embedded.append(apply_swap(g) if swap else g)
            flags.append(swap)
    composite, layout = join(embedded, swapped=flags)
    return composite, layout, originals

"""Max-flow / min-cut solvers for grid graphs.

``maxflow_pushrelabel`` is the production solver: a synchronous push-relabel
sweep over the whole grid.  Each pulse scans the arc types in a fixed order
(sink, left, right, up, down, source), pushes excess along every admissible
arc of that type at once, then relabels the vertices that stay active.
Exact distance labels are recomputed every ``GLOBAL_RELABEL_INTERVAL``
pulses; vertices cut off from the sink are labeled to route their excess
straight back to the source.  All arithmetic is integer and the reported cut
is the residual-source-reachable side (the unique minimal source-side
optimum), so flows and label masks are bit-reproducible across runs and
machines.

``maxflow_reference`` is an independent shortest-augmenting-path solver kept
for differential testing; use it on small graphs only.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .grid import (CutResult, DIRECTIONS, GridGraph, LEFT, OPPOSITE, RIGHT, UP, DOWN,
                   admit, neighbor_values, scatter_to_neighbor)

GLOBAL_RELABEL_INTERVAL = 64

_BIG = np.int64(1) << 40


class SolverError(RuntimeError):
    pass


class NonMaximalFlowError(SolverError):
    """The residual state does not correspond to a maximum flow."""


@dataclass(eq=False)
class ResidualState:
    """Residual capacities left by a solver run; arrays are (H, W) shaped."""

    graph: GridGraph
    excess: np.ndarray
    from_source: np.ndarray  # residual of s->p arcs
    to_source: np.ndarray    # residual of p->s arcs
    to_sink: np.ndarray      # residual of p->t arcs
    nbr: np.ndarray          # (4, H, W) residual neighbor arcs
    flow: int


def _exact_heights(to_sink, to_source, nbr, n_vertices):
    """Exact distance labels: BFS levels to the sink; vertices cut off from
    the sink get source-return labels so trapped excess drains directly."""
    shape = to_sink.shape
    n = to_sink.size
    h = np.full(shape, np.int64(n_vertices + n + 1))
    seen = to_sink > 0
    h[seen] = 1
    frontier = seen.copy()
    level = 1
    while frontier.any():
        level += 1
        reach = np.zeros_like(frontier)
        for d in DIRECTIONS:
            reach |= (nbr[d] > 0) & neighbor_values(frontier, d, False)
        frontier = reach & ~seen
        h[frontier] = level
        seen |= frontier
    back = ~seen & (to_source > 0)
    h[back] = n_vertices + 1
    bseen = seen | back
    frontier = back
    level = 1
    while frontier.any():
        level += 1
        reach = np.zeros_like(frontier)
        for d in DIRECTIONS:
            reach |= (nbr[d] > 0) & neighbor_values(frontier, d, False)
        frontier = reach & ~bseen
        h[frontier] = n_vertices + level
        bseen |= frontier
    return h


def push_relabel_residual(g: GridGraph) -> ResidualState:
    """Run the push-relabel sweep to completion and return the residual state."""
    admit(g)
    H, W = g.height, g.width
    N = H * W + 2
    snk0 = g.snk_cap.reshape(H, W)
    e = g.src_cap.reshape(H, W).copy()
    from_source = np.zeros((H, W), np.int64)
    to_source = e.copy()
    to_sink = snk0.copy()
    nbr = g.nbr_cap.reshape(4, H, W).copy()
    h = _exact_heights(to_sink, to_source, nbr, N)
    pulses = 0
    limit = max(10_000, 40 * N)
    while True:
        if not (e > 0).any():
            break
        if pulses and pulses % GLOBAL_RELABEL_INTERVAL == 0:
            np.maximum(h, _exact_heights(to_sink, to_source, nbr, N), out=h)
        m = (e > 0) & (h == 1) & (to_sink > 0)
        if m.any():
            delta = np.where(m, np.minimum(e, to_sink), 0)
            e -= delta
            to_sink -= delta
        for d in DIRECTIONS:
            hn = neighbor_values(h, d, _BIG)
            m = (e > 0) & (nbr[d] > 0) & (h == hn + 1)
            if m.any():
                delta = np.where(m, np.minimum(e, nbr[d]), 0)
                nbr[d] -= delta
                scatter_to_neighbor(nbr[OPPOSITE[d]], d, delta)
                e -= delta
                scatter_to_neighbor(e, d, delta)
        m = (e > 0) & (h == N + 1) & (to_source > 0)
        if m.any():
            delta = np.where(m, np.minimum(e, to_source), 0)
            e -= delta
            to_source -= delta
            from_source += delta
        act = e > 0
        if act.any():
            best = np.where(to_sink > 0, np.int64(1), _BIG)
            for d in DIRECTIONS:
                hn = neighbor_values(h, d, _BIG)
                np.minimum(best, np.where(nbr[d] > 0, hn + 1, _BIG), out=best)
            np.minimum(best, np.where(to_source > 0, np.int64(N + 1), _BIG), out=best)
            lift = act & (best > h)
            if lift.any():
                h[lift] = best[lift]
        pulses += 1
        if pulses > limit:
            raise SolverError(f"push-relabel failed to converge within {limit} pulses")
    flow = int((snk0 - to_sink).sum())
    return ResidualState(g, e, from_source, to_source, to_sink, nbr, flow)


def source_side(state: ResidualState) -> np.ndarray:
    """Pixels reachable from the source in the residual graph, as a (H, W)
    bool mask.  This is the unique minimal source side among optimal cuts."""
    reach = state.from_source > 0
    frontier = reach.copy()
    while frontier.any():
        incoming = np.zeros_like(frontier)
        for d in DIRECTIONS:
            senders = frontier & (state.nbr[d] > 0)
            incoming |= neighbor_values(senders, OPPOSITE[d], False)
        frontier = incoming & ~reach
        reach |= frontier
    if (reach & (state.to_sink > 0)).any():
        raise NonMaximalFlowError("source side touches an unsaturated sink edge")
    return reach


def sink_side(state: ResidualState) -> np.ndarray:
    """Pixels that can still reach the sink in the residual graph.  Their
    complement is the unique maximal source side among optimal cuts."""
    reach = state.to_sink > 0
    frontier = reach.copy()
    while frontier.any():
        incoming = np.zeros_like(frontier)
        for d in DIRECTIONS:
            incoming |= (state.nbr[d] > 0) & neighbor_values(frontier, d, False)
        frontier = incoming & ~reach
        reach |= frontier
    if (reach & (state.from_source > 0)).any():
        raise NonMaximalFlowError("sink side touches an unsaturated source edge")
    return reach


def extract_canonical_cut(state: ResidualState) -> np.ndarray:
    """Flat uint8 label mask of the canonical (minimal source side) min cut.

    Raises NonMaximalFlowError when the state still carries pixel excess or
    an augmenting path, i.e. is not a completed maximum flow.
    """
    if bool(state.excess.any()):
        raise NonMaximalFlowError("pixel excess remains; this is a preflow, not a flow")
    return source_side(state).astype(np.uint8).reshape(-1)


def maxflow_pushrelabel(g: GridGraph) -> CutResult:
    """Maximum flow value plus canonical min-cut labels for an admitted graph."""
    state = push_relabel_residual(g)
    return CutResult(state.flow, extract_canonical_cut(state))


def maxflow_reference(g: GridGraph) -> CutResult:
    """Shortest-augmenting-path oracle, independent of the push-relabel path."""
    admit(g)
    W, H = g.width, g.height
    n = W * H
    S, T = n, n + 1
    to: list[int] = []
    cap: list[int] = []
    adj: list[list[int]] = [[] for _ in range(n + 2)]

    def arc_pair(u, v, cuv, cvu):
        adj[u].append(len(to))
        to.append(v)
        cap.append(int(cuv))
        adj[v].append(len(to))
        to.append(u)
        cap.append(int(cvu))

    src, snk, nbr = g.src_cap, g.snk_cap, g.nbr_cap
    for p in range(n):
        arc_pair(S, p, src[p], 0)
        arc_pair(p, T, snk[p], 0)
    for y in range(H):
        base = y * W
        for x in range(W):
            p = base + x
            if x + 1 < W:
                arc_pair(p, p + 1, nbr[RIGHT, p], nbr[LEFT, p + 1])
            if y + 1 < H:
                arc_pair(p, p + W, nbr[DOWN, p], nbr[UP, p + W])

    flow = 0
    while True:
        parent = [-1] * (n + 2)
        parent[S] = -2
        q = deque([S])
        while q and parent[T] == -1:
            u = q.popleft()
            for a in adj[u]:
                v = to[a]
                if parent[v] == -1 and cap[a] > 0:
                    parent[v] = a
                    if v == T:
                        break
                    q.append(v)
        if parent[T] == -1:
            break
        bott = None
        v = T
        while v != S:
            a = parent[v]
            bott = cap[a] if bott is None else min(bott, cap[a])
            v = to[a ^ 1]
        v = T
        while v != S:
            a = parent[v]
            cap[a] -= bott
            cap[a ^ 1] += bott
            v = to[a ^ 1]
        flow += bott

    seen = bytearray(n + 2)
    seen[S] = 1
    q = deque([S])
    while q:
        u = q.popleft()
        for a in adj[u]:
            v = to[a]
            if not seen[v] and cap[a] > 0:
                seen[v] = 1
                q.append(v)
    labels = np.frombuffer(bytes(seen[:n]), dtype=np.uint8).copy()
    return CutResult(flow, labels)

"""Shared builders and independent oracles used across the test suite."""

import numpy as np

from pmflow.grid import (DIRECTIONS, DOWN, GridGraph, LEFT, RIGHT, UP, admit, cut_cost)


def make_grid(width, height, src=0, snk=0, left=0, right=0, up=0, down=0):
    """Build an admitted grid graph; scalar capacities broadcast, neighbor
    borders are zeroed automatically."""
    n = width * height

    def full(v):
        if np.isscalar(v):
            return np.full(n, v, np.int64)
        return np.asarray(v, np.int64).reshape(-1).copy()

    g = GridGraph(width, height, full(src), full(snk),
                  np.stack([full(left), full(right), full(up), full(down)]))
    nb = g.nbr_cap.reshape(4, height, width)
    nb[LEFT, :, 0] = 0
    nb[RIGHT, :, -1] = 0
    nb[UP, 0, :] = 0
    nb[DOWN, -1, :] = 0
    return admit(g)


def random_grid(rng, width=None, height=None, max_side=8, cap_hi=10):
    """Random admitted grid with capacities uniform on [0, cap_hi]."""
    if width is None:
        width = int(rng.integers(1, max_side + 1))
    if height is None:
        height = int(rng.integers(1, max_side + 1))
    n = width * height
    return make_grid(
        width, height,
        src=rng.integers(0, cap_hi + 1, n),
        snk=rng.integers(0, cap_hi + 1, n),
        left=rng.integers(0, cap_hi + 1, n),
        right=rng.integers(0, cap_hi + 1, n),
        up=rng.integers(0, cap_hi + 1, n),
        down=rng.integers(0, cap_hi + 1, n),
    )


def _neighbor_index(width, height, d):
    idx = np.full(width * height, -1, np.int64)
    grid = np.arange(width * height).reshape(height, width)
    tgt = idx.reshape(height, width)
    if d == LEFT:
        tgt[:, 1:] = grid[:, :-1]
    elif d == RIGHT:
        tgt[:, :-1] = grid[:, 1:]
    elif d == UP:
        tgt[1:, :] = grid[:-1, :]
    else:
        tgt[:-1, :] = grid[1:, :]
    return idx


def all_cut_costs(g):
    """Cut cost of every one of the 2**n masks, vectorized (n small)."""
    n = g.n
    assert n <= 20
    masks = ((np.arange(1 << n, dtype=np.int64)[:, None] >> np.arange(n)) & 1).astype(bool)
    cost = masks @ g.snk_cap + (~masks) @ g.src_cap
    for d in DIRECTIONS:
        idx = _neighbor_index(g.width, g.height, d)
        has = idx >= 0
        nbr_fg = np.ones_like(masks)
        nbr_fg[:, has] = masks[:, idx[has]]
        cost += (masks & ~nbr_fg) @ g.nbr_cap[d]
    return masks, cost


def brute_force_min_cut(g):
    """(min cut value, minimal source-side mask) by exhaustive enumeration.

    The minimal source side is the intersection of all optimal masks, which
    is itself optimal; this is what the solvers' canonical cut must match.
    """
    masks, cost = all_cut_costs(g)
    best = int(cost.min())
    optimal = masks[cost == best]
    minimal = np.logical_and.reduce(optimal, axis=0)
    assert cut_cost(g, minimal.astype(np.uint8)) == best
    return best, minimal.astype(np.uint8)


def assert_cut_equal(a, b, msg=""):
    assert a.flow == b.flow, f"flow mismatch: {a.flow} != {b.flow} {msg}"
    assert np.array_equal(a.labels, b.labels), f"label mismatch {msg}"

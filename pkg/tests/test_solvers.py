"""Differential tests: push-relabel vs augmenting-path oracle vs brute force."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmflow.grid import CAP_MAX, cut_cost
from pmflow.solvers import (
    NonMaximalFlowError, extract_canonical_cut, maxflow_pushrelabel,
    maxflow_reference, push_relabel_residual, sink_side, source_side)

from conftest import assert_cut_equal, brute_force_min_cut, make_grid, random_grid


def both(g):
    return maxflow_pushrelabel(g), maxflow_reference(g)


def test_single_pixel_no_capacity():
    a, b = both(make_grid(1, 1))
    assert a.flow == 0
    assert a.labels.tolist() == [0]
    assert_cut_equal(a, b)


def test_two_pixel_chain():
    # s -5-> p0 -2-> p1 -3-> t: bottleneck 2, cut severs the middle edge.
    g = make_grid(2, 1, src=[5, 0], snk=[0, 3], right=[2, 0], left=[0, 2])
    a, b = both(g)
    assert a.flow == 2
    assert a.labels.tolist() == [1, 0]
    assert_cut_equal(a, b)
    assert cut_cost(g, a.labels) == a.flow


def test_two_by_two_diagonal():
    # Strong source at one corner, strong sink at the opposite corner,
    # unit internal edges: two unit paths saturate.
    g = make_grid(2, 2, src=[9, 0, 0, 0], snk=[0, 0, 0, 9],
                  left=[0, 1, 0, 1], right=[1, 0, 1, 0],
                  up=[0, 0, 1, 1], down=[1, 1, 0, 0])
    a, b = both(g)
    assert a.flow == 2
    assert a.labels.tolist() == [1, 0, 0, 0]
    assert_cut_equal(a, b)


def test_zero_graph_has_empty_source_side():
    a, b = both(make_grid(3, 3))
    assert a.flow == 0
    assert not a.labels.any()
    assert_cut_equal(a, b)


def test_unreachable_foreground_keeps_labels_minimal():
    # Positive src with no path to t: flow 0, but the pixels stay source-side
    # because the zero cut {all foreground} is the unique minimum.
    g = make_grid(2, 1, src=[5, 0], snk=[0, 0], right=[2, 0], left=[0, 2])
    a, b = both(g)
    assert a.flow == 0
    assert a.labels.tolist() == [1, 1]
    assert_cut_equal(a, b)


def test_seed_pixel_is_never_severed():
    rng = np.random.default_rng(7)
    for _ in range(20):
        g = random_grid(rng, max_side=4, cap_hi=9)
        src = g.src_cap.copy()
        seed = int(rng.integers(0, g.n))
        src[seed] = CAP_MAX
        g2 = make_grid(g.width, g.height, src=src, snk=g.snk_cap,
                       left=g.nbr_cap[0], right=g.nbr_cap[1],
                       up=g.nbr_cap[2], down=g.nbr_cap[3])
        cut = maxflow_pushrelabel(g2)
        assert cut.labels[seed] == 1
        assert cut.flow < CAP_MAX


def test_oracle_sweep_small_grids():
    rng = np.random.default_rng(123)
    for _ in range(120):
        g = random_grid(rng, max_side=6, cap_hi=10)
        a, b = both(g)
        assert_cut_equal(a, b, msg=f"on {g.width}x{g.height}")
        assert cut_cost(g, a.labels) == a.flow


def test_brute_force_tiny_grids():
    rng = np.random.default_rng(99)
    for _ in range(40):
        g = random_grid(rng, max_side=3, cap_hi=8)
        best, minimal = brute_force_min_cut(g)
        a, b = both(g)
        assert a.flow == best
        assert np.array_equal(a.labels, minimal)
        assert np.array_equal(b.labels, minimal)


def test_flow_bounded_by_terminal_capacity():
    rng = np.random.default_rng(5)
    for _ in range(30):
        g = random_grid(rng, max_side=5)
        cut = maxflow_pushrelabel(g)
        assert cut.flow <= min(int(g.src_cap.sum()), int(g.snk_cap.sum()))


def test_repeated_runs_are_bit_identical():
    rng = np.random.default_rng(11)
    g = random_grid(rng, width=6, height=5)
    a1 = maxflow_pushrelabel(g)
    a2 = maxflow_pushrelabel(g)
    assert a1.flow == a2.flow
    assert a1.labels.tobytes() == a2.labels.tobytes()


def test_extract_rejects_preflow_state():
    g = make_grid(2, 2, src=[4, 0, 0, 0], snk=[0, 0, 0, 4],
                  right=[1, 0, 1, 0], left=[0, 1, 0, 1],
                  down=[1, 1, 0, 0], up=[0, 0, 1, 1])
    state = push_relabel_residual(g)
    extract_canonical_cut(state)  # fine on the completed state
    state.excess[0, 0] = 3
    with pytest.raises(NonMaximalFlowError):
        extract_canonical_cut(state)


def test_source_and_sink_sides_partition_optimally():
    # minimal side (reachable from s) is contained in the complement of the
    # sink-reaching set, and both are optimal cuts.
    rng = np.random.default_rng(21)
    for _ in range(25):
        g = random_grid(rng, max_side=4, cap_hi=6)
        state = push_relabel_residual(g)
        lo = source_side(state)
        hi = ~sink_side(state)
        assert not (lo & ~hi).any()
        assert cut_cost(g, lo.reshape(-1).astype(np.uint8)) == state.flow
        assert cut_cost(g, hi.reshape(-1).astype(np.uint8)) == state.flow


def test_against_scipy_flow_values():
    scipy_sparse = pytest.importorskip("scipy.sparse")
    from scipy.sparse.csgraph import maximum_flow

    rng = np.random.default_rng(42)
    for _ in range(40):
        g = random_grid(rng, max_side=5, cap_hi=9)
        n = g.n
        S, T = n, n + 1
        rows, cols, vals = [], [], []
        for p in range(n):
            rows += [S, p]
            cols += [p, T]
            vals += [int(g.src_cap[p]), int(g.snk_cap[p])]
        for y in range(g.height):
            for x in range(g.width):
                p = y * g.width + x
                if x + 1 < g.width:
                    rows += [p, p + 1]
                    cols += [p + 1, p]
                    vals += [int(g.nbr_cap[1, p]), int(g.nbr_cap[0, p + 1])]
                if y + 1 < g.height:
                    rows += [p, p + g.width]
                    cols += [p + g.width, p]
                    vals += [int(g.nbr_cap[3, p]), int(g.nbr_cap[2, p + g.width])]
        mat = scipy_sparse.csr_matrix(
            (np.asarray(vals, np.int32), (rows, cols)), shape=(n + 2, n + 2))
        expected = int(maximum_flow(mat, S, T).flow_value)
        assert maxflow_pushrelabel(g).flow == expected


@st.composite
def small_grids(draw):
    w = draw(st.integers(1, 4))
    h = draw(st.integers(1, 4))
    n = w * h
    caps = st.lists(st.integers(0, 12), min_size=n, max_size=n)
    return make_grid(w, h, src=draw(caps), snk=draw(caps), left=draw(caps),
                     right=draw(caps), up=draw(caps), down=draw(caps))


@settings(max_examples=50, deadline=None)
@given(small_grids())
def test_property_solvers_agree(g):
    a, b = both(g)
    assert_cut_equal(a, b)
    assert cut_cost(g, a.labels) == a.flow

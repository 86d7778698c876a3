"""Knit/decode round trips, s-t swap algebra, composite solving."""

import numpy as np
import pytest

from pmflow.grid import CAP_MAX, CutResult, GridGraph, cut_cost
from pmflow.parametric import LambdaSchedule, SeedProblem, instantiate, solve_schedule_sequential
from pmflow.solvers import maxflow_pushrelabel, maxflow_reference
from pmflow.supergraph import (
    SupergraphError,
    apply_swap,
    build_lambda_supergraph,
    build_seed_supergraph,
    family_swap_decision,
    join,
    solve_composite,
    split,
    swap_decision,
    terminal_balance,
)

from conftest import make_grid, random_grid


def one_pixel(src, snk):
    return make_grid(1, 1, src=src, snk=snk)


def solve_and_split(graphs, swapped=None, pad=False):
    """Embed (swapping where flagged), solve once, decode against originals."""
    flags = list(swapped) if swapped is not None else [False] * len(graphs)
    embedded = [apply_swap(g) if f else g for g, f in zip(graphs, flags)]
    composite, layout = join(embedded, swapped=flags, pad=pad)
    cut = solve_composite(composite, layout)
    return cut, split(layout, cut, graphs), composite, layout


class TestJoin:
    def test_single_graph_identity(self):
        g = make_grid(3, 2, src=[5, 0, 0, 1, 0, 0], snk=[0, 0, 4, 0, 0, 2],
                      right=[1, 2, 0, 3, 1, 0], left=[0, 2, 1, 0, 1, 3])
        composite, layout = join([g])
        assert composite.equals(g)
        assert layout.bridge_columns == ()
        assert layout.total_width == 3

    def test_two_singletons_flows_add(self):
        a = one_pixel(4, 1)   # flow 1
        b = one_pixel(2, 7)   # flow 2
        composite, layout = join([a, b])
        assert composite.width == 3 and composite.height == 1
        assert layout.bridge_columns == (1,)
        res = maxflow_pushrelabel(composite)
        assert res.flow == 3

    def test_bridge_column_carries_nothing(self):
        a = make_grid(2, 2, src=3, snk=2, right=[1, 0, 1, 0], left=[0, 1, 0, 1])
        b = make_grid(2, 2, src=1, snk=4)
        composite, layout = join([a, b])
        col = layout.bridge_columns[0]
        grid = composite.nbr_cap.reshape(4, 2, 5)
        assert grid[:, :, col].sum() == 0
        assert composite.src_cap.reshape(2, 5)[:, col].sum() == 0
        assert composite.snk_cap.reshape(2, 5)[:, col].sum() == 0
        # edges pointing into the bridge are zero too (they were borders)
        assert grid[1, :, col - 1].sum() == 0  # RIGHT from last column of a
        assert grid[0, :, col + 1].sum() == 0  # LEFT from first column of b

    def test_height_mismatch_requires_pad(self):
        a = make_grid(2, 2, src=1)
        b = make_grid(2, 3, snk=1)
        with pytest.raises(SupergraphError):
            join([a, b])
        composite, layout = join([a, b], pad=True)
        assert composite.height == 3
        # padded rows of the shorter graph stay empty
        assert composite.src_cap.reshape(3, 5)[2, :2].sum() == 0

    def test_empty_and_mismatched_flags_rejected(self):
        with pytest.raises(SupergraphError):
            join([])
        with pytest.raises(SupergraphError):
            join([one_pixel(1, 1)], swapped=[True, False])


class TestDecomposition:
    def test_flow_splits_exactly_random_batches(self):
        rng = np.random.default_rng(123)
        for _ in range(30):
            k = int(rng.integers(1, 6))
            h = int(rng.integers(1, 7))
            graphs = [random_grid(rng, width=int(rng.integers(1, 7)), height=h)
                      for _ in range(k)]
            cut, parts, composite, layout = solve_and_split(graphs)
            direct = [maxflow_pushrelabel(g) for g in graphs]
            assert cut.flow == sum(d.flow for d in direct)
            for part, d, g in zip(parts, direct, graphs):
                assert part.flow == d.flow
                assert np.array_equal(part.labels, d.labels)
                assert cut_cost(g, part.labels) == part.flow

    def test_bridge_pixels_stay_background(self):
        rng = np.random.default_rng(5)
        graphs = [random_grid(rng, width=3, height=3) for _ in range(3)]
        composite, layout = join(graphs)
        cut = solve_composite(composite, layout)
        lab = cut.labels.reshape(layout.height, layout.total_width)
        for col in layout.bridge_columns:
            assert lab[:, col].sum() == 0

    def test_split_rejects_non_optimal_labels(self):
        graphs = [one_pixel(4, 1), one_pixel(2, 7)]
        composite, layout = join(graphs)
        bogus = CutResult(0, np.zeros(composite.n, np.uint8))
        with pytest.raises(SupergraphError):
            split(layout, bogus, graphs)

    def test_split_rejects_wrong_graph_count(self):
        graphs = [one_pixel(4, 1), one_pixel(2, 7)]
        composite, layout = join(graphs)
        cut = solve_composite(composite, layout)
        with pytest.raises(SupergraphError):
            split(layout, cut, graphs[:1])

    def test_padded_join_decodes_original_shapes(self):
        rng = np.random.default_rng(9)
        a = random_grid(rng, width=3, height=2)
        b = random_grid(rng, width=2, height=4)
        cut, parts, _, _ = solve_and_split([a, b], pad=True)
        assert parts[0].labels.size == a.n
        assert parts[1].labels.size == b.n
        for part, g in zip(parts, [a, b]):
            direct = maxflow_pushrelabel(g)
            assert part.flow == direct.flow
            assert np.array_equal(part.labels, direct.labels)


class TestSwap:
    def test_swap_exchanges_terminals_and_reverses_arcs(self):
        g = make_grid(2, 1, src=[3, 0], snk=[0, 5], right=[2, 0], left=[0, 7])
        s = apply_swap(g)
        assert s.src_cap.tolist() == [0, 5]
        assert s.snk_cap.tolist() == [3, 0]
        # edge 0->1 in the swapped graph carries the old 1->0 capacity
        assert s.nbr_cap[1].tolist() == [7, 0]
        assert s.nbr_cap[0].tolist() == [0, 2]

    def test_involution_bit_for_bit(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            g = random_grid(rng)
            assert apply_swap(apply_swap(g)).equals(g)

    def test_flow_invariant_under_swap(self):
        rng = np.random.default_rng(22)
        for _ in range(40):
            g = random_grid(rng)
            f0 = maxflow_pushrelabel(g).flow
            f1 = maxflow_pushrelabel(apply_swap(g)).flow
            assert f0 == f1
            assert maxflow_reference(apply_swap(g)).flow == f0

    def test_swap_decision_counts_pixels(self):
        lean_sink = make_grid(3, 1, src=[9, 0, 0], snk=[0, 1, 1])
        assert swap_decision(lean_sink) is True
        lean_src = apply_swap(lean_sink)
        assert swap_decision(lean_src) is False

    def test_swap_decision_tie_is_no_swap(self):
        g = make_grid(2, 1, src=[5, 0], snk=[0, 5])
        assert swap_decision(g) is False
        assert swap_decision(make_grid(1, 1)) is False

    def test_terminal_balance_stats(self):
        g = make_grid(2, 2, src=[4, 0, 1, 0], snk=[1, 2, 0, 0])
        st = terminal_balance(g)
        assert (st.positive_count, st.negative_count) == (2, 1)
        assert (st.positive_sum, st.negative_sum) == (4, 2)

    def test_swapped_segment_decodes_to_canonical_labels(self):
        rng = np.random.default_rng(33)
        for _ in range(30):
            g = random_grid(rng)
            cut, parts, _, _ = solve_and_split([g], swapped=[True])
            direct = maxflow_pushrelabel(g)
            assert parts[0].flow == direct.flow
            assert np.array_equal(parts[0].labels, direct.labels)

    def test_mixed_swap_batch_decodes_exactly(self):
        rng = np.random.default_rng(34)
        for _ in range(15):
            k = int(rng.integers(2, 5))
            h = int(rng.integers(1, 6))
            graphs = [random_grid(rng, width=int(rng.integers(1, 6)), height=h)
                      for _ in range(k)]
            flags = [bool(rng.integers(0, 2)) for _ in range(k)]
            embedded = [apply_swap(g) if f else g for g, f in zip(graphs, flags)]
            composite, layout = join(embedded, swapped=flags)
            cut = solve_composite(composite, layout)
            parts = split(layout, cut, graphs)
            for part, g in zip(parts, graphs):
                direct = maxflow_pushrelabel(g)
                assert part.flow == direct.flow
                assert np.array_equal(part.labels, direct.labels)


class TestLambdaSupergraph:
    def problem(self, rng, width=4, height=4):
        n = width * height
        pairwise = np.zeros((4, height, width), np.int64)
        pairwise[1, :, :-1] = rng.integers(0, 5, (height, width - 1))
        pairwise[0, :, 1:] = rng.integers(0, 5, (height, width - 1))
        pairwise[3, :-1, :] = rng.integers(0, 5, (height - 1, width))
        pairwise[2, 1:, :] = rng.integers(0, 5, (height - 1, width))
        return SeedProblem(
            width=width, height=height,
            unary_base=rng.integers(0, 6, n),
            unary_slope=rng.integers(0, 3, n),
            sink_base=rng.integers(0, 25, n),
            pairwise=pairwise.reshape(4, n),
            fg_seeds=frozenset({0}), bg_seeds=frozenset({n - 1}),
        )

    @pytest.mark.parametrize("swap", [False, True])
    def test_matches_sequential_solve(self, swap):
        rng = np.random.default_rng(55 + swap)
        schedule = LambdaSchedule((0, 1, 3, 8, 20))
        for _ in range(6):
            p = self.problem(rng)
            composite, layout, originals = build_lambda_supergraph(p, schedule, swap)
            assert len(layout.segments) == len(schedule)
            assert all(s.swapped == swap for s in layout.segments)
            parts = split(layout, solve_composite(composite, layout), originals)
            seq = solve_schedule_sequential(p, schedule)
            for part, cut in zip(parts, seq.cuts):
                assert part.flow == cut.flow
                assert np.array_equal(part.labels, cut.labels)

    def test_family_swap_decision_uses_mid_lambda(self):
        rng = np.random.default_rng(60)
        p = self.problem(rng)
        schedule = LambdaSchedule((0, 1, 3, 8, 20))
        mid = instantiate(p, schedule[schedule.mid_index])
        assert family_swap_decision(p, schedule) == swap_decision(mid)

    def test_seed_supergraph_mixes_decisions(self):
        rng = np.random.default_rng(70)
        schedule = LambdaSchedule((0, 2, 9))
        problems = [self.problem(rng) for _ in range(3)]
        composite, layout, originals = build_seed_supergraph(problems, schedule, "auto")
        assert len(layout.segments) == 3 * len(schedule)
        assert len(originals) == 3 * len(schedule)
        parts = split(layout, solve_composite(composite, layout), originals)
        i = 0
        for p in problems:
            seq = solve_schedule_sequential(p, schedule)
            for cut in seq.cuts:
                assert parts[i].flow == cut.flow
                assert np.array_equal(parts[i].labels, cut.labels)
                i += 1

    @pytest.mark.parametrize("mode,expect", [("on", True), ("off", False)])
    def test_seed_supergraph_forced_modes(self, mode, expect):
        rng = np.random.default_rng(80)
        schedule = LambdaSchedule((1, 4))
        composite, layout, originals = build_seed_supergraph(
            [self.problem(rng)], schedule, mode)
        assert all(s.swapped == expect for s in layout.segments)
        parts = split(layout, solve_composite(composite, layout), originals)
        assert len(parts) == 2

    def test_bad_swap_mode_rejected(self):
        rng = np.random.default_rng(81)
        with pytest.raises(SupergraphError):
            build_seed_supergraph([self.problem(rng)], LambdaSchedule((1,)), "maybe")
        with pytest.raises(SupergraphError):
            build_seed_supergraph([], LambdaSchedule((1,)), "auto")


class TestSolveComposite:
    def test_plain_graph_no_layout(self):
        rng = np.random.default_rng(90)
        for _ in range(10):
            g = random_grid(rng)
            a = solve_composite(g)
            b = maxflow_pushrelabel(g)
            assert a.flow == b.flow and np.array_equal(a.labels, b.labels)

    def test_composite_labels_cost_equals_flow(self):
        # even with swapped spans the emitted labels are an optimal cut of
        # the composite itself (maximal side is optimal too)
        rng = np.random.default_rng(91)
        for _ in range(10):
            g = random_grid(rng, max_side=5)
            composite, layout = join([apply_swap(g), g], swapped=[True, False])
            cut = solve_composite(composite, layout)
            assert cut_cost(composite, cut.labels) == cut.flow

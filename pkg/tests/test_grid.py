"""Grid construction, admission failures, and cut-cost arithmetic."""

import numpy as np
import pytest

from pmflow.grid import (
    BorderEdgeError, CAP_MAX, CapacityOverflowError, GridGraph, LEFT,
    NegativeCapacityError, RIGHT, ShapeError, admit, cut_cost)

from conftest import make_grid


def test_admit_returns_same_frozen_object():
    g = make_grid(3, 2, src=1, snk=1)
    assert admit(g) is g
    assert not g.src_cap.flags.writeable
    with pytest.raises(ValueError):
        g.snk_cap[0] = 5


def test_admit_rejects_negative_capacity():
    g = GridGraph.zeros(2, 2)
    g.src_cap[1] = -1
    with pytest.raises(NegativeCapacityError):
        admit(g)


def test_admit_rejects_nonzero_border_edge():
    g = GridGraph.zeros(2, 2)
    g.nbr_cap.reshape(4, 2, 2)[LEFT, 0, 0] = 3
    with pytest.raises(BorderEdgeError):
        admit(g)
    g2 = GridGraph.zeros(2, 2)
    g2.nbr_cap.reshape(4, 2, 2)[RIGHT, 1, 1] = 1
    with pytest.raises(BorderEdgeError):
        admit(g2)


def test_admit_rejects_capacity_above_cap_max():
    g = GridGraph.zeros(1, 1)
    g.snk_cap[0] = CAP_MAX + 1
    with pytest.raises(CapacityOverflowError):
        admit(g)


def test_cap_max_itself_is_admissible():
    g = make_grid(1, 1, src=CAP_MAX, snk=CAP_MAX)
    assert int(g.src_cap[0]) == CAP_MAX


def test_shape_mismatch_rejected():
    with pytest.raises(ShapeError):
        GridGraph(2, 2, np.zeros(3), np.zeros(4), np.zeros((4, 4)))
    with pytest.raises(ShapeError):
        GridGraph(0, 2, np.zeros(0), np.zeros(0), np.zeros((4, 0)))


def test_cut_cost_terminal_only_masks():
    g = make_grid(2, 2, src=[1, 2, 3, 4], snk=[5, 6, 7, 8])
    assert cut_cost(g, [0, 0, 0, 0]) == 1 + 2 + 3 + 4
    assert cut_cost(g, [1, 1, 1, 1]) == 5 + 6 + 7 + 8


def test_cut_cost_counts_crossing_edges_once_per_direction():
    # 1x2 grid, cut between the two pixels: pays p0->p1 only.
    g = make_grid(2, 1, src=[5, 0], snk=[0, 3], right=[2, 0], left=[0, 2])
    assert cut_cost(g, [1, 0]) == 2
    assert cut_cost(g, [0, 1]) == 5 + 3 + 2  # src[0] + snk[1] + p1->p0


def test_cut_cost_rejects_bad_masks():
    g = make_grid(2, 1, src=1)
    with pytest.raises(ShapeError):
        cut_cost(g, [1, 0, 1])
    with pytest.raises(ValueError):
        cut_cost(g, [2, 0])

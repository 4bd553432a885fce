import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cclf_altruism.graph import (DegenerateGeometryError, InteractionGraph, build_proximity_graph,
                                 in_neighbors, out_neighbors)


def test_proximity_edges():
    g = build_proximity_graph([(0, 0), (1, 0), (5, 0)], 2.0)
    assert g.edges == {(0, 1), (1, 0)}
    assert in_neighbors(g, 1) == {0}


def test_far_apart_has_no_edges():
    assert build_proximity_graph([(0, 0), (9, 9)], 2.0).edges == frozenset()


def test_boundary_is_inclusive():
    assert build_proximity_graph([(0, 0), (2, 0)], 2.0).edges == {(0, 1), (1, 0)}


def test_coincident_positions_rejected():
    with pytest.raises(DegenerateGeometryError):
        build_proximity_graph([(1, 1), (1, 1)], 2.0)


def test_nonpositive_delta_rejected():
    with pytest.raises(ValueError):
        build_proximity_graph([(0, 0), (1, 0)], 0.0)


def test_neighbor_sets():
    assert in_neighbors(InteractionGraph.from_edges(1, []), 0) == set()
    assert in_neighbors(InteractionGraph.complete(3), 2) == {0, 1}
    directed = InteractionGraph.from_edges(2, [(0, 1)])
    assert out_neighbors(directed, 1) == {0}
    assert out_neighbors(directed, 0) == set()
    assert in_neighbors(directed, 0) == {1}
    assert not directed.is_symmetric()


def test_bad_graphs():
    with pytest.raises(ValueError):
        InteractionGraph.from_edges(2, [(0, 0)])
    with pytest.raises(ValueError):
        InteractionGraph.from_edges(2, [(0, 2)])
    with pytest.raises((ValueError, IndexError)):
        in_neighbors(InteractionGraph.complete(2), 5)


points = st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=1, max_size=7, unique=True)


@settings(max_examples=60, deadline=None)
@given(points, st.floats(0.1, 40))
def test_proximity_graph_is_symmetric(pts, delta):
    pos = np.array(pts, float) / 10
    g = build_proximity_graph(pos, delta)
    assert g.is_symmetric()
    for i in range(len(pos)):
        assert in_neighbors(g, i) == out_neighbors(g, i)
        assert i not in in_neighbors(g, i)

import json
from itertools import combinations
from pathlib import Path

import jsonschema
import pytest

from twoenum.asm import BottomSpec
from twoenum.graphs import (WeightedGraph, build_aztec_rectangle, build_aztec_rectangle_kept_bottom,
                            build_fortress, build_gn, build_teeth_region, find_crossing, is_bipartite,
                            iter_builders, mirror, normalize_fortress_bottom, pending_pair_present,
                            same_embedding, vertex_on_edge)
from twoenum.matchings import matching_sum_bruteforce, matching_sum_pfaffian

SCHEMA = json.loads((Path(__file__).parents[1] / "src/twoenum/schemas/graph.schema.json").read_text())


def test_2x3_rectangle():
    g = build_aztec_rectangle(2, 3)
    assert (g.num_vertices, g.num_edges) == (17, 24)
    assert all(w == 1 for _, _, w in g.edges())


@pytest.mark.parametrize("m,k", [(1, 1), (2, 2), (3, 5), (4, 1)])
def test_rectangle_counts(m, k):
    g = build_aztec_rectangle(m, k)
    assert g.num_vertices == m * (k + 1) + (m + 1) * k
    assert g.num_edges == 4 * m * k


def test_square_corners():
    g = build_aztec_rectangle(1, 1)
    assert g.vertices() == [(0, 0), (1, -1), (1, 1), (2, 0)]
    assert matching_sum_bruteforce(g) == 2


def test_kept_bottom():
    g = build_aztec_rectangle_kept_bottom(1, 2, [1])
    assert g.num_vertices == 6 and matching_sum_bruteforce(g) == 2
    assert build_aztec_rectangle_kept_bottom(1, 1, [1]) == build_aztec_rectangle(1, 1)
    with pytest.raises(ValueError, match="no perfect matching"):
        build_aztec_rectangle_kept_bottom(2, 3, [1])
    with pytest.raises(ValueError):
        build_aztec_rectangle_kept_bottom(2, 3, [3, 1])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_teeth_region_is_kept_bottom_rectangle(n):
    g = build_teeth_region(n)
    assert g == build_aztec_rectangle_kept_bottom(n, 2 * n - 1, range(1, 2 * n, 2))
    k = 2 * n - 1
    assert g.num_vertices == n * (k + 1) + (n + 1) * k - (k - n)
    bottom = sorted(v for v in g.vertices() if v[1] == -2 * n + 1)
    assert [v[0] for v in bottom] == [4 * i - 3 for i in range(1, n + 1)]


def test_teeth_n1_is_square():
    assert build_teeth_region(1) == build_aztec_rectangle(1, 1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gn_shape(n):
    g = build_gn(n)
    assert g.num_vertices == n * (2 * n + 1) + (n + 1) * 2 * n + n
    assert g.num_edges == 8 * n * n + 2 * n
    halves = sum(1 for _, _, w in g.edges() if w == 0.5)
    assert halves == 4 * (n * n)  # squares with r + c even
    teeth = [v for v in g.vertices() if "tooth" in g.vertex_tags(v)]
    assert teeth == [(4 * i - 2, -2 * n) for i in range(1, n + 1)]


def test_g1():
    g = build_gn(1)
    assert g.num_vertices == 8
    assert matching_sum_bruteforce(g) == matching_sum_pfaffian(g) == 1.5


def test_fortress_n1_pieces():
    with_pending = build_fortress(1, [0])
    without = build_fortress(1, [2])
    assert matching_sum_bruteforce(without) == 2
    assert matching_sum_bruteforce(with_pending) == 1
    assert with_pending.num_vertices == without.num_vertices + 2


def test_fortress_pending_rule():
    assert pending_pair_present(3, 2) and not pending_pair_present(3, 4)
    assert pending_pair_present(2, 3) and not pending_pair_present(2, 1)
    assert pending_pair_present(1, 0)


def test_fortress_drawn_pattern():
    # the drawn order-6 example has c = (2, 2, 4): pendants under columns 1-4 only
    g = build_fortress(3, [2, 2, 4])
    pendants = sorted(v for v in g.vertices() if "pending" in g.vertex_tags(v))
    assert [p[0] for p in pendants] == [2, 5, 8, 11]
    assert all(p[1] == -8 for p in pendants)
    # even cells are the connector-bearing ones
    assert (2, 0) not in g and g.degree((2, 1)) == 3 and g.degree((5, 1)) == 2


def test_fortress_needs_fixed_bottom():
    with pytest.raises(ValueError):
        build_fortress(2, BottomSpec.free(2))
    with pytest.raises(ValueError):
        build_fortress(2, [1, 2])


@pytest.mark.parametrize("n", [1, 2])
def test_normalize_preserves_matchings(n):
    for cs in BottomSpec.free(n).configurations():
        g = build_fortress(n, cs)
        h = normalize_fortress_bottom(g, n)
        assert matching_sum_bruteforce(g) == matching_sum_bruteforce(h)
        assert normalize_fortress_bottom(h, n) == h


def test_normalize_noop_when_all_pendants_present():
    n = 3
    g = build_fortress(n, [n - 1] * n)
    assert normalize_fortress_bottom(g, n) == g


def test_mirror_involution_and_count():
    for _, g in iter_builders(40):
        assert mirror(mirror(g)) == g
        assert is_bipartite(g)
    g = build_gn(2)
    assert matching_sum_bruteforce(mirror(g)) == matching_sum_bruteforce(g)
    assert mirror(g) != g


def test_builders_are_planar():
    for label, g in iter_builders(200):
        assert find_crossing(g) is None, label
        assert vertex_on_edge(g) is None, label


def test_same_embedding_ignores_translation_and_scale():
    g = build_gn(2)
    assert same_embedding(g, g.scaled(4).translated(3, -7))
    assert not same_embedding(g, mirror(g))


def test_json_round_trip_and_schema():
    g = normalize_fortress_bottom(build_fortress(2, [1, 3]), 2)
    data = g.to_dict()
    jsonschema.validate(data, SCHEMA)
    back = WeightedGraph.from_json(g.to_json())
    assert back == g
    assert back.vertex_tags((2, -5)) == g.vertex_tags((2, -5))
    gn = build_gn(2)
    assert {e["w"] for e in gn.to_dict()["edges"]} == {"1", "1/2"}


def test_graph_invariants_enforced():
    g = WeightedGraph()
    g.add_edge((0, 0), (1, 1), 1)
    with pytest.raises(ValueError):
        g.add_edge((0, 0), (1, 1), 2)
    with pytest.raises(ValueError):
        g.add_edge((0, 0), (0, 0), 1)
    with pytest.raises(ValueError):
        g.add_edge((0, 0), (2, 2), 0)
    with pytest.raises(TypeError):
        g.add_edge((0, 0), (2, 2), 0.5)
    g.remove_vertex((1, 1))
    assert g.num_edges == 0 and g.num_vertices == 1

import json
import random
from fractions import Fraction
from pathlib import Path

import jsonschema
import pytest
from hypothesis import given, settings, strategies as st

from twoenum.asm import BottomSpec
from twoenum.graphs import (WeightedGraph, build_aztec_rectangle, build_fortress, build_gn, fortress_center,
                            mirror, normalize_fortress_bottom, same_embedding)
from twoenum.matchings import matching_sum_bruteforce, matching_sum_pfaffian
from twoenum.renewal import (RenewalSite, RewriteError, TraceVerificationError, apply_urban_renewal,
                             class_counts, fill_dents, find_renewal_sites, gauge_scale_vertex,
                             intermediate_rectangle, make_site, merge_vertex_line, reduce_gn_once,
                             renewal_weights, replay, scale_edge_class, split_vertex_three, strip_forced_edges)

from hosts import INNER, OUTER, rand_weight, site_host
from oracles import graph_sum

TRACE_SCHEMA = json.loads((Path(__file__).parents[1] / "src/twoenum/schemas/trace.schema.json").read_text())


def uniform_site(w) -> WeightedGraph:
    g = WeightedGraph()
    for k in range(4):
        g.add_edge(INNER[k], INNER[(k + 1) % 4], w)
        g.add_edge(INNER[k], OUTER[k], 1)
    return g


def test_renewal_of_unit_square():
    g = uniform_site(1)
    site = make_site(g, INNER)
    h, f = apply_urban_renewal(g, site)
    assert f == 2
    assert {w for _, _, w in h.edges()} == {Fraction(1, 2)}
    assert sorted(h.vertices()) == sorted(OUTER)


def test_renewal_of_half_square():
    h, f = apply_urban_renewal(uniform_site(Fraction(1, 2)), make_site(uniform_site(Fraction(1, 2)), INNER))
    assert f == Fraction(1, 2)
    assert {w for _, _, w in h.edges()} == {1}


def test_site_orientation_and_labels():
    g = uniform_site(1)
    g.set_weight(INNER[0], INNER[1], 2)   # a
    g.set_weight(INNER[1], INNER[2], 3)   # d
    g.set_weight(INNER[2], INNER[3], 5)   # c
    g.set_weight(INNER[3], INNER[0], 7)   # b
    site = make_site(g, reversed(INNER))
    assert site.inner == INNER and site.outer == OUTER
    h, f = apply_urban_renewal(g, site)
    assert f == 2 * 5 + 7 * 3
    assert h.weight(OUTER[0], OUTER[1]) == Fraction(5, 31)   # a' = c/(ac+bd)
    assert h.weight(OUTER[1], OUTER[2]) == Fraction(7, 31)   # d' = b/(ac+bd)
    assert h.weight(OUTER[2], OUTER[3]) == Fraction(2, 31)   # c' = a/(ac+bd)
    assert h.weight(OUTER[3], OUTER[0]) == Fraction(3, 31)   # b' = d/(ac+bd)


@pytest.mark.parametrize("seed", range(30))
def test_renewal_lemma_random(seed):
    rng = random.Random(seed)
    g = site_host(rng)
    h, f = apply_urban_renewal(g, make_site(g, INNER))
    assert matching_sum_bruteforce(g) == f * matching_sum_bruteforce(h)
    assert graph_sum(g) == f * graph_sum(h)


def test_renewal_twice_restores_weights():
    rng = random.Random(11)
    for _ in range(20):
        a, b, c, d = (rand_weight(rng) for _ in range(4))
        a2, b2, c2, d2, f = renewal_weights(a, b, c, d)
        a3, b3, c3, d3, f2 = renewal_weights(a2, b2, c2, d2)
        assert (a3, b3, c3, d3) == (a, b, c, d)
        assert f * f2 == 1


def test_renewal_on_renewed_site_with_new_attachments():
    rng = random.Random(2)
    g = site_host(rng)
    inner_w = [g.weight(INNER[k], INNER[(k + 1) % 4]) for k in range(4)]
    h, _ = apply_urban_renewal(g, make_site(g, INNER))
    # grow a fresh inner square hanging off the renewed one and renew it back
    new_inner = ((-2, 0), (0, 2), (2, 0), (0, -2))
    k2 = WeightedGraph()
    for k in range(4):
        k2.add_edge(new_inner[k], new_inner[(k + 1) % 4], h.weight(OUTER[k], OUTER[(k + 1) % 4]))
        k2.add_edge(new_inner[k], INNER[k], 1)
    back, _ = apply_urban_renewal(k2, make_site(k2, new_inner))
    assert [back.weight(INNER[k], INNER[(k + 1) % 4]) for k in range(4)] == inner_w


def test_degenerate_sites_rejected():
    g = uniform_site(1)
    g.add_edge(OUTER[0], OUTER[1], 1)
    with pytest.raises(RewriteError, match="degenerate"):
        apply_urban_renewal(g, make_site(g, INNER))
    shared = WeightedGraph()
    for k in range(4):
        shared.add_edge(INNER[k], INNER[(k + 1) % 4], 1)
    shared.add_edge(INNER[0], (-3, 0), 1)
    shared.add_edge(INNER[1], (-3, 0), 1)
    with pytest.raises(RewriteError):
        apply_urban_renewal(shared, make_site(shared, INNER))


def test_bare_square_has_no_sites():
    assert find_renewal_sites(build_aztec_rectangle(1, 1)) == []


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fortress_sites_are_the_core_cells(n):
    for cs in BottomSpec.free(n).configurations():
        g = normalize_fortress_bottom(build_fortress(n, cs), n)
        sites = find_renewal_sites(g)
        assert len(sites) == n * n
        centres = set()
        for s in sites:
            xs, ys = zip(*s.inner)
            centres.add(((min(xs) + max(xs)) // 2, (min(ys) + max(ys)) // 2))
        assert centres == {fortress_center(i, j) for i in range(1, n + 1)
                           for j in range(1, 2 * n + 1) if (i + j) % 2 == 0}


@pytest.mark.parametrize("n", [1, 2])
def test_renewing_fortress_cores(n):
    for cs in BottomSpec.free(n).configurations():
        g = normalize_fortress_bottom(build_fortress(n, cs), n)
        total = Fraction(1)
        h = g
        for s in find_renewal_sites(g):
            h, f = apply_urban_renewal(h, s)
            total *= f
        assert total == 2 ** (n * n)
        assert matching_sum_bruteforce(g) == total * matching_sum_pfaffian(h)


def test_split_isolated_edge():
    g = WeightedGraph.from_edges([((0, 0), (4, 0), Fraction(5, 3))])
    h, f = split_vertex_three(g, (4, 0), [(0, 0)], [])
    assert f == 1 and h.num_vertices == 4 and h.num_edges == 3
    assert matching_sum_bruteforce(h) == Fraction(5, 3) == matching_sum_bruteforce(g)
    back, _ = merge_vertex_line(h, (3, 0), (4, 0), (5, 0))
    assert back == g


def test_split_rejects_bad_partition():
    g = build_aztec_rectangle(1, 1)
    with pytest.raises(RewriteError):
        split_vertex_three(g, (0, 0), [(1, 1)], [])


def test_split_everything_preserves_sum():
    g = build_gn(2).scaled(4)
    h = g
    for v in g.vertices():
        nb = h.neighbors(v)
        h, _ = split_vertex_three(h, v, nb[:1], nb[1:])
    assert h.num_vertices == 3 * g.num_vertices
    assert matching_sum_bruteforce(h) == matching_sum_bruteforce(g)


def test_gauge():
    g = build_gn(2)
    same, f = gauge_scale_vertex(g, (1, 1), 1)
    assert same == g and f == 1
    rng = random.Random(4)
    for _ in range(5):
        v = rng.choice(g.vertices())
        lam = rand_weight(rng)
        h, f = gauge_scale_vertex(g, v, lam)
        assert f == 1 / lam
        assert matching_sum_bruteforce(h) == lam * matching_sum_bruteforce(g)


def test_paired_gauge_is_neutral():
    g = build_gn(2)
    h, f1 = gauge_scale_vertex(g, (3, -1), Fraction(1, 2))
    h, f2 = gauge_scale_vertex(h, (4, -2), 2)
    assert f1 * f2 == 1
    assert matching_sum_bruteforce(h) == matching_sum_bruteforce(g)


def test_strip():
    g = build_aztec_rectangle(1, 1)
    g.add_edge((2, 0), (3, 0), 1)
    g.add_edge((3, 0), (4, 0), 1)
    h, f = strip_forced_edges(g)
    assert f == 1 and h == build_aztec_rectangle(1, 1)
    path = WeightedGraph.from_edges([((0, 0), (1, 0), 3), ((1, 0), (2, 0), 5)])
    _, f = strip_forced_edges(path)
    assert f == 0


@pytest.mark.parametrize("seed", range(15))
def test_strip_random_decorations(seed):
    rng = random.Random(seed)
    g = build_aztec_rectangle(2, 2)
    for u, v, _ in g.edges():
        g.set_weight(u, v, rand_weight(rng))
    for v in g.vertices():
        if rng.random() < 0.3:
            tip = (v[0] * 10 + 1000, v[1] * 10 + 1000)
            g.add_edge(v, tip, rand_weight(rng))
    h, f = strip_forced_edges(g)
    assert matching_sum_bruteforce(g) == f * matching_sum_bruteforce(h)


def test_fill_dents():
    g = build_aztec_rectangle(1, 1)
    h, f = fill_dents(g, [(10, 0), (11, 0)], [((10, 0), (11, 0))])
    assert f == 1 and h.num_vertices == 6
    with pytest.raises(RewriteError, match="changes the matching sum"):
        fill_dents(g, [(-1, 3), (3, 3)], [((1, 1), (-1, 3)), ((2, 0), (3, 3))])


@pytest.mark.parametrize("n", [2, 3])
def test_dent_fill_inside_pipeline(n):
    trace = reduce_gn_once(n)
    (step,) = [s for s in trace.steps if s.op == "fill_dents"]
    assert step.factor == 1 and len(step.params["vertices"]) == 2 * (n - 1)


def test_intermediate_rectangle_sum():
    for n in (2, 3):
        assert matching_sum_pfaffian(intermediate_rectangle(n)) == matching_sum_pfaffian(build_gn(n))


def test_scale_edge_class():
    g = build_aztec_rectangle(1, 2)
    same, f = scale_edge_class(g, [], 3, 0)
    assert same == g and f == 1
    horizontal = lambda u, v, w: u[1] == v[1]
    square = build_aztec_rectangle(1, 1)
    one_edge = lambda u, v, w: {u, v} == {(0, 0), (1, 1)}
    assert class_counts(square, one_edge) == {0, 1}
    with pytest.raises(RewriteError, match="expected exactly 1"):
        scale_edge_class(square, one_edge, 2, 1)
    g2 = build_gn(2)
    tooth_edges = lambda u, v, w: u[1] == -4 or v[1] == -4
    assert class_counts(g2, tooth_edges) == {2}
    h, f = scale_edge_class(g2, tooth_edges, 3, 2)
    assert f == 9 and matching_sum_bruteforce(g2) == f * matching_sum_bruteforce(h)
    assert class_counts(square, horizontal) == {0}


def test_scale_edge_class_pfaffian_check():
    g = build_gn(4)
    tooth_edges = lambda u, v, w: u[1] == -8 or v[1] == -8
    h, f = scale_edge_class(g, tooth_edges, 2, 4)
    assert matching_sum_pfaffian(g) == f * matching_sum_pfaffian(h)
    with pytest.raises(RewriteError):
        scale_edge_class(g, tooth_edges, 2, 3)


@pytest.mark.parametrize("n,factor", [(2, Fraction(15, 8)), (3, Fraction(75, 32))])
def test_reduction(n, factor):
    trace = reduce_gn_once(n)
    assert trace.cumulative == factor
    assert same_embedding(trace.final, mirror(build_gn(n - 1)))
    assert matching_sum_pfaffian(build_gn(n)) == trace.cumulative * matching_sum_pfaffian(build_gn(n - 1))
    assert trace.phase_factor("renew-1") == 1
    assert trace.phase_factor("renew-2") == Fraction(5, 4) ** ((n - 1) * (2 * n - 1)) * Fraction(3, 2) ** (2 * n - 1)
    assert trace.phase_factor("rescale") == Fraction(2, 3) ** (2 * n - 2) * Fraction(4, 5) ** (2 * (n - 1) ** 2)
    assert trace.phase_factor("gauge") == 1
    assert len(trace.checks) == 9


def test_reduction_every_step_checked():
    trace = reduce_gn_once(2, verify="steps")
    assert trace.cumulative == Fraction(15, 8)


def test_reduction_final_classes_uniform_n2():
    trace = reduce_gn_once(2)
    before = [s for s in trace.steps if s.op == "scale_edge_class"]
    assert [s.params["count"] for s in before] == [2, 2]


def test_reduction_rejects_small_n():
    with pytest.raises(ValueError):
        reduce_gn_once(1)


def test_trace_json_replay_and_tamper():
    trace = reduce_gn_once(2)
    data = json.loads(trace.to_json())
    jsonschema.validate(data, TRACE_SCHEMA)
    assert replay(data).cumulative == Fraction(15, 8)
    assert trace.to_json() == reduce_gn_once(2).to_json()
    bad = json.loads(trace.to_json())
    bad["steps"][-1]["factor"] = "1"
    with pytest.raises(TraceVerificationError, match="step"):
        replay(bad)
    bad = json.loads(trace.to_json())
    bad["cumulative"] = "2"
    with pytest.raises(TraceVerificationError):
        replay(bad)


def test_site_serialization():
    g = uniform_site(1)
    s = make_site(g, INNER)
    assert RenewalSite.from_dict(s.to_dict()) == s


# trace soundness on random small hosts: every rewrite satisfies M(in) = factor * M(out)

@st.composite
def small_weighted_rectangles(draw):
    m = draw(st.integers(1, 2))
    k = draw(st.integers(1, 3))
    g = build_aztec_rectangle(m, k).scaled(4)
    for u, v, _ in g.edges():
        g.set_weight(u, v, Fraction(draw(st.integers(1, 9)), draw(st.integers(1, 9))))
    return g


@settings(max_examples=40, deadline=None)
@given(small_weighted_rectangles(), st.data())
def test_rewrite_soundness(g, data):
    v = data.draw(st.sampled_from(g.vertices()))
    op = data.draw(st.sampled_from(["split", "gauge", "strip", "renew"]))
    if op == "split":
        nb = g.neighbors(v)
        if not nb:
            return
        cut = data.draw(st.integers(0, len(nb)))
        h, f = split_vertex_three(g, v, nb[:cut], nb[cut:])
    elif op == "gauge":
        h, f = gauge_scale_vertex(g, v, Fraction(data.draw(st.integers(1, 9)), data.draw(st.integers(1, 9))))
    elif op == "strip":
        h, f = strip_forced_edges(g)
    else:
        sites = find_renewal_sites(g)
        if not sites:
            return
        h, f = apply_urban_renewal(g, sites[0])
    assert matching_sum_bruteforce(g) == f * matching_sum_bruteforce(h)

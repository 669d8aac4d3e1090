"""Weighted perfect-matching sums: a backtracking oracle and a Pfaffian counter.

The Pfaffian route orients the coordinate embedding so that every bounded
face has an odd number of clockwise edges, clears denominators, and runs a
fraction-free Pfaffian elimination on the resulting integer matrix.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from fractions import Fraction
from typing import Iterator, Optional

from .graphs import Vertex, WeightedGraph, edge_key, find_crossing, vertex_on_edge

log = logging.getLogger(__name__)

Matching = tuple[tuple[Vertex, Vertex], ...]


class NonPlanarEmbedding(ValueError):
    """The straight-line drawing given by the coordinates has a crossing."""


# ----------------------------------------------------------------------
# brute force


def enumerate_matchings(g: WeightedGraph) -> Iterator[Matching]:
    """Every perfect matching, as a sorted tuple of edges.

    Backtracks on the lowest unmatched vertex, trying its neighbours in
    increasing order, so the stream order is deterministic.
    """
    order = g.vertices()
    if len(order) % 2:
        log.warning("graph has %d vertices, so no perfect matching exists", len(order))
        return
    adj = g.adjacency()
    matched: set[Vertex] = set()
    chosen: list[tuple[Vertex, Vertex]] = []

    def rec(pos: int) -> Iterator[Matching]:
        while pos < len(order) and order[pos] in matched:
            pos += 1
        if pos == len(order):
            yield tuple(sorted(chosen))
            return
        u = order[pos]
        matched.add(u)
        for v in sorted(adj[u]):
            if v in matched:
                continue
            matched.add(v)
            chosen.append(edge_key(u, v))
            yield from rec(pos + 1)
            chosen.pop()
            matched.discard(v)
        matched.discard(u)

    yield from rec(0)


def matching_weight(g: WeightedGraph, m: Matching) -> Fraction:
    w = Fraction(1)
    for u, v in m:
        w *= g.weight(u, v)
    return w


def is_perfect_matching(g: WeightedGraph, m) -> bool:
    seen: set[Vertex] = set()
    for u, v in m:
        if not g.has_edge(u, v) or u in seen or v in seen:
            return False
        seen.update((u, v))
    return len(seen) == g.num_vertices


def count_matchings_bruteforce(g: WeightedGraph) -> int:
    return sum(1 for _ in enumerate_matchings(g))


def matching_sum_bruteforce(g: WeightedGraph) -> Fraction:
    """Sum over perfect matchings of the product of edge weights."""
    total = Fraction(0)
    for m in enumerate_matchings(g):
        total += matching_weight(g, m)
    return total


# ----------------------------------------------------------------------
# faces and Kasteleyn orientation


def _rotation(g: WeightedGraph) -> dict[Vertex, list[Vertex]]:
    """Neighbours of each vertex in counterclockwise angular order."""
    rot = {}
    for v in g.vertices():
        rot[v] = sorted(g.neighbors(v), key=lambda u: math.atan2(u[1] - v[1], u[0] - v[0]))
    return rot


def faces(g: WeightedGraph) -> list[list[tuple[Vertex, Vertex]]]:
    """Boundary walks of all faces, each a list of directed edges.

    Every walk keeps its face on the left, so bounded faces come out
    counterclockwise (positive area) and each component's outer face has
    non-positive area.
    """
    rot = _rotation(g)
    index = {v: {u: k for k, u in enumerate(nb)} for v, nb in rot.items()}
    seen: set[tuple[Vertex, Vertex]] = set()
    out = []
    for u in g.vertices():
        for v in rot[u]:
            if (u, v) in seen:
                continue
            walk = []
            a, b = u, v
            while (a, b) not in seen:
                seen.add((a, b))
                walk.append((a, b))
                nb = rot[b]
                c = nb[(index[b][a] - 1) % len(nb)]
                a, b = b, c
            out.append(walk)
    return out


def _area2(walk: list[tuple[Vertex, Vertex]]) -> int:
    return sum(a[0] * b[1] - b[0] * a[1] for a, b in walk)


def _components(g: WeightedGraph) -> list[list[Vertex]]:
    adj = g.adjacency()
    seen: set[Vertex] = set()
    comps = []
    for s in g.vertices():
        if s in seen:
            continue
        seen.add(s)
        comp, queue = [], deque([s])
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in sorted(adj[u]):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        comps.append(sorted(comp))
    return comps


def check_planar_embedding(g: WeightedGraph) -> None:
    crossing = find_crossing(g)
    if crossing is not None:
        raise NonPlanarEmbedding(f"edges {crossing[0]} and {crossing[1]} cross")
    hit = vertex_on_edge(g)
    if hit is not None:
        raise NonPlanarEmbedding(f"vertex {hit[2]} lies on edge {hit[0]}-{hit[1]}")


def bounded_faces(g: WeightedGraph) -> list[list[tuple[Vertex, Vertex]]]:
    """Faces with positive area (the outer face of each component is dropped)."""
    return [w for w in faces(g) if _area2(w) > 0]


def kasteleyn_orient(g: WeightedGraph, check_planar: bool = True) -> set[tuple[Vertex, Vertex]]:
    """Directed edge set with an odd number of clockwise edges on every bounded face."""
    if check_planar:
        check_planar_embedding(g)
    adj = g.adjacency()
    oriented: set[tuple[Vertex, Vertex]] = set()
    done: set[tuple[Vertex, Vertex]] = set()

    # spanning forest edges get an arbitrary direction
    for comp in _components(g):
        root = comp[0]
        seen = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in sorted(adj[u]):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
                    e = edge_key(u, v)
                    oriented.add(e)
                    done.add(e)

    walks = faces(g)
    positive = [w for w in walks if _area2(w) > 0]
    if len(walks) - len(positive) != len(_components(g)):
        raise NonPlanarEmbedding("face structure is inconsistent with a planar embedding")

    face_edges = [{edge_key(a, b) for a, b in w} for w in positive]
    edge_faces: dict[tuple[Vertex, Vertex], list[int]] = {}
    for f, es in enumerate(face_edges):
        for e in es:
            edge_faces.setdefault(e, []).append(f)
    pending = [len([e for e in es if e not in done]) for es in face_edges]
    queue = deque(f for f, k in enumerate(pending) if k == 1)
    while queue:
        f = queue.popleft()
        if pending[f] != 1:
            continue
        free = [e for e in face_edges[f] if e not in done]
        e = free[0]
        cw = 0
        for a, b in positive[f]:
            k = edge_key(a, b)
            if k in done and ((a, b) == k) != (k in oriented):
                cw += 1  # traversal runs against the edge direction
        # with e oriented along the walk it adds nothing; flip it if cw is even
        a, b = next((a, b) for a, b in positive[f] if edge_key(a, b) == e)
        if cw % 2 == 0:
            direction = (b, a)
        else:
            direction = (a, b)
        if direction == e:
            oriented.add(e)
        done.add(e)
        for h in edge_faces[e]:
            pending[h] -= 1
            if pending[h] == 1:
                queue.append(h)
    if len(done) != g.num_edges:
        raise NonPlanarEmbedding("could not orient every edge; embedding is not planar")
    return {e if e in oriented else (e[1], e[0]) for e in done}


def clockwise_count(walk: list[tuple[Vertex, Vertex]], orientation: set[tuple[Vertex, Vertex]]) -> int:
    """Number of traversals in a counterclockwise face walk that run against the orientation."""
    return sum(1 for a, b in walk if (b, a) in orientation)


def kasteleyn_defects(g: WeightedGraph, orientation: set[tuple[Vertex, Vertex]]) -> list[list]:
    """Bounded faces that violate the odd-clockwise condition."""
    return [w for w in bounded_faces(g) if clockwise_count(w, orientation) % 2 == 0]


# ----------------------------------------------------------------------
# Pfaffian


def pfaffian_int(a: list[list[int]]) -> int:
    """Pfaffian of an integer skew-symmetric matrix by fraction-free elimination.

    After step ``s`` the trailing entries equal Pfaffians of the leading
    ``2s`` block bordered by two more indices, so each update divides
    exactly by the previous pivot.
    """
    n = len(a)
    if n % 2:
        return 0
    if n == 0:
        return 1
    a = [row[:] for row in a]
    sign = 1
    prev = 1
    for s in range(0, n, 2):
        p, q = s, s + 1
        if a[p][q] == 0:
            j = next((j for j in range(q + 1, n) if a[p][j] != 0), None)
            if j is None:
                return 0
            a[q], a[j] = a[j], a[q]
            for row in a:
                row[q], row[j] = row[j], row[q]
            sign = -sign
        piv = a[p][q]
        rp, rq = a[p], a[q]
        for i in range(q + 1, n):
            ri = a[i]
            api, aqi = rp[i], rq[i]
            for j in range(i + 1, n):
                v = (piv * ri[j] - api * rq[j] + rp[j] * aqi) // prev
                ri[j] = v
                a[j][i] = -v
        prev = piv
    return sign * prev


def skew_matrix(g: WeightedGraph, orientation: set[tuple[Vertex, Vertex]]) -> tuple[list[Vertex], list[list[Fraction]]]:
    order = g.vertices()
    pos = {v: k for k, v in enumerate(order)}
    n = len(order)
    k = [[Fraction(0)] * n for _ in range(n)]
    for u, v, w in g.edges():
        if (v, u) in orientation:
            u, v = v, u
        k[pos[u]][pos[v]] = w
        k[pos[v]][pos[u]] = -w
    return order, k


def matching_sum_pfaffian(g: WeightedGraph, check_planar: bool = True) -> Fraction:
    """``|Pf(K)|`` for the Kasteleyn-signed weighted adjacency matrix ``K``."""
    n = g.num_vertices
    if n == 0:
        return Fraction(1)
    if n % 2:
        return Fraction(0)
    orientation = kasteleyn_orient(g, check_planar=check_planar)
    _, k = skew_matrix(g, orientation)
    scale = 1
    for _, _, w in g.edges():
        scale = scale * w.denominator // math.gcd(scale, w.denominator)
    ints = [[int(x * scale) for x in row] for row in k]
    return Fraction(abs(pfaffian_int(ints)), scale ** (n // 2))


def matching_sum(g: WeightedGraph, engine: str = "pfaffian") -> Fraction:
    """Dispatch on ``engine``: ``"brute"``, ``"pfaffian"`` or ``"both"`` (cross-checked)."""
    if engine == "brute":
        return matching_sum_bruteforce(g)
    if engine == "pfaffian":
        return matching_sum_pfaffian(g)
    if engine == "both":
        a, b = matching_sum_bruteforce(g), matching_sum_pfaffian(g)
        if a != b:
            raise ArithmeticError(f"engines disagree: brute force {a}, Pfaffian {b}")
        return a
    raise ValueError(f"unknown engine {engine!r}")

"""Rewrites that preserve the matching sum up to an exact factor.

Every operation returns ``(new_graph, factor)`` with

    M(input) = factor * M(output)

and :func:`reduce_gn_once` chains them into the reduction of the weighted
halved Aztec diamond of order ``n`` to the mirror image of order ``n - 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Collection, Iterable, Optional, Sequence, Union

from .exact import Number, as_rational, format_rational, parse_rational
from .graphs import (Vertex, WeightedGraph, build_gn, edge_key, mirror, parse_vertex_id,
                     same_embedding, vertex_id)
from .matchings import enumerate_matchings, matching_sum_bruteforce, matching_sum_pfaffian

BRUTE_FORCE_LIMIT = 34


class RewriteError(ValueError):
    """A rewrite was asked to act on a pattern it does not apply to."""


class TraceVerificationError(AssertionError):
    """``M(before) = factor * M(after)`` failed for a recorded step."""


def matching_sum_auto(g: WeightedGraph) -> Fraction:
    """Brute force on small graphs, Pfaffian otherwise."""
    if g.num_vertices <= BRUTE_FORCE_LIMIT:
        return matching_sum_bruteforce(g)
    return matching_sum_pfaffian(g)


# ----------------------------------------------------------------------
# urban renewal


@dataclass(frozen=True)
class RenewalSite:
    """Inner 4-cycle in clockwise order plus the outer vertex hanging off each corner.

    With ``inner = (v0, v1, v2, v3)`` the edge weights are ``a = v0v1``,
    ``d = v1v2``, ``c = v2v3`` and ``b = v3v0``, so ``a, c`` and ``b, d``
    are the opposite pairs.
    """

    inner: tuple[Vertex, Vertex, Vertex, Vertex]
    outer: tuple[Vertex, Vertex, Vertex, Vertex]

    def to_dict(self) -> dict:
        return {"inner": [vertex_id(v) for v in self.inner], "outer": [vertex_id(v) for v in self.outer]}

    @classmethod
    def from_dict(cls, d: dict) -> "RenewalSite":
        return cls(tuple(parse_vertex_id(s) for s in d["inner"]),  # type: ignore[arg-type]
                   tuple(parse_vertex_id(s) for s in d["outer"]))  # type: ignore[arg-type]


def _signed_area2(pts: Sequence[Vertex]) -> int:
    return sum(pts[k][0] * pts[(k + 1) % len(pts)][1] - pts[(k + 1) % len(pts)][0] * pts[k][1]
               for k in range(len(pts)))


def make_site(g: WeightedGraph, corners: Iterable[Vertex]) -> RenewalSite:
    """Validate a renewal site on the given four corner vertices."""
    cs = sorted(set(corners))
    if len(cs) != 4:
        raise RewriteError(f"a renewal site needs four distinct corners, got {cs}")
    start = cs[0]
    nbs = [v for v in g.neighbors(start) if v in cs]
    if len(nbs) != 2:
        raise RewriteError(f"{cs} is not a 4-cycle")
    cycle = [start, nbs[0]]
    while len(cycle) < 4:
        nxt = [v for v in g.neighbors(cycle[-1]) if v in cs and v != cycle[-2]]
        if len(nxt) != 1:
            raise RewriteError(f"{cs} is not an induced 4-cycle")
        cycle.append(nxt[0])
    if not g.has_edge(cycle[3], cycle[0]) or g.has_edge(cycle[0], cycle[2]) or g.has_edge(cycle[1], cycle[3]):
        raise RewriteError(f"{cs} is not an induced 4-cycle")
    if _signed_area2(cycle) > 0:
        cycle = [cycle[0]] + cycle[:0:-1]
    outer = []
    for v in cycle:
        if g.degree(v) != 3:
            raise RewriteError(f"inner vertex {v} has degree {g.degree(v)}, not 3")
        (o,) = [u for u in g.neighbors(v) if u not in cs]
        if g.weight(v, o) != 1:
            raise RewriteError(f"attachment edge {v}-{o} has weight {g.weight(v, o)}, not 1")
        outer.append(o)
    return RenewalSite(tuple(cycle), tuple(outer))  # type: ignore[arg-type]


def site_degeneracy(g: WeightedGraph, site: RenewalSite) -> Optional[str]:
    """Why the site cannot be renewed in place, or ``None``."""
    if len(set(site.outer)) != 4:
        return "outer vertices are not distinct"
    if set(site.outer) & set(site.inner):
        return "an outer vertex is also an inner vertex"
    for k in range(4):
        a, b = site.outer[k], site.outer[(k + 1) % 4]
        if g.has_edge(a, b):
            return f"outer vertices {a} and {b} are already adjacent"
    return None


def renewal_weights(a: Number, b: Number, c: Number, d: Number) -> tuple[Fraction, Fraction, Fraction, Fraction, Fraction]:
    """``(a', b', c', d', ac + bd)`` with ``a' = c/(ac+bd)`` and so on."""
    a, b, c, d = (as_rational(x) for x in (a, b, c, d))
    f = a * c + b * d
    return c / f, d / f, a / f, b / f, f


def apply_urban_renewal(g: WeightedGraph, site: RenewalSite) -> tuple[WeightedGraph, Fraction]:
    """Replace the inner square by a square on the outer vertices.

    The four attachment edges are contracted; the new square carries the
    weights ``(c, d, a, b) / (ac + bd)`` and the factor is ``ac + bd``.
    """
    checked = make_site(g, site.inner)
    if checked.outer != site.outer or set(checked.inner) != set(site.inner):
        raise RewriteError("site does not match the graph")
    why = site_degeneracy(g, checked)
    if why:
        raise RewriteError(f"degenerate renewal site: {why}")
    v, o = checked.inner, checked.outer
    a, d, c, b = (g.weight(v[k], v[(k + 1) % 4]) for k in range(4))
    a2, b2, c2, d2, f = renewal_weights(a, b, c, d)
    out = g.copy()
    for x in v:
        out.remove_vertex(x)
    for k, w in enumerate((a2, d2, c2, b2)):
        out.add_edge(o[k], o[(k + 1) % 4], w)
    return out, f


def find_renewal_sites(g: WeightedGraph) -> list[RenewalSite]:
    """Non-overlapping renewable squares, chosen greedily in coordinate order.

    A candidate is skipped when its corners meet a chosen site's corners or
    outer vertices, or its outer vertices meet a chosen site's corners.
    """
    adj = g.adjacency()
    seen: set[frozenset] = set()
    candidates = []
    for v in g.vertices():
        if len(adj[v]) != 3:
            continue
        nb = sorted(adj[v])
        for i in range(3):
            for j in range(i + 1, 3):
                x, y = nb[i], nb[j]
                for w in sorted(set(adj[x]) & set(adj[y])):
                    if w == v:
                        continue
                    key = frozenset((v, x, y, w))
                    if key in seen:
                        continue
                    seen.add(key)
                    try:
                        site = make_site(g, key)
                    except RewriteError:
                        continue
                    if site_degeneracy(g, site) is None:
                        candidates.append(site)
    candidates.sort(key=lambda s: sorted(s.inner))
    chosen: list[RenewalSite] = []
    used_inner: set[Vertex] = set()
    used_outer: set[Vertex] = set()
    for s in candidates:
        if set(s.inner) & (used_inner | used_outer) or set(s.outer) & used_inner:
            continue
        chosen.append(s)
        used_inner.update(s.inner)
        used_outer.update(s.outer)
    return chosen


# ----------------------------------------------------------------------
# vertex surgery


def _sign(t: int) -> int:
    return (t > 0) - (t < 0)


def _toward(p: Vertex, targets: Iterable[Vertex]) -> Vertex:
    sx = sy = 0
    for q in targets:
        sx += q[0] - p[0]
        sy += q[1] - p[1]
    return _sign(sx), _sign(sy)


def split_vertex_three(g: WeightedGraph, v: Vertex, side1: Collection[Vertex], side3: Collection[Vertex],
                       p1: Optional[Vertex] = None, p3: Optional[Vertex] = None) -> tuple[WeightedGraph, Fraction]:
    """Replace ``v`` by a path ``v1 - v - v3`` of weight-1 edges.

    Edges to ``side1`` move to ``v1`` and edges to ``side3`` to ``v3``; the
    middle vertex keeps the id ``v``.  New vertices sit one unit from ``v``
    toward their side (away from the other side when a side is empty).
    """
    s1, s3 = set(side1), set(side3)
    if s1 & s3 or s1 | s3 != set(g.neighbors(v)):
        raise RewriteError(f"sides {sorted(s1)} / {sorted(s3)} do not partition the edges at {v}")
    d1, d3 = _toward(v, s1), _toward(v, s3)
    if not s1:
        d1 = (-d3[0], -d3[1])
    if not s3:
        d3 = (-d1[0], -d1[1])
    if p1 is None:
        p1 = (v[0] + d1[0], v[1] + d1[1])
    if p3 is None:
        p3 = (v[0] + d3[0], v[1] + d3[1])
    if p1 == p3 or p1 == v or p3 == v or p1 in g or p3 in g:
        raise RewriteError(f"no room to split {v} into {p1}, {v}, {p3}")
    out = g.copy()
    out.add_vertex(p1)
    out.add_vertex(p3)
    for side, new in ((s1, p1), (s3, p3)):
        for u in side:
            w = out.weight(v, u)
            out.remove_edge(v, u)
            out.add_edge(new, u, w)
    out.add_edge(p1, v, 1)
    out.add_edge(v, p3, 1)
    return out, Fraction(1)


def merge_vertex_line(g: WeightedGraph, v1: Vertex, v2: Vertex, v3: Vertex) -> tuple[WeightedGraph, Fraction]:
    """Inverse of tripling: contract the weight-1 path ``v1 - v2 - v3`` into ``v2``."""
    if set(g.neighbors(v2)) != {v1, v3} or g.weight(v1, v2) != 1 or g.weight(v2, v3) != 1:
        raise RewriteError(f"{v1}-{v2}-{v3} is not a weight-1 path through a degree-2 vertex")
    out = g.copy()
    out.remove_vertex(v2)
    out.add_vertex(v2)
    for end in (v1, v3):
        for u in out.neighbors(end):
            if out.has_edge(v2, u):
                raise RewriteError(f"merging would double the edge {v2}-{u}")
            out.add_edge(v2, u, out.weight(end, u))
        out.remove_vertex(end)
    return out, Fraction(1)


def gauge_scale_vertex(g: WeightedGraph, v: Vertex, lam: Number) -> tuple[WeightedGraph, Fraction]:
    """Multiply every edge at ``v`` by ``lam``; the factor is ``1/lam``."""
    lam = as_rational(lam)
    if lam <= 0:
        raise RewriteError("gauge factor must be positive")
    out = g.copy()
    for u in g.neighbors(v):
        out.set_weight(v, u, g.weight(v, u) * lam)
    return out, 1 / lam


def strip_forced_edges(g: WeightedGraph) -> tuple[WeightedGraph, Fraction]:
    """Remove degree-1 vertices with their partner until none remain.

    The factor is the product of the removed edge weights, or 0 as soon as a
    vertex is left with no neighbours (nothing can be matched then).
    """
    out = g.copy()
    factor = Fraction(1)
    while True:
        if any(out.degree(v) == 0 for v in out.vertices()):
            return out, Fraction(0)
        leaf = next((v for v in out.vertices() if out.degree(v) == 1), None)
        if leaf is None:
            return out, factor
        (u,) = out.neighbors(leaf)
        factor *= out.weight(leaf, u)
        out.remove_vertex(leaf)
        out.remove_vertex(u)


def fill_dents(g: WeightedGraph, vertices: Sequence[Vertex], edges: Sequence[tuple[Vertex, Vertex]],
               verify: bool = True) -> tuple[WeightedGraph, Fraction]:
    """Add fresh vertices and weight-1 edges that every perfect matching must pair up.

    With ``verify`` the matching sum is recomputed on both sides (brute force
    when the host is small enough, Pfaffian otherwise) and a change is an error.
    """
    out = g.copy()
    for v in vertices:
        if v in out:
            raise RewriteError(f"dent vertex {v} already exists")
        out.add_vertex(v)
    for u, v in edges:
        if u not in vertices and v not in vertices:
            raise RewriteError(f"added edge {u}-{v} does not touch an added vertex")
        out.add_edge(u, v, 1)
    if verify:
        before, after = matching_sum_auto(g), matching_sum_auto(out)
        if before != after:
            raise RewriteError(f"added structure changes the matching sum from {before} to {after}")
    return out, Fraction(1)


ClassSpec = Union[Callable[[Vertex, Vertex, Fraction], bool], Collection[Fraction]]


def _class_test(cls: ClassSpec) -> Callable[[Vertex, Vertex, Fraction], bool]:
    if callable(cls):
        return cls
    ws = {as_rational(w) for w in cls}
    return lambda u, v, w: w in ws


def class_counts(g: WeightedGraph, cls: ClassSpec) -> set[int]:
    """Distinct numbers of class edges over all perfect matchings (brute force)."""
    test = _class_test(cls)
    return {sum(1 for u, v in m if test(u, v, g.weight(u, v))) for m in enumerate_matchings(g)}


def scale_edge_class(g: WeightedGraph, cls: ClassSpec, lam: Number, c: int,
                     check: bool = True) -> tuple[WeightedGraph, Fraction]:
    """Divide the weight of every class edge by ``lam``; the factor is ``lam**c``.

    Valid only if every perfect matching uses exactly ``c`` class edges.
    Small graphs are checked by enumeration.  Larger ones by two Pfaffians:
    with class edges multiplied by ``t``, ``P(2) = 2^c P(1)`` and
    ``P(1/2) = 2^-c P(1)`` force the count to be constant by Jensen's
    inequality.
    """
    lam = as_rational(lam)
    if lam <= 0:
        raise RewriteError("class scale must be positive")
    test = _class_test(cls)
    members = [(u, v) for u, v, w in g.edges() if test(u, v, w)]

    def rescaled(t: Fraction) -> WeightedGraph:
        out = g.copy()
        for u, v in members:
            out.set_weight(u, v, g.weight(u, v) * t)
        return out

    if check:
        if g.num_vertices <= BRUTE_FORCE_LIMIT:
            counts = class_counts(g, test)
            if counts and counts != {c}:
                raise RewriteError(f"perfect matchings use {sorted(counts)} class edges, expected exactly {c}")
        else:
            p1 = matching_sum_pfaffian(g)
            if p1:
                up = matching_sum_pfaffian(rescaled(Fraction(2)))
                down = matching_sum_pfaffian(rescaled(Fraction(1, 2)))
                if up != p1 * 2 ** c or down != p1 / 2 ** c:
                    raise RewriteError(f"class edges are not used exactly {c} times by every matching")
    return rescaled(1 / lam), lam ** c


# ----------------------------------------------------------------------
# traces


@dataclass
class Step:
    op: str
    params: dict
    factor: Fraction
    phase: str = ""

    def to_dict(self, cumulative: Fraction) -> dict:
        return {"op": self.op, "phase": self.phase, "params": self.params,
                "factor": format_rational(self.factor), "cumulative": format_rational(cumulative)}


@dataclass
class ReductionTrace:
    """Rewrite steps from ``start`` to ``final`` with ``M(start) = cumulative * M(final)``."""

    n: int
    start: WeightedGraph
    final: WeightedGraph
    steps: list[Step] = field(default_factory=list)
    checks: list[str] = field(default_factory=list)

    @property
    def cumulative(self) -> Fraction:
        f = Fraction(1)
        for s in self.steps:
            f *= s.factor
        return f

    def phase_factor(self, phase: str) -> Fraction:
        f = Fraction(1)
        for s in self.steps:
            if s.phase == phase:
                f *= s.factor
        return f

    def to_dict(self) -> dict:
        out, cum = [], Fraction(1)
        for s in self.steps:
            cum *= s.factor
            out.append(s.to_dict(cum))
        return {"n": self.n, "steps": out, "cumulative": format_rational(self.cumulative),
                "final_graph": self.final.to_dict()}

    def to_json(self, indent: Optional[int] = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _vid_list(vs: Iterable[Vertex]) -> list[str]:
    return [vertex_id(v) for v in vs]


class _Runner:
    """Applies named steps, records them, and checks M at phase boundaries."""

    def __init__(self, g: WeightedGraph, n: int, verify: str) -> None:
        if verify not in ("none", "phases", "steps"):
            raise ValueError(f"verify must be 'none', 'phases' or 'steps', got {verify!r}")
        self.g = g
        self.trace = ReductionTrace(n, g, g)
        self.verify = verify
        self.phase = ""
        self._phase_start = g
        self._phase_factor = Fraction(1)

    def begin(self, phase: str) -> None:
        self.phase = phase
        self._phase_start = self.g
        self._phase_factor = Fraction(1)

    def end(self) -> None:
        if self.verify == "phases":
            before = matching_sum_pfaffian(self._phase_start)
            after = matching_sum_pfaffian(self.g)
            if before != self._phase_factor * after:
                raise TraceVerificationError(
                    f"phase {self.phase!r}: M(before) = {before} but factor {self._phase_factor} "
                    f"times M(after) = {after}")
            self.trace.checks.append(f"{self.phase}: {format_rational(before)} = "
                                     f"{format_rational(self._phase_factor)} * {format_rational(after)}")

    def run(self, op: str, params: dict, fn, *args) -> None:
        before = self.g
        self.g, f = fn(before, *args)
        self.trace.steps.append(Step(op, params, f, self.phase))
        self._phase_factor *= f
        if self.verify == "steps":
            mb, ma = matching_sum_auto(before), matching_sum_auto(self.g)
            if mb != f * ma:
                raise TraceVerificationError(
                    f"step {len(self.trace.steps)} ({op} {params}): M(before) = {mb}, factor {f}, M(after) = {ma}")


def _split(run: _Runner, v: Vertex, s1: Collection[Vertex], s3: Collection[Vertex]) -> tuple[Vertex, Vertex]:
    g = run.g
    d1, d3 = _toward(v, s1), _toward(v, s3)
    if not s1:
        d1 = (-d3[0], -d3[1])
    if not s3:
        d3 = (-d1[0], -d1[1])
    p1, p3 = (v[0] + d1[0], v[1] + d1[1]), (v[0] + d3[0], v[1] + d3[1])
    params = {"v": vertex_id(v), "side1": _vid_list(sorted(s1)), "side3": _vid_list(sorted(s3)),
              "p1": vertex_id(p1), "p3": vertex_id(p3)}
    run.run("split_vertex_three", params, split_vertex_three, v, s1, s3, p1, p3)
    return p1, p3


def _triple_all(run: _Runner, squares: Sequence[tuple[Vertex, ...]]) -> dict[tuple[Vertex, int], Vertex]:
    """Triple every vertex lying on a square; return (vertex, square index) -> copy holding its edges."""
    member: dict[Vertex, list[int]] = {}
    for k, sq in enumerate(squares):
        for v in sq:
            member.setdefault(v, []).append(k)
    copy_of: dict[tuple[Vertex, int], Vertex] = {}
    for k, sq in enumerate(squares):
        for v in sq:
            copy_of[(v, k)] = v

    def square_side(v: Vertex, k: int) -> set[Vertex]:
        sq = squares[k]
        pos = sq.index(v)
        return {copy_of[(sq[(pos + 1) % 4], k)], copy_of[(sq[(pos - 1) % 4], k)]}

    for v in sorted(member):
        ks = member[v]
        nb = set(run.g.neighbors(v))
        side1 = square_side(v, ks[0])
        if len(ks) == 2:
            side3 = square_side(v, ks[1])
            if side1 | side3 != nb:
                raise RewriteError(f"{v} has edges outside its two squares")
        elif len(ks) == 1:
            side3 = nb - side1
        else:
            raise RewriteError(f"{v} lies on {len(ks)} squares")
        if not side1 <= nb:
            raise RewriteError(f"square edges at {v} are missing")
        p1, p3 = _split(run, v, side1, side3)
        copy_of[(v, ks[0])] = p1
        if len(ks) == 2:
            copy_of[(v, ks[1])] = p3
    return copy_of


def _renew_all(run: _Runner, squares: Sequence[tuple[Vertex, ...]], copy_of: dict[tuple[Vertex, int], Vertex]) -> None:
    for k, sq in enumerate(squares):
        site = make_site(run.g, [copy_of[(v, k)] for v in sq])
        run.run("apply_urban_renewal", site.to_dict(), apply_urban_renewal, site)


def _strip(run: _Runner) -> None:
    run.run("strip_forced_edges", {}, strip_forced_edges)


def _aztec_squares(m: int, k: int, scale: int, dx: int, dy: int) -> list[tuple[Vertex, ...]]:
    """Corners (L, T, R, B) of an m x k Aztec rectangle, shifted by (dx, dy) then scaled."""
    out = []
    for r in range(1, m + 1):
        for c in range(1, k + 1):
            pts = ((2 * c - 2, -2 * r + 2), (2 * c - 1, -2 * r + 3), (2 * c, -2 * r + 2), (2 * c - 1, -2 * r + 1))
            out.append(tuple((scale * (x + dx), scale * (y + dy)) for x, y in pts))
    return out


def intermediate_rectangle(n: int, scale: int = 4) -> WeightedGraph:
    """The ``n x (2n-1)`` rectangle reached after the first renewal pass and dent filling.

    Square ``(R, C)`` has NW, NE, SE, SW weights ``w(R,C), w(R,C+1),
    w(R+1,C+1), w(R+1,C)`` with ``w(r,c) = 1`` for ``r + c`` even and ``1/2``
    otherwise; the bottom row's lower edges have weight 1.  Each dent
    vertex carries a pendant.
    """
    def w(r: int, c: int) -> Fraction:
        return Fraction(1) if (r + c) % 2 == 0 else Fraction(1, 2)

    g = WeightedGraph()
    for idx, (L, T, R, B) in enumerate(_aztec_squares(n, 2 * n - 1, scale, 1, -1)):
        r, c = divmod(idx, 2 * n - 1)
        r, c = r + 1, c + 1
        bottom = r == n
        g.add_edge(L, T, w(r, c))
        g.add_edge(T, R, w(r, c + 1))
        g.add_edge(R, B, 1 if bottom else w(r + 1, c + 1))
        g.add_edge(B, L, 1 if bottom else w(r + 1, c))
    for i in range(1, n):
        d = (scale * 4 * i, -scale * 2 * n)
        g.add_edge(d, (d[0], d[1] - scale), 1)
    return g


def reduce_gn_once(n: int, verify: str = "phases") -> ReductionTrace:
    """Rewrite ``G_n`` into the mirror image of ``G_{n-1}``, recording every step.

    ``verify`` is ``"phases"`` (Pfaffian check at each phase boundary),
    ``"steps"`` (check after every single step) or ``"none"``.
    """
    if n < 2:
        raise ValueError("the reduction needs n >= 2")
    S = 4
    start = build_gn(n).scaled(S)
    run = _Runner(start, n, verify)

    # first pass: triple, renew every square, strip, fill dents
    squares = _aztec_squares(n, 2 * n, S, 0, 0)
    run.begin("triple-1")
    copy_of = _triple_all(run, squares)
    for i in range(1, n + 1):
        t = (S * (4 * i - 2), -S * 2 * n)
        ends = run.g.neighbors(t)
        if len(ends) != 2:
            raise RewriteError(f"tooth {t} should have two neighbours after tripling")
        run.run("merge_vertex_line", {"v1": vertex_id(ends[0]), "v2": vertex_id(t), "v3": vertex_id(ends[1])},
                merge_vertex_line, ends[0], t, ends[1])
    run.end()

    run.begin("renew-1")
    _renew_all(run, squares, copy_of)
    run.end()

    run.begin("strip-1")
    _strip(run)
    run.end()

    run.begin("fill")
    new_v, new_e = [], []
    for i in range(1, n):
        d = (S * 4 * i, -S * 2 * n)
        dp = (d[0], d[1] - S)
        q, p = (d[0] - S, d[1] + S), (d[0] + S, d[1] + S)
        new_v += [d, dp]
        new_e += [(q, d), (d, p), (d, dp)]
    params = {"vertices": _vid_list(new_v), "edges": [_vid_list(e) for e in new_e]}
    run.run("fill_dents", params, lambda g: fill_dents(g, new_v, new_e, verify=verify != "none"))
    run.end()
    expected = intermediate_rectangle(n, S)
    if run.g != expected:
        raise RewriteError("first pass did not produce the expected intermediate rectangle")

    # second pass: triple, renew, gauge, strip, rescale classes
    squares = _aztec_squares(n, 2 * n - 1, S, 1, -1)
    run.begin("triple-2")
    copy_of = _triple_all(run, squares)
    run.end()

    run.begin("renew-2")
    _renew_all(run, squares, copy_of)
    run.end()

    run.begin("gauge")
    # halve the upper neighbour of each dent whose edge to it has weight 2/3
    # and double the dent; which side that is flips with the parity of n
    side = -1 if n % 2 else 1
    for i in range(1, n):
        d = (S * 4 * i, -S * 2 * n)
        q = (d[0] + side * S, d[1] + S)
        run.run("gauge_scale_vertex", {"v": vertex_id(q), "lambda": "1/2"}, gauge_scale_vertex, q, Fraction(1, 2))
        run.run("gauge_scale_vertex", {"v": vertex_id(d), "lambda": "2"}, gauge_scale_vertex, d, Fraction(2))
    run.end()

    run.begin("strip-2")
    _strip(run)
    run.end()

    run.begin("rescale")
    thirds = [Fraction(1, 3), Fraction(2, 3)]
    fifths = [Fraction(2, 5), Fraction(4, 5)]
    stray = {w for _, _, w in run.g.edges()} - set(thirds) - set(fifths)
    if stray:
        raise RewriteError(f"unexpected edge weights before rescaling: {sorted(stray)}")
    check = verify != "none"
    for ws, lam, c in ((thirds, Fraction(2, 3), 2 * n - 2), (fifths, Fraction(4, 5), 2 * (n - 1) ** 2)):
        params = {"weights": [format_rational(w) for w in ws], "lambda": format_rational(lam), "count": c}
        run.run("scale_edge_class", params, lambda g, ws=ws, lam=lam, c=c: scale_edge_class(g, ws, lam, c, check))
    run.end()

    run.trace.final = run.g
    target = mirror(build_gn(n - 1))
    if not same_embedding(run.g, target):
        raise RewriteError(f"final graph is not a scaled translate of the mirrored order-{n - 1} graph")
    return run.trace


# ----------------------------------------------------------------------
# replay


def _apply_recorded(g: WeightedGraph, step: dict) -> tuple[WeightedGraph, Fraction]:
    op, p = step["op"], step["params"]
    V = parse_vertex_id
    if op == "split_vertex_three":
        return split_vertex_three(g, V(p["v"]), [V(s) for s in p["side1"]], [V(s) for s in p["side3"]],
                                  V(p["p1"]), V(p["p3"]))
    if op == "merge_vertex_line":
        return merge_vertex_line(g, V(p["v1"]), V(p["v2"]), V(p["v3"]))
    if op == "apply_urban_renewal":
        return apply_urban_renewal(g, RenewalSite.from_dict(p))
    if op == "strip_forced_edges":
        return strip_forced_edges(g)
    if op == "fill_dents":
        return fill_dents(g, [V(s) for s in p["vertices"]], [(V(a), V(b)) for a, b in p["edges"]], verify=False)
    if op == "gauge_scale_vertex":
        return gauge_scale_vertex(g, V(p["v"]), parse_rational(p["lambda"]))
    if op == "scale_edge_class":
        return scale_edge_class(g, [parse_rational(w) for w in p["weights"]], parse_rational(p["lambda"]),
                                int(p["count"]), check=False)
    raise RewriteError(f"unknown step {op!r}")


def replay(data: Union[dict, str], verify_matching: bool = True) -> ReductionTrace:
    """Re-execute a serialized trace from ``G_n`` and check every recorded factor.

    Raises :class:`TraceVerificationError` naming the first step whose
    recomputed factor, cumulative factor or end graph disagrees.
    """
    if isinstance(data, str):
        data = json.loads(data)
    n = int(data["n"])
    g = build_gn(n).scaled(4)
    trace = ReductionTrace(n, g, g)
    cum = Fraction(1)
    for k, step in enumerate(data["steps"], 1):
        g, f = _apply_recorded(g, step)
        cum *= f
        if f != parse_rational(step["factor"]):
            raise TraceVerificationError(f"step {k} ({step['op']}): factor {f}, recorded {step['factor']}")
        if cum != parse_rational(step["cumulative"]):
            raise TraceVerificationError(f"step {k} ({step['op']}): cumulative {cum}, recorded {step['cumulative']}")
        trace.steps.append(Step(step["op"], step["params"], f, step.get("phase", "")))
    trace.final = g
    if cum != parse_rational(data["cumulative"]):
        raise TraceVerificationError(f"cumulative factor {cum}, recorded {data['cumulative']}")
    if "final_graph" in data and WeightedGraph.from_dict(data["final_graph"]) != g:
        raise TraceVerificationError("replayed end graph differs from the recorded one")
    if not same_embedding(g, mirror(build_gn(n - 1))):
        raise TraceVerificationError("replayed end graph is not the mirrored smaller graph")
    if verify_matching:
        before, after = matching_sum_pfaffian(trace.start), matching_sum_pfaffian(g)
        if before != cum * after:
            raise TraceVerificationError(f"M(start) = {before} but cumulative {cum} times M(end) = {after}")
    return trace

"""Weighted planar lattice graphs and the constructors for each region.

A vertex is identified by its integer coordinates ``(x, y)``; coordinates are
therefore unique by construction.  Weights are exact ``Fraction`` values.

Canonical Aztec coordinates: square ``(r, c)`` (1-based) is the 4-cycle on
``L = (2c-2, -2r+2)``, ``T = (2c-1, -2r+3)``, ``R = (2c, -2r+2)`` and
``B = (2c-1, -2r+1)``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .asm import BottomSpec
from .exact import Number, as_rational, format_rational, parse_rational

Vertex = tuple[int, int]
Edge = tuple[Vertex, Vertex, Fraction]

HALF = Fraction(1, 2)
ONE = Fraction(1)


def edge_key(u: Vertex, v: Vertex) -> tuple[Vertex, Vertex]:
    return (u, v) if u <= v else (v, u)


def vertex_id(v: Vertex) -> str:
    return f"{v[0]},{v[1]}"


def parse_vertex_id(text: str) -> Vertex:
    x, y = text.split(",")
    return (int(x), int(y))


class WeightedGraph:
    """Simple undirected graph with lattice coordinates and positive rational weights.

    Library functions never mutate a graph they are given; they work on a
    :meth:`copy`.  The mutators below are for builders.
    """

    __slots__ = ("_adj", "_vtags", "_etags")

    def __init__(self) -> None:
        self._adj: dict[Vertex, dict[Vertex, Fraction]] = {}
        self._vtags: dict[Vertex, set[str]] = {}
        self._etags: dict[tuple[Vertex, Vertex], set[str]] = {}

    # construction -----------------------------------------------------

    def copy(self) -> "WeightedGraph":
        g = WeightedGraph()
        g._adj = {v: dict(nb) for v, nb in self._adj.items()}
        g._vtags = {v: set(t) for v, t in self._vtags.items()}
        g._etags = {e: set(t) for e, t in self._etags.items()}
        return g

    def add_vertex(self, v: Vertex, *tags: str) -> Vertex:
        v = (int(v[0]), int(v[1]))
        self._adj.setdefault(v, {})
        self._vtags.setdefault(v, set()).update(tags)
        return v

    def add_edge(self, u: Vertex, v: Vertex, w: Number = 1, *tags: str) -> None:
        if u == v:
            raise ValueError(f"loop at {u}")
        w = as_rational(w)
        if w <= 0:
            raise ValueError(f"edge weight must be positive, got {w}")
        if v in self._adj.get(u, {}):
            raise ValueError(f"duplicate edge {u}-{v}")
        self.add_vertex(u)
        self.add_vertex(v)
        self._adj[u][v] = w
        self._adj[v][u] = w
        if tags:
            self._etags.setdefault(edge_key(u, v), set()).update(tags)

    def set_weight(self, u: Vertex, v: Vertex, w: Number) -> None:
        w = as_rational(w)
        if w <= 0:
            raise ValueError(f"edge weight must be positive, got {w}")
        if v not in self._adj[u]:
            raise KeyError(f"no edge {u}-{v}")
        self._adj[u][v] = w
        self._adj[v][u] = w

    def remove_edge(self, u: Vertex, v: Vertex) -> None:
        del self._adj[u][v]
        del self._adj[v][u]
        self._etags.pop(edge_key(u, v), None)

    def remove_vertex(self, v: Vertex) -> None:
        for u in list(self._adj[v]):
            self.remove_edge(u, v)
        del self._adj[v]
        self._vtags.pop(v, None)

    def tag_vertex(self, v: Vertex, *tags: str) -> None:
        self._vtags[v].update(tags)

    # queries ----------------------------------------------------------

    def __contains__(self, v: object) -> bool:
        return v in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    @property
    def num_vertices(self) -> int:
        return len(self._adj)

    @property
    def num_edges(self) -> int:
        return sum(len(nb) for nb in self._adj.values()) // 2

    def vertices(self) -> list[Vertex]:
        return sorted(self._adj)

    def edges(self) -> list[Edge]:
        out = []
        for u, nb in self._adj.items():
            for v, w in nb.items():
                if u < v:
                    out.append((u, v, w))
        out.sort()
        return out

    def neighbors(self, v: Vertex) -> list[Vertex]:
        return sorted(self._adj[v])

    def degree(self, v: Vertex) -> int:
        return len(self._adj[v])

    def has_edge(self, u: Vertex, v: Vertex) -> bool:
        return u in self._adj and v in self._adj[u]

    def weight(self, u: Vertex, v: Vertex) -> Fraction:
        return self._adj[u][v]

    def vertex_tags(self, v: Vertex) -> frozenset[str]:
        return frozenset(self._vtags.get(v, ()))

    def edge_tags(self, u: Vertex, v: Vertex) -> frozenset[str]:
        return frozenset(self._etags.get(edge_key(u, v), ()))

    def adjacency(self) -> Mapping[Vertex, Mapping[Vertex, Fraction]]:
        return self._adj

    def bounding_box(self) -> tuple[int, int, int, int]:
        xs = [v[0] for v in self._adj]
        ys = [v[1] for v in self._adj]
        return min(xs), min(ys), max(xs), max(ys)

    def signature(self) -> tuple[tuple[Vertex, ...], tuple[Edge, ...]]:
        """Vertex and weighted edge lists, ignoring tags."""
        return tuple(self.vertices()), tuple(self.edges())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.signature() == other.signature()

    def __hash__(self) -> int:
        return hash(self.signature())

    def __repr__(self) -> str:
        return f"WeightedGraph(|V|={self.num_vertices}, |E|={self.num_edges})"

    # geometry ---------------------------------------------------------

    def relabeled(self, f) -> "WeightedGraph":
        """Apply an injective coordinate map ``f`` to every vertex."""
        g = WeightedGraph()
        image = {v: f(v) for v in self._adj}
        if len(set(image.values())) != len(image):
            raise ValueError("coordinate map is not injective")
        for v in self._adj:
            g.add_vertex(image[v], *self._vtags.get(v, ()))
        for u, v, w in self.edges():
            g.add_edge(image[u], image[v], w, *self._etags.get(edge_key(u, v), ()))
        return g

    def translated(self, dx: int, dy: int) -> "WeightedGraph":
        return self.relabeled(lambda v: (v[0] + dx, v[1] + dy))

    def scaled(self, k: int) -> "WeightedGraph":
        if k == 0:
            raise ValueError("scale factor must be nonzero")
        return self.relabeled(lambda v: (v[0] * k, v[1] * k))

    def normalized(self) -> "WeightedGraph":
        """Translate the bounding box to the origin and divide out the coordinate gcd."""
        if not self._adj:
            return self.copy()
        x0, y0, _, _ = self.bounding_box()
        g = 0
        for x, y in self._adj:
            g = math.gcd(g, x - x0, y - y0)
        g = g or 1
        return self.relabeled(lambda v: ((v[0] - x0) // g, (v[1] - y0) // g))

    # serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": [
                {"id": vertex_id(v), "x": v[0], "y": v[1], "tags": sorted(self._vtags.get(v, ()))}
                for v in self.vertices()
            ],
            "edges": [
                {
                    "u": vertex_id(u),
                    "v": vertex_id(v),
                    "w": format_rational(w),
                    "tags": sorted(self._etags.get(edge_key(u, v), ())),
                }
                for u, v, w in self.edges()
            ],
        }

    def to_json(self, indent: Optional[int] = None) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "WeightedGraph":
        g = cls()
        for item in data["vertices"]:
            v = (int(item["x"]), int(item["y"]))
            if "id" in item and parse_vertex_id(item["id"]) != v:
                raise ValueError(f"vertex id {item['id']} disagrees with its coordinates")
            g.add_vertex(v, *item.get("tags", ()))
        for item in data["edges"]:
            u, v = parse_vertex_id(item["u"]), parse_vertex_id(item["v"])
            if u not in g or v not in g:
                raise ValueError(f"edge {item['u']}-{item['v']} references an unknown vertex")
            g.add_edge(u, v, parse_rational(str(item["w"])), *item.get("tags", ()))
        return g

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], vertices: Iterable[Vertex] = ()) -> "WeightedGraph":
        g = cls()
        for v in vertices:
            g.add_vertex(v)
        for e in edges:
            u, v = e[0], e[1]
            g.add_edge(u, v, e[2] if len(e) > 2 else 1)
        return g


# ----------------------------------------------------------------------
# predicates


def is_bipartite(g: WeightedGraph) -> bool:
    color: dict[Vertex, int] = {}
    adj = g.adjacency()
    for s in g.vertices():
        if s in color:
            continue
        color[s] = 0
        stack = [s]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in color:
                    color[v] = 1 - color[u]
                    stack.append(v)
                elif color[v] == color[u]:
                    return False
    return True


def _orient(p: Vertex, q: Vertex, r: Vertex) -> int:
    d = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (d > 0) - (d < 0)


def _on_segment(p: Vertex, q: Vertex, r: Vertex) -> bool:
    return min(p[0], r[0]) <= q[0] <= max(p[0], r[0]) and min(p[1], r[1]) <= q[1] <= max(p[1], r[1])


def segments_cross(a: Vertex, b: Vertex, c: Vertex, d: Vertex) -> bool:
    """True if segments ``ab`` and ``cd`` meet anywhere other than a shared endpoint."""
    shared = {a, b} & {c, d}
    if shared:
        if len(shared) == 2:
            return True
        s = shared.pop()
        p = b if a == s else a
        q = d if c == s else c
        # collinear and overlapping in the same direction
        return _orient(s, p, q) == 0 and (
            (p[0] - s[0]) * (q[0] - s[0]) + (p[1] - s[1]) * (q[1] - s[1]) > 0
        )
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(a, c, b):
        return True
    if o2 == 0 and _on_segment(a, d, b):
        return True
    if o3 == 0 and _on_segment(c, a, d):
        return True
    if o4 == 0 and _on_segment(c, b, d):
        return True
    return False


def vertex_on_edge(g: WeightedGraph) -> Optional[tuple[Vertex, Vertex, Vertex]]:
    """A vertex lying in the interior of an edge, if any."""
    for u, v, _ in g.edges():
        for p in g.vertices():
            if p in (u, v):
                continue
            if _orient(u, v, p) == 0 and _on_segment(u, p, v):
                return (u, v, p)
    return None


def find_crossing(g: WeightedGraph) -> Optional[tuple[tuple[Vertex, Vertex], tuple[Vertex, Vertex]]]:
    """First pair of edges whose straight-line drawings cross, or ``None``."""
    es = [(u, v) for u, v, _ in g.edges()]
    # sweep on x so that the check stays near-linear on lattice regions
    es.sort(key=lambda e: min(e[0][0], e[1][0]))
    for i, (a, b) in enumerate(es):
        right = max(a[0], b[0])
        for c, d in es[i + 1:]:
            if min(c[0], d[0]) > right:
                break
            if segments_cross(a, b, c, d):
                return (a, b), (c, d)
    return None


# ----------------------------------------------------------------------
# builders


def square_corners(r: int, c: int) -> tuple[Vertex, Vertex, Vertex, Vertex]:
    """``(L, T, R, B)`` of Aztec square ``(r, c)``."""
    return (2 * c - 2, -2 * r + 2), (2 * c - 1, -2 * r + 3), (2 * c, -2 * r + 2), (2 * c - 1, -2 * r + 1)


def peak_position(m: int, p: int) -> Vertex:
    """Bottom peak vertex number ``p`` (1-based) of an ``m``-row rectangle."""
    return (2 * p - 1, -2 * m + 1)


def build_aztec_rectangle(m: int, k: int, weight=None) -> WeightedGraph:
    """The ``m x k`` Aztec rectangle.  ``weight(r, c)`` gives the square's edge weight."""
    if m < 1 or k < 1:
        raise ValueError("an Aztec rectangle needs m, k >= 1")
    g = WeightedGraph()
    for r in range(1, m + 1):
        for c in range(1, k + 1):
            w = 1 if weight is None else weight(r, c)
            L, T, R, B = square_corners(r, c)
            for u, v in ((L, T), (T, R), (R, B), (B, L)):
                g.add_edge(u, v, w)
    for p in range(1, k + 1):
        g.tag_vertex(peak_position(m, p), "peak")
    return g


def build_aztec_rectangle_kept_bottom(m: int, k: int, xs: Sequence[int]) -> WeightedGraph:
    """Aztec rectangle with every bottom peak removed except positions ``xs``."""
    xs = list(xs)
    if sorted(set(xs)) != xs or any(not 1 <= x <= k for x in xs):
        raise ValueError(f"kept positions must be strictly increasing in 1..{k}, got {xs}")
    if len(xs) != m:
        raise ValueError(f"keeping {len(xs)} bottom vertices of an {m}-row rectangle "
                         "leaves an odd or unbalanced vertex set, so it has no perfect matching")
    g = build_aztec_rectangle(m, k)
    keep = set(xs)
    for p in range(1, k + 1):
        if p not in keep:
            g.remove_vertex(peak_position(m, p))
    return g


def build_teeth_region(n: int) -> WeightedGraph:
    """Halved Aztec region whose bottom keeps the odd peaks (the "teeth")."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = build_aztec_rectangle_kept_bottom(n, 2 * n - 1, range(1, 2 * n, 2))
    for i in range(1, n + 1):
        g.tag_vertex(teeth_tooth(n, i), "tooth")
    return g


def teeth_tooth(n: int, i: int) -> Vertex:
    return peak_position(n, 2 * i - 1)


def gn_tooth(n: int, i: int) -> Vertex:
    return (4 * i - 2, -2 * n)


def build_gn(n: int) -> WeightedGraph:
    """Weighted halved Aztec diamond: ``n x 2n`` rectangle plus ``n`` teeth below."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = build_aztec_rectangle(n, 2 * n, lambda r, c: HALF if (r + c) % 2 == 0 else ONE)
    for i in range(1, n + 1):
        t = g.add_vertex(gn_tooth(n, i), "tooth")
        g.add_edge(t, peak_position(n, 2 * i - 1), 1)
        g.add_edge(t, peak_position(n, 2 * i), 1)
    return g


def fortress_center(i: int, j: int) -> Vertex:
    return (3 * j - 1, -3 * i + 3)


_DIRS = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}


def _offset(p: Vertex, d: str, k: int = 1) -> Vertex:
    dx, dy = _DIRS[d]
    return (p[0] + k * dx, p[1] + k * dy)


def build_fortress(n: int, pending: BottomSpec | Sequence[int]) -> WeightedGraph:
    """The ``n x 2n`` fortress with bottom pendant pairs selected by ``pending``.

    Cell ``(i, j)`` with ``i + j`` even is a core diamond with connectors at
    its four compass points; the other cells are bare diamonds whose corners
    are the connector ends of their neighbours.  The pendant pair under
    columns ``2i-1, 2i`` is present exactly when ``c_i = n + (-1)^n``; see
    :func:`pending_pair_present`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cs = _fixed_cs(n, pending)
    g = WeightedGraph()
    for i in range(1, n + 1):
        for j in range(1, 2 * n + 1):
            o = fortress_center(i, j)
            ring = [_offset(o, d) for d in "ENWS"]
            tag = "core" if (i + j) % 2 == 0 else "cell"
            for v in ring:
                g.add_vertex(v, tag)
            for a, b in zip(ring, ring[1:] + ring[:1]):
                g.add_edge(a, b, 1)
            if (i + j) % 2:
                continue
            for d in "ENWS":
                if d == "S" and i == n:
                    continue
                end = _offset(o, d, 2)
                boundary = (d == "W" and j == 1) or (d == "E" and j == 2 * n) or (d == "N" and i == 1)
                g.add_vertex(end, "boundary" if boundary else "cell")
                g.add_edge(_offset(o, d), end, 1, "connector")
    for i, c in enumerate(cs, 1):
        if not pending_pair_present(n, c):
            continue
        for j in (2 * i - 1, 2 * i):
            o = fortress_center(n, j)
            end = g.add_vertex(_offset(o, "S", 2), "pending")
            g.add_edge(_offset(o, "S"), end, 1, "pending")
    return g


def pending_pair_present(n: int, c: int) -> bool:
    """Whether the bottom pendant pair for a block with bottom height ``c`` exists.

    Column ``2i-1`` sums to 1 and column ``2i`` to 0 when ``c = n-1`` (the
    other way round when ``c = n+1``).  A bottom core cell needs its
    pendant when its column sums to 1, a bare cell when its column sums to
    0, and which of the two columns holds the core cell flips with the
    parity of ``n``.
    """
    return c == n + (-1) ** n


def _fixed_cs(n: int, pending: BottomSpec | Sequence[int]) -> tuple[int, ...]:
    if isinstance(pending, BottomSpec):
        if not pending.is_fixed:
            raise ValueError("a fortress needs every c_i fixed")
        cs = tuple(pending.values)  # type: ignore[arg-type]
    else:
        cs = tuple(pending)
    if len(cs) != n or any(c not in (n - 1, n + 1) for c in cs):
        raise ValueError(f"expected {n} values from {{n-1, n+1}}, got {cs}")
    return cs


def normalize_fortress_bottom(g: WeightedGraph, n: int) -> WeightedGraph:
    """Give every bottom core cell a downward connector ending in a forced pendant.

    The appended pair of vertices is matched to itself in every perfect
    matching, so the matching sum is unchanged.
    """
    out = g.copy()
    for j in range(1, 2 * n + 1):
        if (n + j) % 2:
            continue
        o = fortress_center(n, j)
        foot = _offset(o, "S")
        end = _offset(o, "S", 2)
        if foot not in out:
            raise ValueError(f"graph is not a fortress of order {n}")
        if end in out:
            continue
        tail = _offset(o, "S", 3)
        out.add_vertex(end, "pending")
        out.add_vertex(tail, "pending")
        out.add_edge(foot, end, 1, "connector")
        out.add_edge(end, tail, 1, "pending")
    return out


def mirror(g: WeightedGraph) -> WeightedGraph:
    """Left-right reflection inside the bounding box (an involution)."""
    if not len(g):
        return g.copy()
    x0, _, x1, _ = g.bounding_box()
    return g.relabeled(lambda v: (x0 + x1 - v[0], v[1]))


def same_embedding(g: WeightedGraph, h: WeightedGraph) -> bool:
    """Coordinate isomorphism: equal after translating and rescaling to the origin."""
    return g.normalized() == h.normalized()


def iter_builders(max_vertices: int = 34) -> Iterator[tuple[str, WeightedGraph]]:
    """Every builder output up to a vertex budget, with a descriptive label."""
    from itertools import combinations

    out: list[tuple[str, WeightedGraph]] = []
    for m in range(1, 4):
        for k in range(1, 6):
            out.append((f"aztec-rect {m}x{k}", build_aztec_rectangle(m, k)))
            for xs in combinations(range(1, k + 1), m):
                out.append((f"aztec-rect {m}x{k} keep {list(xs)}",
                            build_aztec_rectangle_kept_bottom(m, k, xs)))
    for n in range(1, 5):
        out.append((f"teeth {n}", build_teeth_region(n)))
        out.append((f"gn {n}", build_gn(n)))
        for cs in BottomSpec.free(n).configurations():
            f = build_fortress(n, cs)
            out.append((f"fortress {n} c={list(cs)}", f))
            out.append((f"fortress {n} c={list(cs)} normalized", normalize_fortress_bottom(f, n)))
    for label, g in out:
        if g.num_vertices <= max_vertices:
            yield label, g

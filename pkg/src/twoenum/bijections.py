"""Explicit maps from halved ASMs to sets of perfect matchings.

Teeth region: entry ``(i, j)`` labels the white cell centred at
``(2j-2, 3-2i)``, the face between four Aztec squares.  A 1 contributes
no edge of that cell, a 0 exactly one, a -1 one of two opposite pairs.

Fortress: entry ``(i, j)`` labels cell ``(i, j)``; which connectors are used
is read off the row and column partial sums, and each cell then either has
no free corners, a forced diagonal, or two choices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

from .asm import BottomSpec, Matrix, bottom_values, check, enumerate_halved_asms, weight_stats
from .graphs import (Vertex, WeightedGraph, build_fortress, build_teeth_region, edge_key,
                     fortress_center, teeth_tooth)
from .matchings import Matching, enumerate_matchings, is_perfect_matching


class BijectionError(RuntimeError):
    """A constructed edge set is not a perfect matching of its region."""


def _halved(a: Sequence[Sequence[int]]) -> tuple[Matrix, int]:
    m = check(a, "halved")
    return m, len(m)


def _partial_sums(a: Matrix) -> tuple[list[list[int]], list[list[int]]]:
    """Row sums strictly left of and column sums strictly above each entry (0-based)."""
    n, w = len(a), len(a[0])
    left = [[0] * w for _ in range(n)]
    above = [[0] * w for _ in range(n)]
    for i in range(n):
        for j in range(w):
            left[i][j] = left[i][j - 1] + a[i][j - 1] if j else 0
            above[i][j] = above[i - 1][j] + a[i - 1][j] if i else 0
    return left, above


# ----------------------------------------------------------------------
# teeth region


def white_cell(i: int, j: int) -> dict[str, Vertex]:
    """Corners of the white cell labelled by entry ``(i, j)`` (1-based)."""
    x, y = 2 * j - 2, 3 - 2 * i
    return {"W": (x - 1, y), "E": (x + 1, y), "N": (x, y + 1), "S": (x, y - 1)}


def aztec_matchings_of_asm(a: Sequence[Sequence[int]]) -> list[Matching]:
    """The ``2^{N_-}`` perfect matchings of the teeth region coded by ``a``.

    Choice 0 of a -1 cell is its NW+SE pair, choice 1 its NE+SW pair; the
    list is ordered by the choice vector in row-major order of the -1s.
    """
    m, n = _halved(a)
    g = build_teeth_region(n)
    left, above = _partial_sums(m)
    fixed: list[tuple[Vertex, Vertex]] = []
    minus: list[dict[str, Vertex]] = []
    for i in range(1, n + 1):
        for j in range(1, 2 * n + 1):
            x = m[i - 1][j - 1]
            cell = white_cell(i, j)
            if x == 0:
                h = "W" if left[i - 1][j - 1] == 1 else "E"
                v = "N" if above[i - 1][j - 1] == 1 else "S"
                fixed.append(edge_key(cell[h], cell[v]))
            elif x == -1:
                minus.append(cell)
    cs = bottom_values(m)
    for i, c in enumerate(cs, 1):
        t = teeth_tooth(n, i)
        other = (t[0] - 1, t[1] + 1) if c == n - 1 else (t[0] + 1, t[1] + 1)
        fixed.append(edge_key(t, other))

    out = []
    for choice in product((0, 1), repeat=len(minus)):
        edges = list(fixed)
        for cell, k in zip(minus, choice):
            if k == 0:
                edges += [edge_key(cell["W"], cell["N"]), edge_key(cell["E"], cell["S"])]
            else:
                edges += [edge_key(cell["N"], cell["E"]), edge_key(cell["S"], cell["W"])]
        if not is_perfect_matching(g, edges):
            raise BijectionError(f"edge set built from {m} with choices {choice} is not a perfect matching")
        out.append(tuple(sorted(edges)))
    return out


def asm_of_aztec_matching(matching: Matching, n: int) -> Matrix:
    """Read the ASM back from edge counts per white cell (2, 1, 0 -> -1, 0, 1)."""
    owner: dict[tuple[Vertex, Vertex], tuple[int, int]] = {}
    for i in range(1, n + 1):
        for j in range(1, 2 * n + 1):
            c = white_cell(i, j)
            for p, q in (("W", "N"), ("N", "E"), ("E", "S"), ("S", "W")):
                owner[edge_key(c[p], c[q])] = (i, j)
    counts = [[0] * (2 * n) for _ in range(n)]
    for e in matching:
        cell = owner.get(edge_key(*e))
        if cell is not None:
            counts[cell[0] - 1][cell[1] - 1] += 1
    return check(tuple(tuple(1 - k for k in row) for row in counts), "halved")


# ----------------------------------------------------------------------
# fortress


_STEP = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}


def _at(o: Vertex, d: str, k: int = 1) -> Vertex:
    return (o[0] + k * _STEP[d][0], o[1] + k * _STEP[d][1])


def fortress_matchings_of_asm(a: Sequence[Sequence[int]]) -> list[Matching]:
    """The ``2^{N_-(even) + N_+(odd)}`` matchings of the fortress for ``a``'s bottom row."""
    m, n = _halved(a)
    g = build_fortress(n, bottom_values(m))
    left, above = _partial_sums(m)

    def row_sum(i: int, j: int) -> int:  # entries 1..j of row i
        return left[i - 1][j] if j < 2 * n else 1

    def col_sum(i: int, j: int) -> int:  # entries 1..i of column j
        return above[i][j - 1] if i < n else above[n - 1][j - 1] + m[n - 1][j - 1]

    # used[(i, j)][d]: the connector at side d of cell (i, j) is in the matching
    used: dict[tuple[int, int], dict[str, bool]] = {}
    for i in range(1, n + 1):
        for j in range(1, 2 * n + 1):
            even = (i + j) % 2 == 0
            s_left = row_sum(i, j - 1) if j > 1 else 0
            s_right = row_sum(i, j)
            t_up = col_sum(i - 1, j) if i > 1 else 0
            t_down = col_sum(i, j)
            # a connector between a core on one side and a bare cell on the
            # other is used iff the partial sum across it is 1 (core before)
            # or 0 (core after); from this cell's side:
            used[(i, j)] = {
                "W": (s_left == 0) if even else (s_left == 1),
                "E": (s_right == 1) if even else (s_right == 0),
                "N": (t_up == 0) if even else (t_up == 1),
                "S": (t_down == 1) if even else (t_down == 0),
            }

    fixed: list[tuple[Vertex, Vertex]] = []
    free_cells: list[tuple[Vertex, ...]] = []
    for (i, j), u in used.items():
        o = fortress_center(i, j)
        even = (i + j) % 2 == 0
        x = m[i - 1][j - 1]
        if even:
            for d, flag in u.items():
                if flag:
                    fixed.append(edge_key(_at(o, d), _at(o, d, 2)))
        elif i == n and u["S"]:
            fixed.append(edge_key(_at(o, "S"), _at(o, "S", 2)))
        k = sum(u.values())
        if k == 4:
            continue
        if k == 0:
            free_cells.append((_at(o, "E"), _at(o, "N"), _at(o, "W"), _at(o, "S")))
            continue
        rest = [d for d, flag in u.items() if not flag]
        if k == 2 and {rest[0], rest[1]} not in ({"E", "W"}, {"N", "S"}):
            fixed.append(edge_key(_at(o, rest[0]), _at(o, rest[1])))
            continue
        raise BijectionError(f"cell ({i},{j}) with entry {x} has connector pattern {u}")

    out = []
    for choice in product((0, 1), repeat=len(free_cells)):
        edges = list(fixed)
        for (e, nn, w, s), k in zip(free_cells, choice):
            if k == 0:
                edges += [edge_key(nn, w), edge_key(s, e)]
            else:
                edges += [edge_key(nn, e), edge_key(s, w)]
        if not is_perfect_matching(g, edges):
            raise BijectionError(f"edge set built from {m} with choices {choice} is not a perfect matching")
        out.append(tuple(sorted(edges)))
    return out


# ----------------------------------------------------------------------
# partition check


@dataclass
class PartitionReport:
    n: int
    family: str
    regions: int = 0
    total_matchings: int = 0
    covered: int = 0
    cardinality_failures: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)
    missing: list = field(default_factory=list)
    extra: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.cardinality_failures or self.overlaps or self.missing or self.extra) \
            and self.covered == self.total_matchings

    def summary(self) -> str:
        status = "ok" if self.ok else "FAILED"
        return (f"{self.family} n={self.n}: {self.covered}/{self.total_matchings} matchings over "
                f"{self.regions} region(s), {len(self.overlaps)} overlaps, {len(self.missing)} missing, "
                f"{len(self.extra)} extra, {len(self.cardinality_failures)} size mismatches: {status}")


def _check_cover(report: PartitionReport, g: WeightedGraph, groups: dict[Matrix, list[Matching]]) -> None:
    everything = set(enumerate_matchings(g))
    report.regions += 1
    report.total_matchings += len(everything)
    owner: dict[Matching, Matrix] = {}
    for a, ms in groups.items():
        for mm in ms:
            if mm in owner:
                report.overlaps.append((owner[mm], a, mm))
            else:
                owner[mm] = a
            if mm not in everything:
                report.extra.append((a, mm))
    report.covered += sum(1 for mm in owner if mm in everything)
    report.missing.extend(mm for mm in everything if mm not in owner)


def verify_partition(n: int, family: str) -> PartitionReport:
    """Check that the per-ASM matching sets partition the region's matchings.

    ``family`` is ``"teeth"`` or ``"fortress"``; the fortress check runs over
    every bottom configuration.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    report = PartitionReport(n, family)
    asms = list(enumerate_halved_asms(n))
    if family == "teeth":
        groups = {}
        for a in asms:
            ms = aztec_matchings_of_asm(a)
            if len(ms) != 2 ** weight_stats(a).n_minus:
                report.cardinality_failures.append((a, len(ms)))
            groups[a] = ms
        _check_cover(report, build_teeth_region(n), groups)
    elif family == "fortress":
        for cs in BottomSpec.free(n).configurations():
            groups = {}
            for a in asms:
                if bottom_values(a) != cs:
                    continue
                ms = fortress_matchings_of_asm(a)
                if len(ms) != 2 ** weight_stats(a).fortress_exponent:
                    report.cardinality_failures.append((a, len(ms)))
                groups[a] = ms
            _check_cover(report, build_fortress(n, cs), groups)
    else:
        raise ValueError(f"unknown family {family!r}; expected 'teeth' or 'fortress'")
    return report

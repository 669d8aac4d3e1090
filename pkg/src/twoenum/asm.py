"""Full and halved alternating sign matrices and their height matrices.

Entries are indexed 1-based in all statistics (so "even position" means
``i + j`` even with ``1 <= i, j``), heights 0-based.  Matrices are plain
tuples of tuples of ints.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterator, Optional, Sequence

Matrix = tuple[tuple[int, ...], ...]


class InvalidAsm(ValueError):
    """Raised when a matrix or height matrix violates its constraints."""


@dataclass(frozen=True)
class Violation:
    constraint: str
    row: Optional[int]  # 1-based, None when not tied to a row
    col: Optional[int]
    message: str

    def __str__(self) -> str:
        where = []
        if self.row is not None:
            where.append(f"row {self.row}")
        if self.col is not None:
            where.append(f"col {self.col}")
        loc = f" at {', '.join(where)}" if where else ""
        return f"{self.constraint}{loc}: {self.message}"


@dataclass(frozen=True)
class WeightStats:
    n_minus: int
    n_minus_even: int
    n_minus_odd: int
    n_plus_even: int
    n_plus_odd: int

    @property
    def fortress_exponent(self) -> int:
        """Exponent of 2 in the fortress weight, N_-(even) + N_+(odd)."""
        return self.n_minus_even + self.n_plus_odd

    @property
    def reflected_fortress_exponent(self) -> int:
        return self.n_minus_odd + self.n_plus_even

    def to_dict(self) -> dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class BottomSpec:
    """Constraint on the bottom height row ``(n, c_1, n, ..., c_n, n)``.

    ``values[i]`` is ``None`` (free) or the fixed value of ``c_{i+1}``,
    which must be ``n - 1`` or ``n + 1``.
    """

    n: int
    values: tuple[Optional[int], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("order parameter n must be >= 1")
        if len(self.values) != self.n:
            raise ValueError(f"expected {self.n} bottom constraints, got {len(self.values)}")
        for v in self.values:
            if v is not None and v not in (self.n - 1, self.n + 1):
                raise ValueError(f"c_i must be n-1 or n+1, got {v}")

    @classmethod
    def free(cls, n: int) -> "BottomSpec":
        return cls(n, (None,) * n)

    @classmethod
    def fixed(cls, n: int, c: int | Sequence[int]) -> "BottomSpec":
        if isinstance(c, int):
            return cls(n, (c,) * n)
        return cls(n, tuple(c))

    @classmethod
    def parse(cls, n: int, text: str | None) -> "BottomSpec":
        """Parse ``None``/``"free"``, ``"n+1"``, ``"n-1"`` or a comma list of those/ints/``*``."""
        if text is None or text.strip().lower() in ("", "free"):
            return cls.free(n)

        def one(tok: str) -> Optional[int]:
            tok = tok.strip().lower().replace(" ", "")
            if tok in ("*", "free"):
                return None
            if tok == "n+1":
                return n + 1
            if tok == "n-1":
                return n - 1
            return int(tok)

        toks = text.split(",")
        if len(toks) == 1:
            return cls(n, (one(toks[0]),) * n)
        return cls(n, tuple(one(t) for t in toks))

    @property
    def is_fixed(self) -> bool:
        return all(v is not None for v in self.values)

    def allows(self, cs: Sequence[int]) -> bool:
        return all(v is None or v == c for v, c in zip(self.values, cs))

    def configurations(self) -> Iterator[tuple[int, ...]]:
        """All fully fixed c-vectors compatible with this spec, lexicographically."""
        choices = [(v,) if v is not None else (self.n - 1, self.n + 1) for v in self.values]

        def rec(i: int, acc: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
            if i == self.n:
                yield acc
                return
            for c in choices[i]:
                yield from rec(i + 1, acc + (c,))

        yield from rec(0, ())


def as_matrix(rows: Sequence[Sequence[int]]) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in rows)


def _shape(a: Matrix) -> tuple[int, int]:
    if not a:
        raise InvalidAsm("empty matrix")
    width = len(a[0])
    if any(len(r) != width for r in a):
        raise InvalidAsm("ragged matrix")
    return len(a), width


def kind_of(a: Matrix) -> str:
    rows, cols = _shape(a)
    if rows == cols:
        return "full"
    if cols == 2 * rows:
        return "halved"
    raise InvalidAsm(f"a {rows}x{cols} matrix is neither k x k nor n x 2n")


def validate(a: Sequence[Sequence[int]], kind: Optional[str] = None) -> Optional[Violation]:
    """Return the first violated constraint, or ``None`` if ``a`` is valid.

    ``kind`` is ``"full"`` or ``"halved"``; inferred from the shape otherwise.
    """
    try:
        m = as_matrix(a)
        kind = kind or kind_of(m)
        rows, cols = _shape(m)
    except InvalidAsm as exc:
        return Violation("shape", None, None, str(exc))
    if kind == "full" and rows != cols:
        return Violation("shape", None, None, f"full ASM must be square, got {rows}x{cols}")
    if kind == "halved" and cols != 2 * rows:
        return Violation("shape", None, None, f"halved ASM must be n x 2n, got {rows}x{cols}")

    for i, row in enumerate(m, 1):
        for j, x in enumerate(row, 1):
            if x not in (-1, 0, 1):
                return Violation("entry", i, j, f"entry {x} not in {{-1,0,1}}")

    for i, row in enumerate(m, 1):
        s = 0
        for j, x in enumerate(row, 1):
            s += x
            if s not in (0, 1):
                msg = "nonzero entries do not alternate starting with 1"
                return Violation("row alternation", i, j, msg)
        if s != 1:
            return Violation("row sum", i, None, f"row sum is {s}, not 1")

    for j in range(cols):
        s = 0
        first = None
        for i in range(rows):
            x = m[i][j]
            if x and first is None:
                first = x
                if x == -1:
                    return Violation("column top", i + 1, j + 1, "topmost nonzero is -1")
            s += x
            if s not in (0, 1):
                return Violation("column alternation", i + 1, j + 1, "nonzero entries do not alternate")
        if kind == "full" and s != 1:
            return Violation("column sum", None, j + 1, f"column sum is {s}, not 1")
    return None


def check(a: Sequence[Sequence[int]], kind: Optional[str] = None) -> Matrix:
    """Validate and return the normalized matrix, raising :class:`InvalidAsm`."""
    v = validate(a, kind)
    if v is not None:
        raise InvalidAsm(str(v))
    return as_matrix(a)


def height_from_asm(a: Sequence[Sequence[int]]) -> Matrix:
    """``h[i][j] = i + j - 2 * sum_{l<=i, r<=j} a[l][r]`` for ``0 <= i <= rows``, ``0 <= j <= cols``."""
    m = check(a)
    rows, cols = _shape(m)
    h = [[0] * (cols + 1) for _ in range(rows + 1)]
    partial = [[0] * (cols + 1) for _ in range(rows + 1)]
    for i in range(rows + 1):
        for j in range(cols + 1):
            if i and j:
                partial[i][j] = (
                    m[i - 1][j - 1] + partial[i - 1][j] + partial[i][j - 1] - partial[i - 1][j - 1]
                )
            h[i][j] = i + j - 2 * partial[i][j]
    return as_matrix(h)


def asm_from_height(h: Sequence[Sequence[int]]) -> Matrix:
    """Invert :func:`height_from_asm` by taking mixed second differences."""
    hh = as_matrix(h)
    rows, cols = len(hh) - 1, len(hh[0]) - 1
    if rows < 1 or cols < 1 or any(len(r) != cols + 1 for r in hh):
        raise InvalidAsm("height matrix has the wrong shape")
    for j in range(cols + 1):
        if hh[0][j] != j:
            raise InvalidAsm(f"top height row must be 0..{cols}")
    for i in range(rows + 1):
        if hh[i][0] != i:
            raise InvalidAsm(f"left height column must be 0..{rows}")
    out = []
    for i in range(1, rows + 1):
        row = []
        for j in range(1, cols + 1):
            for (a, b) in ((hh[i][j], hh[i - 1][j]), (hh[i][j], hh[i][j - 1])):
                if abs(a - b) != 1:
                    raise InvalidAsm(f"adjacent heights differ by {abs(a - b)} near ({i},{j})")
            d = hh[i][j] - hh[i - 1][j] - hh[i][j - 1] + hh[i - 1][j - 1]
            if d not in (-2, 0, 2):
                raise InvalidAsm(f"mixed difference {d} at ({i},{j}) is not in {{-2,0,2}}")
            row.append(-d // 2)
        out.append(tuple(row))
    return check(out)


def bottom_values(a: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """The ``c_i`` of a halved ASM: its bottom height row at odd offsets."""
    h = height_from_asm(a)
    return tuple(h[-1][1::2])


def has_standard_bottom(a: Sequence[Sequence[int]]) -> bool:
    """True when the bottom height row reads ``n, c_1, n, ..., c_n, n``."""
    h = height_from_asm(a)
    n = len(h) - 1
    return all(v == n for v in h[-1][0::2])


def _rows_between(prev: Sequence[int], start: int, end: int,
                  pinned: Optional[dict[int, int]] = None) -> Iterator[tuple[int, ...]]:
    """Height rows below ``prev`` with the given end values, in lexicographic order."""
    width = len(prev)
    last = width - 1
    pinned = pinned or {}
    if abs(start - prev[0]) != 1:
        return
    row = [start] + [0] * last

    def rec(j: int) -> Iterator[tuple[int, ...]]:
        if j == width:
            yield tuple(row)
            return
        left, above = row[j - 1], prev[j]
        for v in (left - 1, left + 1):
            if abs(v - above) != 1:
                continue
            if j == last and v != end:
                continue
            if abs(v - end) > last - j:
                continue
            if j in pinned and pinned[j] != v:
                continue
            row[j] = v
            yield from rec(j + 1)

    yield from rec(1)


def enumerate_halved_height_matrices(n: int, bottom: Optional[BottomSpec] = None) -> Iterator[Matrix]:
    """Height matrices of the standard form, rows in lexicographic order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bottom = bottom or BottomSpec.free(n)
    if bottom.n != n:
        raise ValueError("bottom spec has the wrong order")
    top = tuple(range(2 * n + 1))
    pinned_last = {2 * i: n for i in range(n + 1)}
    for i, c in enumerate(bottom.values):
        if c is not None:
            pinned_last[2 * i + 1] = c

    rows: list[tuple[int, ...]] = [top]

    def rec(i: int) -> Iterator[Matrix]:
        if i > n:
            yield tuple(rows)
            return
        pinned = pinned_last if i == n else None
        for r in _rows_between(rows[-1], i, 2 * n - i, pinned):
            rows.append(r)
            yield from rec(i + 1)
            rows.pop()

    yield from rec(1)


def enumerate_halved_asms(n: int, bottom: Optional[BottomSpec] = None) -> Iterator[Matrix]:
    """Halved ASMs of order ``2n`` with standard bottom row satisfying ``bottom``."""
    for h in enumerate_halved_height_matrices(n, bottom):
        yield asm_from_height(h)


def enumerate_full_asms(k: int) -> Iterator[Matrix]:
    """All ``k x k`` alternating sign matrices, via height matrices."""
    if k < 1:
        raise ValueError("order must be >= 1")
    top = tuple(range(k + 1))
    last = tuple(range(k, -1, -1))
    rows: list[tuple[int, ...]] = [top]

    def rec(i: int) -> Iterator[Matrix]:
        if i == k:
            if all(abs(a - b) == 1 for a, b in zip(rows[-1], last)):
                rows.append(last)
                yield asm_from_height(tuple(rows))
                rows.pop()
            return
        for r in _rows_between(rows[-1], i, k - i):
            rows.append(r)
            yield from rec(i + 1)
            rows.pop()

    yield from rec(1)


def weight_stats(a: Sequence[Sequence[int]]) -> WeightStats:
    m = check(a)
    counts = {"me": 0, "mo": 0, "pe": 0, "po": 0}
    for i, row in enumerate(m, 1):
        for j, x in enumerate(row, 1):
            if x == 0:
                continue
            key = ("m" if x < 0 else "p") + ("e" if (i + j) % 2 == 0 else "o")
            counts[key] += 1
    return WeightStats(
        n_minus=counts["me"] + counts["mo"],
        n_minus_even=counts["me"],
        n_minus_odd=counts["mo"],
        n_plus_even=counts["pe"],
        n_plus_odd=counts["po"],
    )


def reflect(a: Sequence[Sequence[int]]) -> Matrix:
    """Left-right mirror image."""
    return tuple(tuple(reversed(row)) for row in as_matrix(a))

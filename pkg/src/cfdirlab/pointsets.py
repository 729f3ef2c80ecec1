"""Finite lattice point sets: explicit sets and products of arithmetic progressions.

The (C,F) levels of the explicit constructions reach 10^20 points and more, so
the measure engine never materializes them.  ``Grid`` covers boxes, the grids
K_{t,N} and the Heisenberg blocks c(i k) a(j k); everything else is ``Explicit``.
"""
from __future__ import annotations

from collections import Counter
from itertools import product
import math

MATERIALIZE_LIMIT = 2_000_000


class TooLarge(RuntimeError):
    """Raised when an operation would have to enumerate an oversized set."""


class Explicit:
    __slots__ = ("points", "dim")

    def __init__(self, points, dim=None):
        pts = frozenset(tuple(p) for p in points)
        if not pts:
            raise ValueError("empty point set")
        dims = {len(p) for p in pts}
        if len(dims) != 1:
            raise ValueError("mixed dimensions in point set")
        self.points = pts
        self.dim = dims.pop() if dim is None else dim

    def __len__(self):
        return len(self.points)

    @property
    def count(self):
        return len(self.points)

    def __contains__(self, p):
        return tuple(p) in self.points

    def __iter__(self):
        return iter(sorted(self.points))

    def __eq__(self, other):
        if isinstance(other, Explicit):
            return self.points == other.points
        if isinstance(other, Grid) and other.count <= MATERIALIZE_LIMIT:
            return self.points == frozenset(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.points)

    def __repr__(self):
        if len(self.points) <= 8:
            return f"Explicit({sorted(self.points)})"
        return f"Explicit(<{len(self.points)} points>)"

    def bbox(self):
        return tuple((min(p[i] for p in self.points), max(p[i] for p in self.points))
                     for i in range(self.dim))

    def materialize(self, limit=MATERIALIZE_LIMIT):
        return self.points

    def in_box(self, box):
        for p in self:
            if all(lo <= x <= hi for x, (lo, hi) in zip(p, box)):
                yield p

    def to_json(self):
        return [list(p) for p in sorted(self.points)]


class Grid:
    """Product of arithmetic progressions start_i + step_i * j, 0 <= j < count_i."""

    __slots__ = ("start", "step", "count_", "dim")

    def __init__(self, start, step, count):
        start, step, count = tuple(start), tuple(step), tuple(count)
        if not (len(start) == len(step) == len(count)):
            raise ValueError("start/step/count length mismatch")
        if any(s < 1 for s in step) or any(n < 1 for n in count):
            raise ValueError("grid steps and counts must be positive")
        # a single-point axis carries no step information
        step = tuple(1 if n == 1 else s for s, n in zip(step, count))
        self.start, self.step, self.count_, self.dim = start, step, count, len(start)

    @classmethod
    def box(cls, lo, hi):
        lo, hi = tuple(lo), tuple(hi)
        if any(h < l for l, h in zip(lo, hi)):
            raise ValueError("empty box")
        return cls(lo, (1,) * len(lo), tuple(h - l + 1 for l, h in zip(lo, hi)))

    @classmethod
    def symmetric_cube(cls, d, a):
        """{(i_1..i_d) : -a < i_j <= a}; a = 0 is read as the singleton {0}."""
        if a == 0:
            return cls.box((0,) * d, (0,) * d)
        return cls.box((-a + 1,) * d, (a,) * d)

    @classmethod
    def kgrid(cls, d, t, N):
        """K_{t,N}: integer points with every coordinate divisible by t and |x_j| < N."""
        q = (N - 1) // t
        if q < 0:
            raise ValueError("N must be >= 1")
        return cls((-t * q,) * d, (t,) * d, (2 * q + 1,) * d)

    @property
    def count(self):
        return math.prod(self.count_)

    def __len__(self):
        n = self.count
        if n > 2 ** 62:
            raise OverflowError("use .count for huge grids")
        return n

    @property
    def is_box(self):
        return all(s == 1 for s in self.step)

    def __contains__(self, p):
        if len(p) != self.dim:
            return False
        for x, s, st, n in zip(p, self.start, self.step, self.count_):
            off = x - s
            if off % st:
                return False
            j = off // st
            if j < 0 or j >= n:
                return False
        return True

    def __iter__(self):
        if self.count > MATERIALIZE_LIMIT:
            raise TooLarge(f"grid with {self.count} points")
        axes = [range(s, s + st * n, st) for s, st, n in zip(self.start, self.step, self.count_)]
        return iter(product(*axes))

    def __eq__(self, other):
        if isinstance(other, Grid):
            return (self.start, self.step, self.count_) == (other.start, other.step, other.count_)
        if isinstance(other, Explicit):
            return other.__eq__(self)
        return NotImplemented

    def __hash__(self):
        return hash((self.start, self.step, self.count_))

    def __repr__(self):
        return f"Grid(start={self.start}, step={self.step}, count={self.count_})"

    def bbox(self):
        return tuple((s, s + st * (n - 1)) for s, st, n in zip(self.start, self.step, self.count_))

    def materialize(self, limit=MATERIALIZE_LIMIT):
        if self.count > limit:
            raise TooLarge(f"grid with {self.count} points exceeds limit {limit}")
        return frozenset(iter(self))

    def axis_index_range(self, i, lo, hi):
        """Indices j with lo <= start_i + step_i j <= hi, as a half-open range."""
        s, st, n = self.start[i], self.step[i], self.count_[i]
        j0 = max(0, _ceildiv(lo - s, st))
        j1 = min(n - 1, (hi - s) // st)
        return j0, j1 + 1

    def in_box(self, box, budget=MATERIALIZE_LIMIT):
        ranges, total = [], 1
        for i, (lo, hi) in enumerate(box):
            j0, j1 = self.axis_index_range(i, lo, hi)
            if j1 <= j0:
                return
            ranges.append(range(self.start[i] + self.step[i] * j0,
                                self.start[i] + self.step[i] * j1, self.step[i]))
            total *= j1 - j0
        if total > budget:
            raise TooLarge(f"{total} grid points in box")
        yield from product(*ranges)

    def to_json(self):
        return {"grid": {"start": list(self.start), "step": list(self.step), "count": list(self.count_)}}


def _ceildiv(a, b):
    return -((-a) // b)


def pointset_from_json(obj):
    if isinstance(obj, dict) and "grid" in obj:
        g = obj["grid"]
        return Grid([int(x) for x in g["start"]], [int(x) for x in g["step"]],
                    [int(x) for x in g["count"]])
    return Explicit([tuple(int(x) for x in p) for p in obj])


def as_pointset(obj):
    if isinstance(obj, (Explicit, Grid)):
        return obj
    return Explicit(obj)


def product_set(P, Q):
    """Cartesian product, used for tensor powers."""
    if isinstance(P, Grid) and isinstance(Q, Grid):
        return Grid(P.start + Q.start, P.step + Q.step, P.count_ + Q.count_)
    if P.count * Q.count > MATERIALIZE_LIMIT:
        raise TooLarge("product of explicit sets too large")
    return Explicit([p + q for p in P for q in Q])


def inside_box(box, outer):
    return all(o[0] <= b[0] and b[1] <= o[1] for b, o in zip(box, outer))


def is_full_box(ps):
    return isinstance(ps, Grid) and ps.is_box


# ---------------------------------------------------------------------------
# difference tables: the multiset {c - c' : c, c' in C}


class DiffTable:
    """Multiset of coordinate differences of an explicit set."""

    def __init__(self, pts):
        pts = list(pts)
        self.table = Counter(tuple(x - y for x, y in zip(p, q)) for p in pts for q in pts)

    def mult(self, delta):
        return self.table.get(tuple(delta), 0)

    def in_box(self, box, budget=MATERIALIZE_LIMIT):
        for delta, m in self.table.items():
            if all(lo <= x <= hi for x, (lo, hi) in zip(delta, box)):
                yield delta, m

    def bbox(self):
        keys = list(self.table)
        return tuple((min(k[i] for k in keys), max(k[i] for k in keys)) for i in range(len(keys[0])))

    def __iter__(self):
        return iter(self.table.items())


class DiffGrid:
    """Differences of a Grid: step * e with |e_i| < count_i, multiplicity prod(count_i - |e_i|)."""

    def __init__(self, grid):
        self.step, self.count_ = grid.step, grid.count_

    def mult(self, delta):
        m = 1
        for x, st, n in zip(delta, self.step, self.count_):
            if x % st:
                return 0
            e = abs(x // st)
            if e >= n:
                return 0
            m *= n - e
        return m

    def axis_range(self, i, lo, hi):
        st, n = self.step[i], self.count_[i]
        elo = max(-(n - 1), _ceildiv(lo, st))
        ehi = min(n - 1, hi // st)
        return elo, ehi

    def in_box(self, box, budget=MATERIALIZE_LIMIT):
        ranges = []
        total = 1
        for i, (lo, hi) in enumerate(box):
            elo, ehi = self.axis_range(i, lo, hi)
            if ehi < elo:
                return
            ranges.append(range(elo, ehi + 1))
            total *= ehi - elo + 1
        if total > budget:
            raise TooLarge(f"{total} difference points in box")
        for e in product(*ranges):
            delta = tuple(st * x for st, x in zip(self.step, e))
            yield delta, self.mult(delta)

    def bbox(self):
        return tuple((-st * (n - 1), st * (n - 1)) for st, n in zip(self.step, self.count_))

    def __iter__(self):
        return self.in_box(self.bbox())


def diff_table(ps):
    if isinstance(ps, Grid):
        return DiffGrid(ps)
    return DiffTable(ps)


def progression_overlap(n, step, shift):
    """#{0 <= j < n : j + shift/step also in [0, n)} for a progression of n terms."""
    if shift % step:
        return 0
    return max(0, n - abs(shift // step))


def progression_multi_overlap(n, step, shifts):
    """#{j : j + s/step in [0, n) for every shift s} (the zero shift is implicit)."""
    es = [0]
    for s in shifts:
        if s % step:
            return 0
        es.append(s // step)
    return max(0, n - (max(es) - min(es)))


def tent_sum(W, p, q, j0, j1):
    """sum_{j0 <= j < j1} max(0, W - |p + q j|), integers, in closed form."""
    if j1 <= j0 or W <= 0:
        return 0
    if q == 0:
        return (j1 - j0) * max(0, W - abs(p))
    if q < 0:
        # j -> -j
        return tent_sum(W, p, -q, -j1 + 1, -j0 + 1)
    total = 0
    # p + q j >= 0 and p + q j <= W - 1: term W - p - q j
    a = max(j0, _ceildiv(-p, q))
    b = min(j1 - 1, (W - 1 - p) // q)
    if b >= a:
        cnt = b - a + 1
        total += cnt * (W - p) - q * (a + b) * cnt // 2
    # p + q j < 0 and p + q j >= 1 - W: term W + p + q j
    a = max(j0, _ceildiv(1 - W - p, q))
    b = min(j1 - 1, _ceildiv(-p, q) - 1)
    if b >= a:
        cnt = b - a + 1
        total += cnt * (W + p) + q * (a + b) * cnt // 2
    return total

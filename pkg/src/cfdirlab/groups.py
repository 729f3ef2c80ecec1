"""Exact arithmetic on the ambient groups R^d (lattice Z^d) and H3(R) (lattice H3(Z)).

Group elements are plain tuples of ``int`` / ``fractions.Fraction``.  The group
object carries the descriptor, so ``G.mul(g, h)`` rather than ``g * h``.

Heisenberg coordinates: ``(t1, t2, t3)`` is the matrix

    [[1, t1, t3],
     [0,  1, t2],
     [0,  0,  1]]  =  c(t3) b(t2) a(t1)

with ``a(t) = (t, 0, 0)``, ``b(t) = (0, t, 0)`` and ``c(t) = (0, 0, t)`` central.
Swapping the generator order silently breaks the third term of the metric, so
every coordinate in this package follows this convention.

Lie algebra vectors of h3 are triples ``(alpha, beta, gamma)`` holding the
strictly upper-triangular entries in the same positions.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
import math

__all__ = [
    "Abelian",
    "Heisenberg",
    "H3",
    "group_from_descriptor",
    "a",
    "b",
    "c",
    "Box",
]

# An axis-aligned box is a tuple of (lo, hi) pairs, one per coordinate.
Box = tuple


def _check(*elems, dim):
    for e in elems:
        if len(e) != dim:
            raise ValueError(f"element {e!r} does not belong to a group of dimension {dim}")


def _imul(i, j):
    """Interval product [i] * [j]."""
    vals = [i[0] * j[0], i[0] * j[1], i[1] * j[0], i[1] * j[1]]
    return (min(vals), max(vals))


@dataclass(frozen=True)
class Abelian:
    """R^d with lattice Z^d; group law is vector addition."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")

    kind = "Zd"
    commutative = True

    @property
    def dim(self):
        return self.d

    @property
    def identity(self):
        return (0,) * self.d

    def mul(self, g, h):
        _check(g, h, dim=self.d)
        return tuple(x + y for x, y in zip(g, h))

    def inv(self, g):
        _check(g, dim=self.d)
        return tuple(-x for x in g)

    def power(self, g, k):
        return tuple(k * x for x in g)

    def exp(self, v):
        _check(v, dim=self.d)
        return tuple(v)

    def log(self, g):
        _check(g, dim=self.d)
        return tuple(g)

    def adjoint(self, g, v):
        _check(g, v, dim=self.d)
        return tuple(v)

    def conj(self, g, h):
        """g h g^-1."""
        return tuple(h)

    def dist(self, g, h):
        """Euclidean distance; exact rational squared distance pushed through sqrt."""
        _check(g, h, dim=self.d)
        if all(type(x) is int for x in g) and all(type(y) is int for y in h):
            return _sqrt(sum((x - y) ** 2 for x, y in zip(g, h)))
        sq = sum((Fraction(x) - Fraction(y)) ** 2 for x, y in zip(g, h))
        return _sqrt(sq)

    def norm(self, g):
        return self.dist(g, self.identity)

    def is_lattice(self, g):
        return all(Fraction(x).denominator == 1 for x in g)

    def in_abelian_plane(self, g):
        return True

    # interval arithmetic on bounding boxes
    def mul_box(self, B1, B2):
        return tuple((p[0] + q[0], p[1] + q[1]) for p, q in zip(B1, B2))

    def inv_box(self, B):
        return tuple((-hi, -lo) for lo, hi in B)

    def ball(self, radius):
        """All lattice points with dist(g, identity) <= radius."""
        r = int(math.floor(radius))
        out = []
        for p in product(range(-r, r + 1), repeat=self.d):
            if sum(x * x for x in p) <= radius * radius:
                out.append(p)
        return out

    def to_json(self):
        return {"group": "Zd", "d": self.d}


@dataclass(frozen=True)
class Heisenberg:
    """H3(R) with lattice H3(Z)."""

    kind = "H3"
    commutative = False
    d = 3

    @property
    def dim(self):
        return 3

    @property
    def identity(self):
        return (0, 0, 0)

    def mul(self, g, h):
        _check(g, h, dim=3)
        x, y, z = g
        u, v, w = h
        return (x + u, y + v, z + w + x * v)

    def inv(self, g):
        _check(g, dim=3)
        x, y, z = g
        return (-x, -y, x * y - z)

    def power(self, g, k):
        # exp(k log g): exact for every integer k
        x, y, z = g
        return (k * x, k * y, k * z + (k * (k - 1) // 2) * x * y)

    def exp(self, v):
        _check(v, dim=3)
        t1, t2, t3 = v
        return (t1, t2, t3 + _half(t1 * t2))

    def log(self, g):
        _check(g, dim=3)
        x, y, z = g
        return (x, y, z - _half(x * y))

    def adjoint(self, g, v):
        _check(g, v, dim=3)
        x, y, _ = g
        al, be, ga = v
        return (al, be, ga + x * be - y * al)

    def conj(self, g, h):
        """g h g^-1, i.e. exp(Ad_g log h)."""
        x, y, _ = g
        u, v, w = h
        return (u, v, w + x * v - y * u)

    def dist(self, g, h):
        """Right-invariant distance |t1-t1'| + |t2-t2'| + |t3-t3'+t2'(t1'-t1)|.

        This is N(g h^-1) with N the l1 norm of coordinates.  It is not
        symmetric and does not satisfy the triangle inequality on all of H3;
        it is used verbatim.
        """
        _check(g, h, dim=3)
        t1, t2, t3 = g
        s1, s2, s3 = h
        return abs(t1 - s1) + abs(t2 - s2) + abs(t3 - s3 + s2 * (s1 - t1))

    def norm(self, g):
        return abs(g[0]) + abs(g[1]) + abs(g[2])

    def is_lattice(self, g):
        return all(Fraction(x).denominator == 1 for x in g)

    def in_abelian_plane(self, g):
        """Membership in {b = 0}, where right multiplication is coordinate addition."""
        return g[1] == 0

    def mul_box(self, B1, B2):
        (x, y, z), (u, v, w) = B1, B2
        xv = _imul(x, v)
        return ((x[0] + u[0], x[1] + u[1]),
                (y[0] + v[0], y[1] + v[1]),
                (z[0] + w[0] + xv[0], z[1] + w[1] + xv[1]))

    def inv_box(self, B):
        x, y, z = B
        xy = _imul(x, y)
        return ((-x[1], -x[0]), (-y[1], -y[0]), (xy[0] - z[1], xy[1] - z[0]))

    def ball(self, radius):
        r = int(math.floor(radius))
        out = []
        for p in product(range(-r, r + 1), repeat=3):
            if abs(p[0]) + abs(p[1]) + abs(p[2]) <= radius:
                out.append(p)
        return out

    def to_json(self):
        return {"group": "H3"}


H3 = Heisenberg()


def group_from_descriptor(desc):
    if desc.get("group") == "H3":
        return H3
    if desc.get("group") == "Zd":
        return Abelian(int(desc["d"]))
    raise ValueError(f"unknown group descriptor {desc!r}")


def a(t):
    return (t, 0, 0)


def b(t):
    return (0, t, 0)


def c(t):
    return (0, 0, t)


def _half(v):
    """v/2, exact for int and Fraction input."""
    if isinstance(v, int):
        return v // 2 if v % 2 == 0 else Fraction(v, 2)
    return v / 2


def _sqrt(q):
    q = Fraction(q)
    if q == 0:
        return 0.0
    # float(q) is correctly rounded even for huge numerators
    try:
        return math.sqrt(float(q))
    except OverflowError:
        return float(math.isqrt(q.numerator // q.denominator))

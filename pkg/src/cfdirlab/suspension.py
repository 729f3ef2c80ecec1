"""Torus mechanics of the suspension of a Z^d-action to R^d.

R^d / Z^d is identified with [0,1)^d through the section s(y) = y, so the
cocycle is h(g, y) = [g + y] (componentwise floor).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math


def _floor(x):
    return math.floor(x)


def _frac_part(x):
    return x - math.floor(x)


@dataclass(frozen=True)
class TorusPoint:
    y: tuple

    def __post_init__(self):
        y = tuple(self.y)
        if any(not (0 <= v < 1) for v in y):
            raise ValueError("torus coordinates must lie in [0, 1)")
        object.__setattr__(self, "y", y)

    @property
    def dim(self):
        return len(self.y)


def _coords(y):
    return y.y if isinstance(y, TorusPoint) else tuple(y)


def cocycle(g, y):
    yy = _coords(y)
    if len(g) != len(yy):
        raise ValueError("dimension mismatch")
    return tuple(_floor(a + b) for a, b in zip(g, yy))


def torus_action(g, y):
    """{g + y}: where the torus point goes."""
    return TorusPoint(tuple(_frac_part(a + b) for a, b in zip(g, _coords(y))))


def cocycle_defect(g1, g2, y):
    """h(g2, {g1 + y}) + h(g1, y) - h(g2 + g1, y); zero for a cocycle."""
    mid = torus_action(g1, y)
    lhs = [a + b for a, b in zip(cocycle(g2, mid), cocycle(g1, y))]
    rhs = cocycle(tuple(a + b for a, b in zip(g2, g1)), y)
    return tuple(a - b for a, b in zip(lhs, rhs))


def rigidity_transfer_statistic(eps):
    """Lebesgue measure of {y : eps + y in [0,1)^d}."""
    out = 1.0
    for e in eps:
        out *= max(0.0, 1.0 - abs(float(e)))
    return out


def window_return_check(g, eps):
    """Does g + Y meet Y (mod Z^d) for the window Y = [1/2, 1/2 + eps)^d?

    On a hit gamma = [g + 1/2] is within eps of g in every coordinate.  For
    eps <= 1/4 the integer part [g + y] equals gamma for every y in Y; above
    1/4 the shifted window can straddle an integer.
    """
    if not 0 < eps < Fraction(1, 2):
        raise ValueError("eps must lie in (0, 1/2)")
    eps = Fraction(eps)
    gamma = []
    for x in g:
        x = Fraction(x)
        k = math.floor(x)
        f = x - k
        # x + Y meets Y + Z iff the fractional part is < eps or > 1 - eps
        if f < eps:
            gamma.append(k)
        elif f > 1 - eps:
            gamma.append(k + 1)
        else:
            return False, None
    gamma = tuple(gamma)
    dev = max(abs(Fraction(x) - k) for x, k in zip(g, gamma))
    assert dev < eps
    return True, gamma


def window_constant_on_grid(g, eps, samples=16):
    """Sampled check that y -> [g + y] is constant on the window."""
    d = len(g)
    vals = set()
    for i in range(samples):
        t = Fraction(1, 2) + Fraction(eps) * Fraction(i, samples)
        y = tuple(t for _ in range(d))
        vals.add(tuple(math.floor(Fraction(x) + yy) for x, yy in zip(g, y)))
    return len(vals) == 1


def transfer_sequence(witnesses, direction):
    """Statistic along a witness sequence: eps_n = t_n - gamma_n with t_n the foot on the line."""
    # exact foot of the perpendicular; floats lose everything once gamma_n is large
    v = direction.vec()
    vv = sum(x * x for x in v)
    out = []
    for g in witnesses:
        s = sum(Fraction(a) * b for a, b in zip(g, v)) / vv
        eps = [s * b - Fraction(a) for a, b in zip(g, v)]
        out.append(rigidity_transfer_statistic(eps))
    return out

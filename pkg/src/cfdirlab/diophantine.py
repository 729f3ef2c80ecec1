"""Rational approximation helpers: continued fractions and Dirichlet bounds."""
from __future__ import annotations

from fractions import Fraction
import math


def cf_expansion(x, max_terms=200):
    x = Fraction(x)
    out = []
    while len(out) < max_terms:
        a = math.floor(x)
        out.append(a)
        frac = x - a
        if frac == 0:
            break
        x = 1 / frac
    return out


def convergents(x, max_terms=200):
    """Successive convergents p/q of x as (p, q) pairs with q > 0."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    out = []
    for a in cf_expansion(x, max_terms):
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    return out


def best_approximations(x, qmax, max_terms=200):
    """Convergents and semiconvergents of x with denominator <= qmax.

    Every best approximation of the first kind, min |q x - p| over q <= Q,
    is a convergent, so including them certifies the minimum.
    """
    x = Fraction(x)
    p0, q0, p1, q1 = 0, 1, 1, 0
    out = []
    for a in cf_expansion(x, max_terms):
        p, q = a * p1 + p0, a * q1 + q0
        if q > qmax:
            # largest admissible semiconvergent before the bound
            if q1:
                s = (qmax - q0) // q1
                if s >= 1:
                    out.append((s * p1 + p0, s * q1 + q0))
            break
        if q > 0:
            out.append((p, q))
        p0, q0, p1, q1 = p1, q1, p, q
    return sorted(set(out), key=lambda pq: pq[1])


def min_fractional_distance(x, qmax):
    """min over 1 <= q <= qmax of |q x - p| with p the nearest integer, exactly."""
    x = Fraction(x)
    best = None
    for p, q in convergents(x):
        if q > qmax:
            break
        err = abs(q * x - p)
        if best is None or err < best[0]:
            best = (err, p, q)
    if best is None:
        p = round(x)
        best = (abs(x - p), p, 1)
    return best


def dirichlet_planar_Q(t, eps):
    """Smallest Q with t/(Q+1) < eps: some lattice vector t(q, p), 1 <= q <= Q, |p| <= Q,
    lies within t/(Q+1) of any given line through the origin of R^2."""
    # floats are read by their decimal form, so 0.2 means 1/5
    t, eps = Fraction(t), Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    return max(1, math.floor(t / eps))


def dirichlet_simultaneous_Q(t, eps, d):
    """Q with t sqrt(d-1)/Q < eps; the witness has all coordinates bounded by t Q^(d-1)."""
    k = d - 1
    return max(1, math.floor(t * math.sqrt(k) / float(eps)) + 1)

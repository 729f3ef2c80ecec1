"""JSON helpers: exact rationals travel as "p/q" strings, integers as integers."""
from __future__ import annotations

from fractions import Fraction
import json


def qstr(x):
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_q(s):
    if isinstance(s, bool):
        raise TypeError("boolean is not a rational")
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, float):
        return Fraction(s)
    return Fraction(str(s))


def coord_out(x):
    """A group coordinate for JSON: int stays int, a non-integral rational becomes "p/q"."""
    if isinstance(x, int):
        return x
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else qstr(x)


def coord_in(x):
    if isinstance(x, int) and not isinstance(x, bool):
        return x
    q = parse_q(x)
    return q.numerator if q.denominator == 1 else q


def elem_out(g):
    return [coord_out(x) for x in g]


def elem_in(g):
    return tuple(coord_in(x) for x in g)


def dumps(obj):
    """Canonical serialization used for every report payload."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

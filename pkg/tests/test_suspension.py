from fractions import Fraction
import math

from hypothesis import given, settings, strategies as st
import pytest

from cfdirlab.directions import project
from cfdirlab.suspension import (
    TorusPoint,
    cocycle,
    cocycle_defect,
    rigidity_transfer_statistic,
    torus_action,
    transfer_sequence,
    window_constant_on_grid,
    window_return_check,
)

real = st.floats(-50, 50, allow_nan=False)
unit = st.floats(0, 1, exclude_max=True)
qreal = st.fractions(min_value=-50, max_value=50, max_denominator=1000)


def test_cocycle_examples():
    assert cocycle((0.7, 0), (0.5, 0)) == (1, 0)
    assert cocycle((-0.2, 3), TorusPoint((0.1, 0.0))) == (-1, 3)
    assert torus_action((0.7, 0), (0.5, 0)).y == pytest.approx((0.2, 0))
    with pytest.raises(ValueError):
        TorusPoint((1.0, 0.0))
    with pytest.raises(ValueError):
        cocycle((1, 2), (0.5,))


def test_window_examples():
    assert window_return_check((1.3, 0), 0.2) == (False, None)
    assert window_return_check((2.05, -1.02), 0.1) == (True, (2, -1))
    assert window_return_check((4, -7), 0.1) == (True, (4, -7))
    with pytest.raises(ValueError):
        window_return_check((0.1,), Fraction(1, 2))


def test_transfer_statistic_examples():
    assert rigidity_transfer_statistic((0.1, 0.2)) == pytest.approx(0.72)
    assert rigidity_transfer_statistic((0, 0, 0)) == 1
    assert rigidity_transfer_statistic((1.0, 0.0)) == 0
    assert rigidity_transfer_statistic((-1.5,)) == 0


def test_transfer_sequence_increases_along_closer_witnesses():
    th = project((1, math.sqrt(2) - 1))
    # integer points closer and closer to the line
    ws = [(1, 0), (5, 2), (12, 5), (29, 12), (70, 29)]
    s = transfer_sequence(ws, th)
    assert all(b >= a for a, b in zip(s, s[1:]))
    assert s[-1] > 0.99


@given(st.tuples(real, real), st.tuples(real, real), st.tuples(unit, unit))
def test_cocycle_identity(g1, g2, y):
    # exact rationals avoid floor-boundary rounding
    g1 = tuple(Fraction(x) for x in g1)
    g2 = tuple(Fraction(x) for x in g2)
    y = tuple(Fraction(x) for x in y)
    assert cocycle_defect(g1, g2, y) == (0, 0)


@given(st.tuples(real, real), st.tuples(unit, unit))
def test_action_is_fractional_part(g, y):
    g = tuple(Fraction(x) for x in g)
    y = tuple(Fraction(x) for x in y)
    h = cocycle(g, y)
    z = torus_action(g, y).y
    assert tuple(a + b for a, b in zip(g, y)) == tuple(a + b for a, b in zip(h, z))


def test_window_can_straddle_above_a_quarter():
    g, eps = (Fraction(1, 3),), Fraction(49, 100)
    assert window_return_check(g, eps) == (True, (0,))
    assert not window_constant_on_grid(g, eps)


@settings(max_examples=200)
@given(st.tuples(qreal, qreal, qreal), st.fractions(Fraction(1, 1000), Fraction(1, 4)),
       st.lists(st.tuples(st.fractions(0, 1), st.fractions(0, 1), st.fractions(0, 1)), min_size=1, max_size=5))
def test_window_constancy(g, eps, ts):
    hit, gamma = window_return_check(g, eps)
    if not hit:
        return
    assert max(abs(x - k) for x, k in zip(g, gamma)) < eps
    assert window_constant_on_grid(g, eps)
    assert cocycle(g, (Fraction(1, 2),) * 3) == gamma
    for t in ts:
        # arbitrary points of the window [1/2, 1/2 + eps)^3
        y = tuple(Fraction(1, 2) + eps * min(u, Fraction(999, 1000)) for u in t)
        assert cocycle(g, y) == gamma


@given(st.tuples(qreal, qreal), st.fractions(Fraction(1, 1000), Fraction(49, 100)))
def test_window_extraction_up_to_a_half(g, eps):
    hit, gamma = window_return_check(g, eps)
    if hit:
        assert max(abs(x - k) for x, k in zip(g, gamma)) < eps


@given(st.tuples(qreal, qreal), st.fractions(Fraction(1, 1000), Fraction(49, 100)))
def test_window_miss_is_genuine(g, eps):
    hit, _ = window_return_check(g, eps)
    if hit:
        return
    # some coordinate keeps distance at least eps from the integers
    assert max(min(x - math.floor(x), math.ceil(x) - x) for x in g) >= eps

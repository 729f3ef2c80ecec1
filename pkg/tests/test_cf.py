from fractions import Fraction
from itertools import product
import json
import random

from hypothesis import assume, given, settings, strategies as st
import pytest

from _gen import random_base, random_schedule
from cfdirlab.cf import (
    CFSchedule,
    Cylinder,
    DepthError,
    ScheduleError,
    check_IV,
    cylinder,
    cylinder_measure,
    direct_intersection_count,
    intersection_measure,
    multi_intersection_measure,
    refine_cylinder,
    return_candidates,
    tensor_power,
    validate_schedule,
)
from cfdirlab.groups import H3, Abelian
from cfdirlab.pointsets import Explicit, Grid

Z1 = Abelian(1)


def pts(*xs):
    return Explicit([(x,) for x in xs])


@pytest.fixture
def z1():
    """F0 = {0}, C1 = {0,2}, F1 = {0..3}, C2 = {0,4}, F2 = {0..7}."""
    return CFSchedule(Z1, [pts(0), pts(0, 1, 2, 3), pts(*range(8))], [pts(0, 2), pts(0, 4)])


def brute_count(c, g, m):
    """#{tuples (a, c_{n+1}, ..., c_m) : g a c_{n+1} ... c_m lands in A C_{n+1} ... C_m}."""
    s = c.schedule
    G = s.G
    levels = [list(c.A)] + [list(s.C[k]) for k in range(c.level + 1, m + 1)]
    prods = []
    for tup in product(*levels):
        x = tup[0]
        for y in tup[1:]:
            x = G.mul(x, y)
        prods.append(x)
    S = set(prods)
    return sum(1 for x in prods if G.mul(g, x) in S)


def brute_measure(c, g, m):
    return Fraction(brute_count(c, g, m), c.schedule.card_prod(m))


# ---------------------------------------------------------------------------
# worked examples


def test_z1_conditions(z1):
    rep = validate_schedule(z1)
    assert rep.ok
    assert rep.levels[0] == {"level": 1, "I": True, "II": True, "III": True, "lattice": True}


def test_trivial_c_fails_condition_I():
    s = CFSchedule(Z1, [pts(0), pts(0, 1)], [pts(0)])
    rep = validate_schedule(s)
    assert {"level": 1, "condition": "(I)"} in rep.failures
    with pytest.raises(ScheduleError):
        validate_schedule(s, raise_on_failure=True)


def test_overlap_fails_condition_III():
    s = CFSchedule(Z1, [pts(0), pts(0, 1), pts(0, 1, 2, 3)], [pts(0, 1), pts(0, 1)])
    assert {"level": 2, "condition": "(III)"} in validate_schedule(s).failures


def test_cylinder_measure_examples(z1):
    assert cylinder_measure(cylinder(z1, 0)) == 1
    assert cylinder_measure(Cylinder(z1, 1, pts(0, 1))) == 1
    assert cylinder_measure(cylinder(z1, 1)) == 2
    assert cylinder_measure(cylinder(z1, 2)) == 2
    with pytest.raises(ScheduleError):
        Cylinder(z1, 1, pts(9))


def test_refine_example(z1):
    c = cylinder(z1, 0)
    assert refine_cylinder(c, 0) is c
    r = refine_cylinder(c, 1)
    assert set(r.A) == {(0,), (2,)} and cylinder_measure(r) == 1
    with pytest.raises(DepthError):
        refine_cylinder(r, 0)


def test_intersection_examples(z1):
    c = cylinder(z1, 0)
    est = intersection_measure(c, (2,), 2)
    assert est.value == Fraction(3, 4) and est.count == 3
    assert intersection_measure(c, (0,), 2).value == 1
    assert intersection_measure(c, (0,), 1).value == 1
    assert intersection_measure(c, (8,), 2).value == 0
    assert multi_intersection_measure(c, (2,), 2, 2).value == Fraction(2, 4)
    assert multi_intersection_measure(c, (0,), 5, 2).value == 1


def test_stabilized_flag(z1):
    c = cylinder(z1, 0)
    assert intersection_measure(c, (0,), 2).stabilized
    assert not intersection_measure(c, (2,), 2).stabilized


def test_depth_checked(z1):
    with pytest.raises(DepthError):
        intersection_measure(cylinder(z1, 1), (2,), 0)
    with pytest.raises(DepthError):
        intersection_measure(cylinder(z1, 0), (2,), 3)


def test_return_candidates_example(z1):
    c = Cylinder(z1, 0, pts(0))
    assert return_candidates(c, 2) == {(x,) for x in (0, 2, -2, 4, -4, 6, -6)}
    A = pts(0, 1, 3)
    c1 = Cylinder(z1, 1, A)
    assert return_candidates(c1, 1) == {(a - b,) for (a,) in A for (b,) in A}


def test_tensor_power(z1):
    assert tensor_power(z1, 1) is z1
    s2 = tensor_power(z1, 2)
    assert s2.G == Abelian(2)
    assert set(s2.C[1]) == {(0, 0), (0, 2), (2, 0), (2, 2)}
    assert set(s2.F[1]) == set(product(range(4), repeat=2))
    assert validate_schedule(s2).ok
    c = Cylinder(z1, 0, pts(0))
    c2 = Cylinder(s2, 0, Explicit([(0, 0)]))
    for g in range(-6, 7):
        assert intersection_measure(c2, (g, g), 2).value == intersection_measure(c, (g,), 2).value ** 2
    with pytest.raises(NotImplementedError):
        tensor_power(CFSchedule(H3, [Explicit([(0, 0, 0)]), Grid.box((0, 0, 0), (1, 0, 0))],
                                [Explicit([(0, 0, 0), (1, 0, 0)])]), 2)


def test_check_IV_vocabulary(z1):
    assert check_IV(z1, (0,), 0)["verdict"] == "HOLDS_FROM(0)"
    v = check_IV(z1, (100,), 0)
    assert v["verdict"] == "UNRESOLVED" and v["m"] is None
    rep = validate_schedule(z1, gamma_ball_radius=1)
    assert all(r["verdict"] == "UNRESOLVED" or r["verdict"].startswith("HOLDS_FROM(")
               for r in rep.condition_iv)


def test_growth_statistic(z1):
    rep = validate_schedule(z1)
    assert rep.growth == [1, 2, 2]
    assert not rep.growth_increasing


def test_schedule_json_round_trip(z1, tmp_path):
    p = tmp_path / "s.json"
    z1.save(p)
    back = CFSchedule.load(p)
    assert back.to_json() == z1.to_json()
    assert json.loads(p.read_text())["group"] == "Zd"


def test_schedule_shape_errors():
    with pytest.raises(ScheduleError):
        CFSchedule(Z1, [pts(0)], [pts(0, 1)])
    with pytest.raises(ScheduleError):
        CFSchedule(Z1, [pts(0)], [])


# ---------------------------------------------------------------------------
# properties on random small schedules

GROUPS = [Abelian(1), Abelian(2), H3]


@st.composite
def query(draw, groups=GROUPS, plane=None):
    G = draw(st.sampled_from(groups))
    depth = draw(st.integers(1, 3))
    seed = draw(st.integers(0, 10 ** 6))
    pl = draw(st.booleans()) if plane is None else plane
    s = random_schedule(G, depth, random.Random(seed), plane=pl, grid_c=draw(st.booleans()))
    n = draw(st.integers(0, depth - 1))
    c = Cylinder(s, n, random_base(s, n, random.Random(seed + 1)))
    m = draw(st.integers(n, depth))
    S = sorted(return_candidates(c, m))
    g = draw(st.sampled_from(S)) if draw(st.booleans()) else tuple(draw(st.integers(-6, 6)) for _ in range(G.dim))
    return s, c, g, m


@settings(max_examples=150, deadline=None)
@given(query())
def test_oracle_equivalence(qr):
    s, c, g, m = qr
    est = intersection_measure(c, g, m)
    assert est.value == brute_measure(c, g, m)
    assert est.count == direct_intersection_count(c, g, m)


@settings(max_examples=100, deadline=None)
@given(query())
def test_monotone_and_bounded(qr):
    s, c, g, m = qr
    mu = cylinder_measure(c)
    vals = [intersection_measure(c, g, k).value for k in range(c.level, s.depth + 1)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert all(v <= mu for v in vals)


@settings(max_examples=100, deadline=None)
@given(query())
def test_inverse_symmetry(qr):
    s, c, g, m = qr
    assert intersection_measure(c, g, m).value == intersection_measure(c, s.G.inv(g), m).value


@settings(max_examples=100, deadline=None)
@given(query())
def test_outside_candidates_vanish(qr):
    s, c, g, m = qr
    if g not in return_candidates(c, m):
        assert intersection_measure(c, g, m).value == 0


@settings(max_examples=100, deadline=None)
@given(query())
def test_additivity_and_refinement(qr):
    s, c, g, m = qr
    assert cylinder_measure(c) == sum(cylinder_measure(Cylinder(s, c.level, Explicit([a]))) for a in c.A)
    assert cylinder_measure(refine_cylinder(c, m)) == cylinder_measure(c)
    # refining does not change the depth-m intersection either
    assert intersection_measure(refine_cylinder(c, m), g, m).value == intersection_measure(c, g, m).value


@settings(max_examples=100, deadline=None)
@given(query(), st.integers(1, 3))
def test_multi_intersection(qr, p):
    s, c, g, m = qr
    one = intersection_measure(c, g, m).value
    assert multi_intersection_measure(c, g, 1, m).value == one
    vals = [multi_intersection_measure(c, g, k, m).value for k in range(1, p + 2)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    S = set(refine_cylinder(c, m).A)
    G = s.G
    brute = sum(1 for h in S if all(G.mul(G.power(g, j), h) in S for j in range(1, p + 1)))
    assert multi_intersection_measure(c, g, p, m).value == Fraction(brute, s.card_prod(m))


@settings(max_examples=100, deadline=None)
@given(query(), st.data())
def test_conjugation_transfer(qr, data):
    s, c, g, m = qr
    G = s.G
    a0 = next(iter(c.A))
    f = tuple(data.draw(st.integers(lo, hi)) for lo, hi in s.F[c.level].bbox())
    g0 = G.mul(f, G.inv(a0))
    shifted = [G.mul(g0, a) for a in c.A]
    assume(all(x in s.F[c.level] for x in shifted))
    c2 = Cylinder(s, c.level, Explicit(shifted))
    conj = G.mul(G.mul(g0, g), G.inv(g0))
    assert intersection_measure(c2, conj, m).value == intersection_measure(c, g, m).value


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10 ** 6))
def test_random_schedules_validate(depth, seed):
    for G in GROUPS:
        assert validate_schedule(random_schedule(G, depth, random.Random(seed))).ok

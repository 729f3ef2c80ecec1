from fractions import Fraction
import math

from hypothesis import assume, given, settings, strategies as st
import pytest

from cfdirlab.directions import (
    Direction,
    DirectionSetSpec,
    adjoint_direction,
    axis,
    direction_net,
    dist_to_subgroup,
    dominance_gap,
    kappa,
    project,
    spec_membership,
    theta,
    theta_family_net,
    theta_inf,
)
from cfdirlab.groups import H3, Abelian, a, b, c

Z2, Z3 = Abelian(2), Abelian(3)
small = st.integers(-30, 30)
q = st.fractions(min_value=-20, max_value=20, max_denominator=8)
vec3 = st.tuples(small, small, small).filter(any)
vec2 = st.tuples(small, small).filter(any)


def test_project_examples():
    u = project((2, 4))
    assert u.rep == pytest.approx((1 / math.sqrt(5), 2 / math.sqrt(5)))
    assert project((-1, 0)) == project((1, 0))
    assert project(H3.log(c(5)), kind="H3") == theta_inf()
    with pytest.raises(ValueError):
        project((0, 0))


def test_kappa_examples():
    assert kappa(axis(2, 0), axis(2, 1)) == pytest.approx(1)
    th = project((3, 7))
    assert kappa(th, th) == 0
    assert kappa(project((100, 1)), project((100, 0))) == pytest.approx(1 / math.sqrt(10001), rel=1e-12)


def test_dist_examples():
    assert dist_to_subgroup(a(5), theta(0), H3) == 0
    assert dist_to_subgroup(c(1), theta(0), H3) == 1
    assert dist_to_subgroup((3, 4), axis(2), Z2) == pytest.approx(4)


def test_adjoint_direction_examples():
    assert adjoint_direction(b(1), theta(0), H3) == theta(-1)
    assert adjoint_direction((3, -2, 5), theta_inf(), H3) == theta_inf()
    th = project((2, 5))
    assert adjoint_direction((7, 1), th, Z2) == th


def test_net_examples():
    net = direction_net(Z2, 4)
    assert [round(d.angle, 12) for d in net] == [round(k * math.pi / 4, 12) for k in range(4)]
    assert net.mesh == pytest.approx(math.sin(math.pi / 8))
    one = direction_net(Z2, 1)
    assert list(one) == [axis(2)] and one.mesh == 1
    h = direction_net(H3, 4)
    assert theta_inf() in list(h)
    with pytest.raises(ValueError):
        direction_net(Z2, 0)


def test_h3_net_covers_theta_family():
    net = direction_net(H3, 6)
    for t in [Fraction(k, 4) for k in range(-40, 41)] + [Fraction(10 ** 6)]:
        assert min(kappa(theta(t), p) for p in net) <= net.mesh + 1e-12


def test_theta_family_net():
    net = theta_family_net([0, 1, Fraction(1, 2)])
    assert [d.label() for d in net] == ["theta_0", "theta_1", "theta_1/2", "theta_inf"]


def test_dominance_gap_examples():
    assert dominance_gap([(100, 0)], [(0, 1)], Z2) == pytest.approx(1 / math.sqrt(10001), rel=1e-12)
    assert dominance_gap([(5, 3)], [(0, 0)], Z2) == 0
    assert dominance_gap([a(7)], [a(2), a(-3)], H3) == 0
    with pytest.raises(ValueError):
        dominance_gap([(0, 0)], [(1, 1)], Z2)


def test_spec_membership_examples():
    x = axis(2)
    r, e = 0.1, 0.04
    spec = DirectionSetSpec([(x, r)], [1])
    assert spec_membership(x, spec, 1)
    assert not spec_membership(x, DirectionSetSpec(), 1)
    # a line at kappa-distance r + e/2 from the centre
    ang = math.asin(r + e / 2)
    th = project((math.cos(ang), math.sin(ang)))
    assert kappa(th, x) == pytest.approx(r + e / 2)
    assert spec_membership(th, spec, 1, inflation=e)
    assert not spec_membership(th, spec, 1)
    back = DirectionSetSpec.from_json(spec.to_json())
    assert back.stages == [1] and back.balls[0][0] == x


def test_direction_json_round_trip():
    for th in (theta(Fraction(-3, 7)), theta_inf(), project((0.3, 0.9))):
        assert Direction.from_json(th.to_json(), th.kind).rep == pytest.approx(th.rep)
    assert Direction.from_json(theta(2).to_json(), "H3") == theta(2)


# ---------------------------------------------------------------------------
# properties


def _h3_oracle(g, v, half_width=60, steps=24000):
    """Dense grid minimum of |x - s al| + |y - s be| + |z - s(ga + be x) + s^2 al be / 2|."""
    al, be, ga = (float(t) for t in v)
    x, y, z = (float(t) for t in g)
    h = 2 * half_width / steps
    best = math.inf
    for i in range(steps + 1):
        s = -half_width + h * i
        best = min(best, abs(x - s * al) + abs(y - s * be) + abs(z - s * (ga + be * x) + s * s * al * be / 2))
    lip = abs(al) + abs(be) + abs(al * be) * half_width + abs(ga + be * x)
    return best, lip * h


@settings(max_examples=40, deadline=None)
@given(st.tuples(st.integers(-6, 6), st.integers(-6, 6), st.integers(-6, 6)),
       st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)).filter(any))
def test_h3_dist_matches_grid_oracle(g, v):
    th = project(v, kind="H3")
    exact = dist_to_subgroup(g, th, H3)
    best, slack = _h3_oracle(g, th.vec())
    assert exact <= best + 1e-9
    assert exact >= best - slack - 1e-9


@given(vec3, vec3, vec3)
def test_kappa_metric(u, v, w):
    p, r, s = project(u), project(v), project(w)
    assert kappa(p, r) == pytest.approx(kappa(r, p), abs=1e-12)
    assert kappa(p, p) == 0
    assert kappa(p, s) <= kappa(p, r) + kappa(r, s) + 1e-9
    if kappa(p, r) == 0:
        assert p == r


@given(st.tuples(q, q, q), vec3)
def test_adjoint_direction_commutes_with_projection(g, v):
    assert project(H3.adjoint(g, v), kind="H3") == adjoint_direction(g, project(v, kind="H3"), H3)


@given(vec3, q)
def test_dist_zero_on_subgroup(v, t):
    th = project(v, kind="H3")
    g = H3.exp(tuple(t * x for x in th.vec()))
    assert dist_to_subgroup(g, th, H3) == 0


@given(st.tuples(small, small, small), vec3, st.integers(-5, 5).filter(bool))
def test_dist_scale_invariant(g, v, k):
    d1 = dist_to_subgroup(g, project(v, kind="H3"), H3)
    d2 = dist_to_subgroup(g, project(tuple(k * x for x in v), kind="H3"), H3)
    assert d1 == pytest.approx(d2, abs=1e-9)


@given(vec2, vec2)
def test_point_to_line_identity(g, v):
    th = project(v)
    assert dist_to_subgroup(g, th, Z2) == pytest.approx(Z2.norm(g) * kappa(project(g), th), abs=1e-9)


@given(vec3, vec3)
def test_point_to_line_identity_z3(g, v):
    th = project(v)
    assert dist_to_subgroup(g, th, Z3) == pytest.approx(Z3.norm(g) * kappa(project(g), th), abs=1e-9)


@settings(max_examples=60)
@given(st.floats(0, math.pi), st.sampled_from([3, 8, 32]))
def test_planar_net_mesh(ang, r):
    net = direction_net(Z2, r)
    th = project((math.cos(ang), math.sin(ang)))
    assume(any(th.rep))
    assert min(kappa(th, p) for p in net) <= net.mesh + 1e-12


@settings(max_examples=60)
@given(vec3)
def test_cube_net_mesh(v):
    net = direction_net(Z3, 5)
    th = project(v)
    assert min(kappa(th, p) for p in net) <= net.mesh + 1e-12

from fractions import Fraction

from hypothesis import given, settings, strategies as st
import pytest

from cfdirlab.groups import H3, Abelian, a, b, c, group_from_descriptor


def matrix(g):
    x, y, z = g
    return [[1, x, z], [0, 1, y], [0, 0, 1]]


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


def from_matrix(M):
    return (M[0][1], M[1][2], M[0][2])


q = st.fractions(min_value=-50, max_value=50, max_denominator=12)
zi = st.integers(-10 ** 6, 10 ** 6)
h3q = st.tuples(q, q, q)
h3i = st.tuples(zi, zi, zi)
z2 = st.tuples(zi, zi)


def test_h3_examples():
    assert H3.mul((1, 0, 0), (0, 1, 0)) == (1, 1, 1)
    assert H3.mul(a(1), b(1)) == H3.mul(H3.mul(c(1), b(1)), a(1))
    assert H3.mul((2, 3, 5), H3.identity) == (2, 3, 5)
    assert H3.inv((2, 3, 1)) == (-2, -3, 5)
    assert H3.inv(H3.identity) == H3.identity
    assert H3.exp((1, 1, 0)) == (1, 1, Fraction(1, 2))
    assert H3.exp((0, 0, 7)) == (0, 0, 7)
    assert H3.log((1, 1, 1)) == (1, 1, Fraction(1, 2))
    assert H3.adjoint((1, 0, 0), (0, 1, 0)) == (0, 1, 1)
    assert H3.adjoint((0, 1, 0), (1, 0, 0)) == (1, 0, -1)
    assert H3.adjoint((4, -2, 9), (0, 0, 1)) == (0, 0, 1)
    assert H3.dist((1, 0, 0), (0, 1, 0)) == 3
    assert H3.dist((3, -4, 2), H3.identity) == 9 == H3.norm((3, -4, 2))


def test_abelian_examples():
    Z2 = Abelian(2)
    assert Z2.mul((1, 2), (3, 4)) == (4, 6)
    assert Z2.inv((1, -4)) == (-1, 4)
    assert Z2.dist((0, 0), (3, 4)) == 5
    assert Z2.log((3, 4)) == (3, 4) and Z2.exp((3, 4)) == (3, 4)
    assert Z2.adjoint((5, 6), (1, 2)) == (1, 2)


def test_descriptors_round_trip():
    assert group_from_descriptor(H3.to_json()) is H3
    assert group_from_descriptor(Abelian(3).to_json()) == Abelian(3)
    with pytest.raises(ValueError):
        group_from_descriptor({"group": "SL2"})


def test_dimension_checked():
    with pytest.raises(ValueError):
        Abelian(2).mul((1, 2), (1, 2, 3))


@given(h3q, h3q)
def test_mul_matches_matrix_oracle(g, h):
    assert H3.mul(g, h) == from_matrix(matmul(matrix(g), matrix(h)))


@given(h3q, h3q, h3q)
def test_associativity(x, y, z):
    assert H3.mul(H3.mul(x, y), z) == H3.mul(x, H3.mul(y, z))


@given(h3q)
def test_inverse(g):
    assert H3.mul(g, H3.inv(g)) == H3.identity == H3.mul(H3.inv(g), g)


@given(h3q)
def test_exp_log(g):
    assert H3.exp(H3.log(g)) == g
    assert H3.log(H3.exp(g)) == g


@given(h3q, h3q, h3q)
def test_right_invariance(g, g2, h):
    assert H3.dist(H3.mul(g, h), H3.mul(g2, h)) == H3.dist(g, g2)


@given(h3q, h3q)
def test_adjoint_conjugation(g, v):
    assert H3.exp(H3.adjoint(g, v)) == H3.mul(H3.mul(g, H3.exp(v)), H3.inv(g))
    assert H3.conj(g, H3.exp(v)) == H3.exp(H3.adjoint(g, v))


@given(h3q, h3q, h3q, h3q, q)
def test_adjoint_action_and_linearity(g, h, v, w, s):
    assert H3.adjoint(H3.mul(g, h), v) == H3.adjoint(g, H3.adjoint(h, v))
    vw = tuple(x + s * y for x, y in zip(v, w))
    lhs = H3.adjoint(g, vw)
    rhs = tuple(x + s * y for x, y in zip(H3.adjoint(g, v), H3.adjoint(g, w)))
    assert lhs == rhs


@given(h3i, h3i, st.integers(-20, 20))
def test_lattice_closure(g, h, k):
    for x in (H3.mul(g, h), H3.inv(g), H3.power(g, k)):
        assert all(type(t) is int for t in x)


@given(h3i, st.integers(-12, 12))
def test_power_is_repeated_product(g, k):
    acc = H3.identity
    step = g if k >= 0 else H3.inv(g)
    for _ in range(abs(k)):
        acc = H3.mul(acc, step)
    assert H3.power(g, k) == acc


@settings(max_examples=50)
@given(z2, z2, z2)
def test_abelian_right_invariance(g, g2, h):
    Z2 = Abelian(2)
    assert Z2.dist(Z2.mul(g, h), Z2.mul(g2, h)) == pytest.approx(Z2.dist(g, g2))

"""Directions: points of the projective space P(g) of lines in the Lie algebra.

kappa is the sine of the angle between two lines.  A Direction keeps a unit
float representative and, when it came from a rational vector, the primitive
integer vector spanning the same line.  Exact computations always use a
rational spanning vector: the stored one, or the dyadic value of the floats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import combinations, product
import math

from .groups import Abelian, H3, _sqrt

KAPPA_VERSION = "kappa=sin(angle)/v1"


def _primitive(v):
    """Primitive integer vector on the line of a rational vector, canonical sign."""
    v = [Fraction(x) for x in v]
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(math.gcd, (abs(i) for i in ints), 0)
    ints = [i // g for i in ints]
    for i in ints:
        if i:
            if i < 0:
                ints = [-j for j in ints]
            break
    return tuple(ints)


def _unit(v):
    vals = [float(x) for x in v]
    if any(math.isinf(x) for x in vals):
        # rescale huge rationals before converting
        m = max(abs(Fraction(x)) for x in v)
        vals = [float(Fraction(x) / m) for x in v]
    n = math.sqrt(sum(x * x for x in vals))
    return tuple(x / n for x in vals)


@dataclass(frozen=True)
class Direction:
    rep: tuple
    exact: tuple | None = None
    kind: str = field(default="Zd", compare=False)

    @property
    def dim(self):
        return len(self.rep)

    def vec(self):
        """Exact rational vector spanning this line."""
        if self.exact is not None:
            return tuple(Fraction(x) for x in self.exact)
        return tuple(Fraction(x) for x in self.rep)

    @property
    def angle(self):
        if self.dim != 2:
            raise ValueError("angle is defined for planar directions only")
        th = math.atan2(self.rep[1], self.rep[0])
        return th % math.pi

    def label(self):
        if self.kind == "H3" and self.exact is not None:
            a, b, c = self.exact
            if a == 0 and b == 0:
                return "theta_inf"
            if b == 0:
                return f"theta_{_fmt(Fraction(c, a))}"
        if self.exact is not None:
            return "(" + ",".join(str(x) for x in self.exact) + ")"
        return "(" + ",".join(f"{x:.6f}" for x in self.rep) + ")"

    def to_json(self):
        out = {"rep": list(self.rep)}
        if self.exact is not None:
            out["exact"] = list(self.exact)
        return out

    @classmethod
    def from_json(cls, obj, kind="Zd"):
        if isinstance(obj, dict):
            if "exact" in obj:
                return project(obj["exact"], kind=kind)
            return project(obj["rep"], kind=kind)
        return project(obj, kind=kind)

    def __repr__(self):
        return f"Direction({self.label()})"


def _fmt(q):
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _kind(G):
    if G is None:
        return "Zd"
    if isinstance(G, str):
        return G
    return G.kind


def project(v, G=None, kind=None):
    """pi: g minus {0} -> P(g)."""
    kind = kind or _kind(G)
    v = tuple(v)
    if all(x == 0 for x in v):
        raise ValueError("cannot project the zero vector")
    if all(isinstance(x, (int, Fraction)) or (isinstance(x, str)) for x in v):
        ex = _primitive([Fraction(x) if not isinstance(x, str) else Fraction(x) for x in v])
        return Direction(_unit(ex), ex, kind)
    fv = [float(x) for x in v]
    for x in fv:
        if x != 0:
            if x < 0:
                fv = [-y for y in fv]
            break
    return Direction(_unit(fv), None, kind)


def theta(t):
    """theta_t: the line through (1, 0, t) in h3."""
    return project((1, 0, Fraction(t)), kind="H3")


def theta_inf():
    return project((0, 0, 1), kind="H3")


def axis(d, i=0):
    v = [0] * d
    v[i] = 1
    return project(v)


def kappa(p, q):
    if p.dim != q.dim:
        raise ValueError("directions of different dimension")
    if p.exact is not None and q.exact is not None and p.exact == q.exact:
        return 0.0
    s = 0.0
    for i, j in combinations(range(p.dim), 2):
        w = p.rep[i] * q.rep[j] - p.rep[j] * q.rep[i]
        s += w * w
    return min(1.0, math.sqrt(s))


# ---------------------------------------------------------------------------
# distance from a group element to exp(theta)


def dist_to_subgroup(g, th, G):
    v = th.vec()
    if G.kind == "H3":
        return _h3_line_dist(g, v)
    if all(type(x) is int for x in g) and all(x.denominator == 1 for x in v):
        # integer fast path: |g|^2 - <g,v>^2/|v|^2 with one division
        vi = [int(x) for x in v]
        vv = sum(x * x for x in vi)
        dot = sum(x * y for x, y in zip(g, vi))
        return _sqrt(Fraction(sum(x * x for x in g) * vv - dot * dot, vv))
    gv = [Fraction(x) for x in g]
    vv = sum(x * x for x in v)
    dot = sum(x * y for x, y in zip(gv, v))
    sq = sum(x * x for x in gv) - dot * dot / vv
    return _sqrt(max(sq, Fraction(0)))


def h3_line_objective(g, v, s):
    """dist(g, exp(s v)) in H3 as an exact rational."""
    x, y, z = (Fraction(t) for t in g)
    al, be, ga = (Fraction(t) for t in v)
    q = al * be / 2 * s * s - (ga + be * x) * s + z
    return abs(x - s * al) + abs(y - s * be) + abs(q)


def _rsqrt(D, bits):
    """Rational approximation of sqrt(D) with absolute error below D^(1/2) 2^-bits."""
    n, d = D.numerator, D.denominator
    scale = 1 << bits
    return Fraction(math.isqrt(n * d * scale * scale), d * scale)


def h3_line_candidates(g, v):
    """Finite set of parameters containing a minimiser of s -> dist(g, exp(s v))."""
    x, y, z = (Fraction(t) for t in g)
    al, be, ga = (Fraction(t) for t in v)
    A = al * be / 2
    B = -(ga + be * x)
    C = z
    cands = {Fraction(0)}
    if al:
        cands.add(x / al)
    if be:
        cands.add(y / be)
    if A:
        disc = B * B - 4 * A * C
        if disc >= 0:
            bits = 96 + max(1, abs(A).numerator.bit_length(), abs(B).numerator.bit_length(),
                            abs(C).numerator.bit_length())
            r = _rsqrt(disc, bits)
            cands.add((-B + r) / (2 * A))
            cands.add((-B - r) / (2 * A))
        for s1, s2, s3 in product((1, -1), repeat=3):
            cands.add((s3 * (s1 * al + s2 * be) - B) / (2 * A))
    elif B:
        cands.add(-C / B)
    return cands


def _h3_line_dist(g, v):
    best = min(h3_line_objective(g, v, s) for s in h3_line_candidates(g, v))
    return float(best)


def adjoint_direction(g, th, G):
    if G.kind == "Zd":
        # conjugation is trivial; keep the direction object as is
        return th
    return project(G.adjoint(g, th.vec()), kind=G.kind)


# ---------------------------------------------------------------------------
# nets


class DirectionNet:
    """A finite kappa-net; every line lies within kappa-distance ``mesh`` of a member."""

    def __init__(self, directions, mesh, description):
        self.directions = list(directions)
        self.mesh = mesh
        self.description = description

    def __iter__(self):
        return iter(self.directions)

    def __len__(self):
        return len(self.directions)

    def __getitem__(self, i):
        return self.directions[i]

    def to_json(self):
        return {"description": self.description, "mesh": self.mesh,
                "directions": [d.to_json() for d in self.directions]}


def direction_net(G, resolution):
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    kind = _kind(G)
    d = 3 if kind == "H3" else G.d
    if d == 1:
        return DirectionNet([project((1,))], 0.0, "Z1 single line")
    if d == 2:
        dirs = []
        for k in range(resolution):
            if k == 0:
                dirs.append(project((1, 0)))
            elif 2 * k == resolution:
                dirs.append(project((0, 1)))
            else:
                t = math.pi * k / resolution
                dirs.append(project((math.cos(t), math.sin(t))))
        mesh = 1.0 if resolution == 1 else math.sin(math.pi / (2 * resolution))
        return DirectionNet(dirs, mesh, f"{resolution} equally spaced angles in [0,pi)")
    # centres of an r^(d-1) grid on each positive face of the cube [-1,1]^d
    r = resolution
    centres = [Fraction(2 * j + 1, r) - 1 for j in range(r)]
    seen, dirs = set(), []
    for i in range(d):
        for rest in product(centres, repeat=d - 1):
            v = list(rest[:i]) + [Fraction(1)] + list(rest[i:])
            th = project(v, kind=kind)
            if th.exact not in seen:
                seen.add(th.exact)
                dirs.append(th)
    if kind == "H3" and (0, 0, 1) not in seen:
        dirs.append(theta_inf())
    mesh = min(1.0, math.sqrt(d - 1) / r)
    return DirectionNet(dirs, mesh, f"cube-face grid, {r}^{d - 1} per face")


def theta_family_net(ts, include_inf=True):
    dirs = [theta(t) for t in ts]
    if include_inf:
        dirs.append(theta_inf())
    return DirectionNet(dirs, None, "theta_t samples")


# ---------------------------------------------------------------------------


def dominance_gap(A, B, G):
    """max over a in A, b in B of kappa(pi(log ab), pi(log a))."""
    A, B = list(A), list(B)
    worst = 0.0
    for el in A:
        la = G.log(el)
        if all(x == 0 for x in la):
            raise ValueError(f"element {el!r} has log = 0")
        pa = project(la, kind=G.kind)
        for bl in B:
            lab = G.log(G.mul(el, bl))
            if all(x == 0 for x in lab):
                worst = 1.0
                continue
            worst = max(worst, kappa(project(lab, kind=G.kind), pa))
    return worst


@dataclass
class DirectionSetSpec:
    """Closed kappa-balls; stage j is the union of the first stages[j-1] balls."""

    balls: list = field(default_factory=list)
    stages: list = field(default_factory=list)

    def __post_init__(self):
        if any(r < 0 for _, r in self.balls):
            raise ValueError("negative ball radius")
        if any(b < a for a, b in zip(self.stages, self.stages[1:])):
            raise ValueError("stage cutoffs must be nondecreasing")
        if any(k > len(self.balls) for k in self.stages):
            raise ValueError("stage cutoff exceeds number of balls")

    def stage_balls(self, stage):
        if not self.stages:
            return []
        if stage < 1 or stage > len(self.stages):
            raise ValueError(f"stage {stage} outside 1..{len(self.stages)}")
        return self.balls[: self.stages[stage - 1]]

    def kappa_to_stage(self, th, stage):
        """Smallest kappa(th, centre) - radius over the stage's balls (inf if empty)."""
        gaps = [kappa(th, c) - r for c, r in self.stage_balls(stage)]
        return min(gaps) if gaps else math.inf

    def to_json(self):
        return {"balls": [{"center": list(c.exact if c.exact is not None else c.rep), "radius": r}
                          for c, r in self.balls],
                "stages": list(self.stages)}

    @classmethod
    def from_json(cls, obj, kind="Zd"):
        balls = [(Direction.from_json(b["center"], kind), float(b["radius"])) for b in obj.get("balls", [])]
        return cls(balls, [int(k) for k in obj.get("stages", [])])


def spec_membership(th, spec, stage, inflation=0.0):
    if inflation < 0:
        raise ValueError("inflation must be >= 0")
    if not spec.balls:
        return False
    return any(kappa(th, c) <= r + inflation for c, r in spec.stage_balls(stage))

"""(C,F)-schedules, condition checks, cylinders and exact cylinder-intersection measures.

Levels are 1-indexed as usual: F_0 = {1}, and F_{n-1} C_n sits inside F_n.
For a cylinder [A]_n and a depth m we write S_k = A C_{n+1} ... C_k.  The
counting engine never lists S_m; it uses

    N_k(rho) = #{h in S_k : g h rho in S_k}
             = sum over c, c' in C_k of N_{k-1}(c rho c'^-1),

which is a bijective rewriting because of condition (III).  When every C_k
lies in an abelian subgroup where the group law is coordinate addition, the
double sum collapses to a sum over the difference multiset of C_k.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
import json
import math

from .groups import Abelian, H3, group_from_descriptor
from .pointsets import (
    MATERIALIZE_LIMIT,
    Explicit,
    Grid,
    TooLarge,
    as_pointset,
    diff_table,
    inside_box,
    pointset_from_json,
    product_set,
    progression_multi_overlap,
    progression_overlap,
    tent_sum,
)
from .serial import elem_out, qstr


class ScheduleError(ValueError):
    """A schedule or cylinder violates a structural invariant."""

    def __init__(self, msg, level=None, condition=None):
        super().__init__(msg)
        self.level, self.condition = level, condition


class DepthError(ValueError):
    pass


def point_box(g):
    return tuple((x, x) for x in g)


def plane_set(G, ps):
    """True when every element of ps lies where right multiplication is addition."""
    if G.commutative:
        return True
    lo, hi = ps.bbox()[1]
    return lo == 0 and hi == 0


class CFSchedule:
    def __init__(self, G, F, C, provenance=None):
        F = [as_pointset(x) for x in F]
        C = [as_pointset(x) for x in C]
        if len(F) != len(C) + 1:
            raise ScheduleError("need one more F level than C levels")
        if not C:
            raise ScheduleError("depth must be >= 1")
        self.G = G
        self.F = F
        self.C = [None] + C
        self.provenance = dict(provenance or {})
        self._diff = {}
        self._cards = [1]
        for c in C:
            self._cards.append(self._cards[-1] * c.count)

    @property
    def depth(self):
        return len(self.F) - 1

    def card_prod(self, n):
        """#C_1 ... #C_n."""
        return self._cards[n]

    def diff(self, k):
        if k not in self._diff:
            self._diff[k] = diff_table(self.C[k])
        return self._diff[k]

    def plane_from(self, n, m):
        return all(plane_set(self.G, self.C[k]) for k in range(n + 1, m + 1))

    def truncate(self, N):
        return CFSchedule(self.G, self.F[: N + 1], self.C[1: N + 1], self.provenance)

    def to_json(self):
        out = dict(self.G.to_json())
        out["F"] = [f.to_json() for f in self.F]
        out["C"] = [c.to_json() for c in self.C[1:]]
        out["provenance"] = self.provenance
        return out

    @classmethod
    def from_json(cls, obj):
        G = group_from_descriptor(obj)
        F = [pointset_from_json(f) for f in obj["F"]]
        C = [pointset_from_json(c) for c in obj["C"]]
        return cls(G, F, C, obj.get("provenance", {}))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def __repr__(self):
        return f"CFSchedule({self.G.kind}, depth={self.depth})"


@dataclass(frozen=True)
class Cylinder:
    schedule: CFSchedule
    level: int
    A: object

    def __post_init__(self):
        s, n = self.schedule, self.level
        if not 0 <= n <= s.depth:
            raise ScheduleError(f"cylinder level {n} outside 0..{s.depth}")
        A = as_pointset(self.A)
        object.__setattr__(self, "A", A)
        F = s.F[n]
        if isinstance(A, Grid) and isinstance(F, Grid) and F.is_box:
            ok = inside_box(A.bbox(), F.bbox())
        elif A.count <= MATERIALIZE_LIMIT:
            ok = all(a in F for a in A)
        else:
            raise TooLarge("cannot check cylinder base against F")
        if not ok:
            raise ScheduleError(f"cylinder base is not contained in F_{n}", level=n)

    def to_json(self):
        return {"level": self.level, "A": self.A.to_json()}


def cylinder(s, n, A=None):
    """[A]_n; A defaults to the whole of F_n."""
    return Cylinder(s, n, s.F[n] if A is None else A)


def cylinder_measure(c):
    return Fraction(c.A.count, c.schedule.card_prod(c.level))


def _materialize_product(G, A, Cs, limit=MATERIALIZE_LIMIT):
    cur = set(A.materialize(limit))
    for C in Cs:
        pts = C.materialize(limit)
        if len(cur) * len(pts) > limit:
            raise TooLarge("product set too large to materialize")
        cur = {G.mul(x, y) for x in cur for y in pts}
    return cur


def level_set(c, m):
    """A C_{n+1} ... C_m as a set of lattice points."""
    s = c.schedule
    return _materialize_product(s.G, c.A, [s.C[k] for k in range(c.level + 1, m + 1)])


def refine_cylinder(c, target_level):
    s = c.schedule
    if target_level < c.level or target_level > s.depth:
        raise DepthError(f"target level {target_level} outside {c.level}..{s.depth}")
    if target_level == c.level:
        return c
    pts = level_set(c, target_level)
    F = s.F[target_level]
    if any(p not in F for p in pts):
        raise ScheduleError("refined cylinder escapes F; condition (II) fails upstream",
                            level=target_level, condition="(II)")
    return Cylinder(s, target_level, Explicit(pts))


# ---------------------------------------------------------------------------
# condition checks


@dataclass
class ConditionReport:
    levels: list = field(default_factory=list)
    condition_iv: list = field(default_factory=list)
    growth: list = field(default_factory=list)
    growth_increasing: bool = True
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def to_json(self):
        return {
            "levels": self.levels,
            "condition_IV": self.condition_iv,
            "growth_3_1": [qstr(x) for x in self.growth],
            "growth_increasing": self.growth_increasing,
            "failures": self.failures,
            "notes": self.notes,
            "ok": self.ok,
        }


def _all_lattice(ps):
    if isinstance(ps, Grid):
        return all(isinstance(x, int) for x in ps.start + ps.step)
    return all(isinstance(x, int) for p in ps for x in p)


def _set_bbox_product(G, boxes):
    out = boxes[0]
    for b in boxes[1:]:
        out = G.mul_box(out, b)
    return out


def _contained(G, X, Y, Z):
    """Is X.Y (elementwise products) inside Z?"""
    bb = G.mul_box(X.bbox(), Y.bbox())
    if isinstance(Z, Grid) and Z.is_box:
        if inside_box(bb, Z.bbox()):
            return True
        if G.commutative or (isinstance(X, Grid) and isinstance(Y, Grid)):
            # the interval bbox is attained at corners for grids
            return False
    if X.count * Y.count > MATERIALIZE_LIMIT:
        raise TooLarge("cannot decide containment")
    return all(G.mul(x, y) in Z for x in X for y in Y)


def _check_III(s, n):
    """F_{n-1} c and F_{n-1} c' disjoint for c != c' in C_n."""
    G, F, C = s.G, s.F[n - 1], s.C[n]
    if G.commutative or plane_set(G, C):
        # c' c^-1 is a coordinate difference
        # right multiplication by a point of C_n is addition, so f c = f' c' iff f - f' = c' - c
        if isinstance(F, Grid) and F.is_box:
            box = tuple((lo - hi, hi - lo) for lo, hi in F.bbox())
            return not any(any(delta) for delta, _ in s.diff(n).in_box(box))
        pts = F.materialize()
        dF = {tuple(a - b for a, b in zip(p, q)) for p in pts for q in pts}
        return not any(any(delta) and delta in dF for delta, _ in s.diff(n))
    pts = F.materialize()
    cs = list(C.materialize())
    if len(cs) ** 2 * len(pts) > MATERIALIZE_LIMIT * 10:
        raise TooLarge("condition (III) too large to enumerate")
    seen = {}
    for c in cs:
        for f in pts:
            key = G.mul(f, c)
            if key in seen and seen[key] != c:
                return False
            seen[key] = c
    return True


def check_IV(s, gamma, n):
    """Smallest m with gamma F_n C_{n+1}..C_m inside F_{m+1} for every m up to depth - 1."""
    G = s.G
    X = point_box(gamma)
    box = G.mul_box(X, s.F[n].bbox())
    holds = []
    for m in range(n, s.depth):
        if m > n:
            box = G.mul_box(box, s.C[m].bbox())
        Z = s.F[m + 1]
        if isinstance(Z, Grid) and Z.is_box:
            holds.append(inside_box(box, Z.bbox()))
        elif inside_box(box, Z.bbox()) and math.prod(hi - lo + 1 for lo, hi in box) <= 10 ** 5:
            # every lattice point of the box: sufficient, never a false positive
            holds.append(all(p in Z for p in product(*(range(lo, hi + 1) for lo, hi in box))))
        else:
            holds.append(False)
    start = None
    for i in range(len(holds) - 1, -1, -1):
        if holds[i]:
            start = n + i
        else:
            break
    if start is None:
        return {"gamma": elem_out(gamma), "n": n, "verdict": "UNRESOLVED", "m": None}
    return {"gamma": elem_out(gamma), "n": n, "verdict": f"HOLDS_FROM({start})", "m": start}


def validate_schedule(s, gamma_ball_radius=0.0, raise_on_failure=False):
    G = s.G
    rep = ConditionReport()
    ident = G.identity
    if not (s.F[0].count == 1 and ident in s.F[0]):
        rep.failures.append({"level": 0, "condition": "F_0", "detail": "F_0 must be {identity}"})
    for n in range(1, s.depth + 1):
        C, Fp, Fn = s.C[n], s.F[n - 1], s.F[n]
        lat = _all_lattice(C) and _all_lattice(Fn)
        c1 = ident in C and C.count > 1
        try:
            c2 = _contained(G, Fp, C, Fn)
        except TooLarge:
            c2 = None
        try:
            c3 = _check_III(s, n)
        except TooLarge:
            c3 = None
        rep.levels.append({"level": n, "I": c1, "II": c2, "III": c3, "lattice": lat})
        for name, v in (("(I)", c1), ("(II)", c2), ("(III)", c3)):
            if v is False:
                rep.failures.append({"level": n, "condition": name})
            elif v is None:
                rep.notes.append(f"{name} at level {n} too large to decide")
        if not lat:
            rep.failures.append({"level": n, "condition": "lattice"})
    if gamma_ball_radius > 0:
        for gamma in sorted(G.ball(gamma_ball_radius)):
            for n in range(s.depth):
                rep.condition_iv.append(check_IV(s, gamma, n))
    rep.growth = [Fraction(s.F[n].count, s.card_prod(n)) for n in range(s.depth + 1)]
    rep.growth_increasing = all(b > a for a, b in zip(rep.growth, rep.growth[1:]))
    if raise_on_failure and rep.failures:
        f = rep.failures[0]
        raise ScheduleError(f"condition {f['condition']} fails at level {f['level']}",
                            level=f["level"], condition=f["condition"])
    return rep


# ---------------------------------------------------------------------------
# intersection measures


@dataclass(frozen=True)
class MeasureEstimate:
    value: Fraction
    depth: int
    count: int
    monotone_lower_bound: bool = True
    stabilized: bool = False

    def to_json(self):
        return {"value": qstr(self.value), "depth": self.depth, "count": self.count,
                "monotone_lower_bound": self.monotone_lower_bound, "stabilized": self.stabilized}


class _Engine:
    """Memoized N_k(rho) for one (cylinder, g) pair."""

    def __init__(self, c, g):
        self.s, self.n, self.A, self.g = c.schedule, c.level, c.A, tuple(g)
        self.G = self.s.G
        self.ginv = self.G.inv(self.g)
        self.memo = {}
        self.bboxes = {self.n: self.A.bbox()}
        self.regions = {}
        self.A_pts = None

    def bbox(self, k):
        if k not in self.bboxes:
            self.bboxes[k] = self.G.mul_box(self.bbox(k - 1), self.s.C[k].bbox())
        return self.bboxes[k]

    def region(self, k):
        """Box containing every rho with N_k(rho) > 0 : rho in S_k^-1 g^-1 S_k."""
        if k not in self.regions:
            G, B = self.G, self.bbox(k)
            self.regions[k] = G.mul_box(G.mul_box(G.inv_box(B), point_box(self.ginv)), B)
        return self.regions[k]

    def count(self, k, rho):
        if not all(lo <= x <= hi for x, (lo, hi) in zip(rho, self.region(k))):
            return 0
        key = (k, rho)
        if key in self.memo:
            return self.memo[key]
        if k == self.n:
            val = self.base(rho)
        elif self.G.commutative or (rho[1] == 0 and plane_set(self.G, self.s.C[k])):
            reg = self.region(k - 1)
            box = tuple((lo - r, hi - r) for (lo, hi), r in zip(reg, rho))
            val = 0
            for delta, mult in self.s.diff(k).in_box(box):
                child = tuple(r + x for r, x in zip(rho, delta))
                val += mult * self.count(k - 1, child)
        else:
            G = self.G
            pts = self.s.C[k].materialize()
            if len(pts) ** 2 > MATERIALIZE_LIMIT:
                raise TooLarge(f"C_{k} too large for the general recursion")
            inv = [G.inv(x) for x in pts]
            val = 0
            for c in pts:
                crho = G.mul(c, rho)
                for ci in inv:
                    val += self.count(k - 1, G.mul(crho, ci))
        self.memo[key] = val
        return val

    def base(self, rho):
        G, A, g = self.G, self.A, self.g
        if isinstance(A, Grid):
            if G.commutative:
                out = 1
                for i in range(A.dim):
                    out *= progression_overlap(A.count_[i], A.step[i], g[i] + rho[i])
                    if not out:
                        return 0
                return out
            if rho[1] == 0:
                return _h3_grid_base(A, g, rho)
        if self.A_pts is None:
            if A.count > MATERIALIZE_LIMIT:
                raise TooLarge("cylinder base too large for direct counting")
            self.A_pts = list(A)
        return sum(1 for a in self.A_pts if G.mul(G.mul(g, a), rho) in A)


def _h3_grid_base(A, g, rho):
    """#{a in A : g a rho in A} for a Heisenberg grid A and rho with zero b-part.

    g a rho = (a1 + g1 + r1, a2 + g2, a3 + g3 + r3 + g1 a2).
    """
    (s1, s2, s3), (st1, st2, st3), (n1, n2, n3) = A.start, A.step, A.count_
    g1, g2, g3 = g
    r1, _, r3 = rho
    c1 = progression_overlap(n1, st1, g1 + r1)
    if not c1 or g2 % st2:
        return 0
    e = g2 // st2
    j0, j1 = max(0, -e), min(n2, n2 - e)
    if j1 <= j0:
        return 0
    # shift along the third axis is p + q j
    p, q = g3 + r3 + g1 * s2, g1 * st2
    if st3 == 1:
        return c1 * tent_sum(n3, p, q, j0, j1)
    if j1 - j0 > MATERIALIZE_LIMIT:
        raise TooLarge("third-axis sum too long")
    return c1 * sum(progression_overlap(n3, st3, p + q * j) for j in range(j0, j1))


def _check_depth(c, m):
    if m > c.schedule.depth:
        raise DepthError(f"depth {m} exceeds schedule depth {c.schedule.depth}; build a deeper schedule")
    if m < c.level:
        raise DepthError(f"depth {m} below cylinder level {c.level}")


def intersection_count(c, g, m, engine=None):
    _check_depth(c, m)
    eng = engine or _Engine(c, g)
    return eng.count(m, c.schedule.G.identity)


def intersection_measure(c, g, m):
    """Depth-m lower bound for mu([A]_n cap T_g [A]_n)."""
    _check_depth(c, m)
    eng = _Engine(c, g)
    ident = c.schedule.G.identity
    N = eng.count(m, ident)
    val = Fraction(N, c.schedule.card_prod(m))
    stab = False
    if m > c.level:
        stab = Fraction(eng.count(m - 1, ident), c.schedule.card_prod(m - 1)) == val
    return MeasureEstimate(val, m, N, True, stab)


def direct_intersection_count(c, g, m):
    """Oracle: #{h in S_m : g h in S_m} with S_m listed explicitly."""
    _check_depth(c, m)
    G = c.schedule.G
    S = level_set(c, m)
    return sum(1 for h in S if G.mul(g, h) in S)


def direct_intersection_measure(c, g, m):
    return Fraction(direct_intersection_count(c, g, m), c.schedule.card_prod(m))


class _MultiEngine:
    def __init__(self, c, gs):
        self.s, self.n, self.A = c.schedule, c.level, c.A
        self.G = self.s.G
        self.gs = [tuple(g) for g in gs]
        self.base_engines = [_Engine(c, g) for g in self.gs]
        self.memo = {}
        self.A_pts = None

    def count(self, k, rhos):
        for eng, r in zip(self.base_engines, rhos):
            if not all(lo <= x <= hi for x, (lo, hi) in zip(r, eng.region(k))):
                return 0
        key = (k, rhos)
        if key in self.memo:
            return self.memo[key]
        G = self.G
        if k == self.n:
            val = self.base(rhos)
        else:
            C = self.s.C[k]
            plane = G.commutative or (all(r[1] == 0 for r in rhos) and plane_set(G, C))
            pts = list(C.materialize())
            val = 0
            for c in pts:
                options = []
                for eng, r in zip(self.base_engines, rhos):
                    reg = eng.region(k - 1)
                    if plane:
                        crho = tuple(x + y for x, y in zip(c, r))
                        # c' with crho - c' in reg
                        box = tuple((x - hi, x - lo) for x, (lo, hi) in zip(crho, reg))
                        opts = [tuple(x - y for x, y in zip(crho, cp)) for cp in C.in_box(box)]
                    else:
                        crho = G.mul(c, r)
                        opts = [G.mul(crho, G.inv(cp)) for cp in pts]
                    if not opts:
                        break
                    options.append(opts)
                else:
                    val += self._sum_product(k - 1, options, 0, ())
        self.memo[key] = val
        return val

    def _sum_product(self, k, options, i, acc):
        if i == len(options):
            return self.count(k, acc)
        return sum(self._sum_product(k, options, i + 1, acc + (o,)) for o in options[i])

    def base(self, rhos):
        G, A = self.G, self.A
        if isinstance(A, Grid) and G.commutative:
            out = 1
            for i in range(A.dim):
                shifts = [g[i] + r[i] for g, r in zip(self.gs, rhos)]
                out *= progression_multi_overlap(A.count_[i], A.step[i], shifts)
                if not out:
                    return 0
            return out
        if self.A_pts is None:
            if A.count > MATERIALIZE_LIMIT:
                raise TooLarge("cylinder base too large for direct counting")
            self.A_pts = list(A)
        return sum(1 for a in self.A_pts
                   if all(G.mul(G.mul(g, a), r) in A for g, r in zip(self.gs, rhos)))


def multi_intersection_measure(c, g, p, m):
    """Depth-m lower bound for mu(A cap T_g A cap ... cap T_{g^p} A)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    _check_depth(c, m)
    G = c.schedule.G
    gs = [G.power(g, j) for j in range(1, p + 1)]
    eng = _MultiEngine(c, gs)
    ident = G.identity
    N = eng.count(m, (ident,) * p)
    val = Fraction(N, c.schedule.card_prod(m))
    stab = False
    if m > c.level:
        stab = Fraction(eng.count(m - 1, (ident,) * p), c.schedule.card_prod(m - 1)) == val
    return MeasureEstimate(val, m, N, True, stab)


def direct_multi_count(c, g, p, m):
    G = c.schedule.G
    S = level_set(c, m)
    gs = [G.power(g, j) for j in range(1, p + 1)]
    return sum(1 for h in S if all(G.mul(x, h) in S for x in gs))


def return_candidates(c, m, limit=MATERIALIZE_LIMIT):
    """The finite set S_m S_m^-1; intersections vanish for g outside it."""
    _check_depth(c, m)
    G = c.schedule.G
    S = level_set(c, m)
    if len(S) ** 2 > limit:
        raise TooLarge("return candidate set too large")
    inv = [G.inv(f) for f in S]
    return {G.mul(h, fi) for h in S for fi in inv}


def tensor_power(s, k):
    if not s.G.commutative:
        raise NotImplementedError("tensor powers are implemented for Z^d schedules only")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return s

    def power(ps):
        out = ps
        for _ in range(k - 1):
            out = product_set(out, ps)
        return out

    prov = dict(s.provenance)
    prov["tensor_power"] = k
    return CFSchedule(Abelian(s.G.d * k), [power(f) for f in s.F],
                      [power(c) for c in s.C[1:]], prov)

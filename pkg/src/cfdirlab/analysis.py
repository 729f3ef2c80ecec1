"""Finite-depth evidence for recurrence and rigidity along directions.

A witness for theta at [A]_n and depth m is a lattice element gamma != 1 with
dist(gamma, exp(theta)) < eps, dist(gamma, 1) > K and a positive lower bound
for mu([A]_n cap T_gamma [A]_n).  By the counting lemma only gamma in
S_m S_m^-1 (S_m = A C_{n+1} ... C_m) can have positive intersection, so the
candidates are drawn from there.  Three candidate generators:

  materialize  list S_m S_m^-1 outright (small schedules)
  pruned       walk the levels top-down inside an abelian plane, discarding
               partial sums that can no longer reach the eps-tube (exhaustive)
  targeted     continued-fraction hits of each level's difference grid
               (fast for huge levels, never exhaustive)

A NO_WITNESS verdict records its search box and whether it was exhaustive.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
import csv
import io
import math

from .cf import (
    Cylinder,
    cylinder,
    cylinder_measure,
    intersection_measure,
    level_set,
    plane_set,
)
from .diophantine import convergents
from .directions import (
    Direction,
    KAPPA_VERSION,
    adjoint_direction,
    dist_to_subgroup,
    dominance_gap,
    kappa,
    project,
)
from .pointsets import MATERIALIZE_LIMIT, DiffGrid, DiffTable, Explicit, TooLarge, diff_table
from .serial import elem_out, qstr

SCAN_SCHEMA = "cfdirlab.scan/1"
RIGIDITY_SCHEMA = "cfdirlab.rigidity/1"


# ---------------------------------------------------------------------------
# evidence records


@dataclass
class RecurrenceEvidence:
    direction: Direction
    eps: float
    witness: tuple
    cylinder: Cylinder
    ratio: Fraction
    depth: int
    dist: float
    K: float
    mode: str = ""

    verdict = "WITNESS"

    def verify(self, s=None):
        """Recompute ratio and dist from the schedule."""
        c = self.cylinder
        r = intersection_measure(c, self.witness, self.depth).value / cylinder_measure(c)
        d = dist_to_subgroup(self.witness, self.direction, c.schedule.G)
        return (r == self.ratio and abs(d - self.dist) <= 1e-9 and d < self.eps
                and c.schedule.G.norm(self.witness) > self.K and any(self.witness))

    def to_json(self):
        return {"verdict": "WITNESS", "direction": self.direction.to_json(),
                "label": self.direction.label(), "eps": self.eps,
                "witness": elem_out(self.witness), "cylinder": self.cylinder.to_json(),
                "ratio": qstr(self.ratio), "ratio_float": float(self.ratio), "depth": self.depth,
                "dist": self.dist, "K": self.K, "mode": self.mode}


@dataclass
class NoWitness:
    direction: Direction
    eps: float
    K: float
    depth: int
    level: int
    candidates: int
    tested: int
    exhaustive: bool
    mode: str
    min_ratio: Fraction = Fraction(0)
    best_ratio: Fraction | None = None

    verdict = "NO_WITNESS"
    ratio = None
    dist = None

    def to_json(self):
        return {"verdict": "NO_WITNESS", "direction": self.direction.to_json(),
                "label": self.direction.label(), "eps": self.eps, "K": self.K,
                "depth": self.depth, "level": self.level, "candidates": self.candidates,
                "tested": self.tested, "exhaustive": self.exhaustive, "mode": self.mode,
                "min_ratio": qstr(self.min_ratio),
                "best_ratio": None if self.best_ratio is None else qstr(self.best_ratio)}


@dataclass
class RigidityEvidence:
    direction: Direction
    steps: list
    family: str

    verdict = "WITNESS"

    def ratios(self):
        return [st["ratio"] for st in self.steps]

    def dists(self):
        return [st["dist"] for st in self.steps]

    def to_json(self):
        return {"verdict": "WITNESS", "direction": self.direction.to_json(),
                "label": self.direction.label(), "family": self.family,
                "steps": [{"gamma": elem_out(st["gamma"]), "dist": st["dist"],
                           "ratio": qstr(st["ratio"]), "ratio_float": float(st["ratio"]),
                           "threshold": qstr(st["threshold"]), "level": st["level"],
                           "depth": st["depth"], "eps": st["eps"]} for st in self.steps]}


@dataclass
class DirectionScanReport:
    net: dict
    params: dict
    results: list
    provenance: dict = field(default_factory=dict)
    kappa_version: str = KAPPA_VERSION

    def counts(self):
        w = sum(1 for r in self.results if r.verdict == "WITNESS")
        return {"WITNESS": w, "NO_WITNESS": len(self.results) - w}

    def to_json(self):
        return {"schema": SCAN_SCHEMA, "kappa": self.kappa_version, "net": self.net,
                "params": self.params, "provenance": self.provenance, "counts": self.counts(),
                "results": [dict(index=i, **r.to_json()) for i, r in enumerate(self.results)]}


CSV_FIELDS = ["index", "label", "angle", "coords", "verdict", "ratio", "dist", "depth"]


def report_rows(obj):
    for r in obj["results"]:
        rep = r["direction"]["rep"]
        angle = math.atan2(rep[1], rep[0]) % math.pi if len(rep) == 2 else ""
        yield {"index": r["index"], "label": r["label"], "angle": angle,
               "coords": " ".join(repr(x) for x in rep), "verdict": r["verdict"],
               "ratio": r.get("ratio") if r["verdict"] == "WITNESS" else "",
               "dist": r.get("dist") if r["verdict"] == "WITNESS" else "",
               "depth": r["depth"]}


def report_csv(obj):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in report_rows(obj):
        w.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# distance forms


def planar_form(G, th):
    """Exact linear form (axes, coeffs, nu) with dist(g, th) = |sum coeffs g_axes| / nu on the plane.

    Z^1: dist is identically 0.  Z^2: the normal form, nu = |v|.  H3: on {b = 0} and for
    directions with zero b-part, dist((x,0,z), th) = |gamma x - alpha z| / max(|alpha|, |gamma|).
    """
    v = tuple(int(x) if x.denominator == 1 else x for x in th.vec())
    if G.kind == "H3":
        al, be, ga = v
        if be != 0:
            return None
        return (0, 2), (ga, -al), max(abs(al), abs(ga))
    if G.d == 1:
        return (0,), (0,), 1
    if G.d == 2:
        return (0, 1), (-v[1], v[0]), math.sqrt(float(v[0] ** 2 + v[1] ** 2))
    return None


def _form_value(form, p):
    axes, coeffs, _ = form
    return sum(a * p[i] for i, a in zip(axes, coeffs))


def _form_radius(form, box):
    axes, coeffs, _ = form
    return sum(abs(a) * max(abs(box[i][0]), abs(box[i][1])) for i, a in zip(axes, coeffs))


def _euclid_radius(box):
    return math.sqrt(sum(float(max(abs(lo), abs(hi))) ** 2 for lo, hi in box))


def default_K(s, n):
    """Diameter proxy of F_{n-1}: the largest norm of a corner of its bounding box."""
    if n <= 0:
        return 0.0
    box = s.F[n - 1].bbox()
    return float(max(s.G.norm(p) for p in product(*box)))


# ---------------------------------------------------------------------------
# candidate generation


def _levels(c, m):
    s = c.schedule
    return [diff_table(c.A)] + [s.diff(j) for j in range(c.level + 1, m + 1)]


def _sum_plane(c, m):
    """True when S_m S_m^-1 is the Minkowski sum of the levels' difference sets."""
    s = c.schedule
    if s.G.commutative:
        return True
    return plane_set(s.G, c.A) and s.plane_from(c.level, m)


def _box_add(b1, b2):
    return tuple((x[0] + y[0], x[1] + y[1]) for x, y in zip(b1, b2))


def _grid_strip(D, form, p, slack, budget):
    """Deltas of the difference grid D with |l(p + delta)| <= slack."""
    axes, coeffs, _ = form
    dim = len(D.step)
    for i in range(dim):
        if i not in axes and D.count_[i] > 1:
            raise TooLarge("difference grid leaves the plane")
    l0 = _form_value(form, p)
    b = {i: a * D.step[i] for i, a in zip(axes, coeffs)}
    rng = {i: (-(D.count_[i] - 1), D.count_[i] - 1) for i in axes}

    bf = {i: float(x) for i, x in b.items()}
    sf, l0f = float(slack), float(l0)

    def solve(j, rest, mag=None):
        # e_j with |rest + b_j e_j| <= slack
        lo_r, hi_r = rng[j]
        bj = b[j]
        if bj == 0:
            if abs(rest) > slack:
                return range(0)
            if hi_r - lo_r + 1 > budget:
                raise TooLarge("free axis in strip")
            return range(lo_r, hi_r + 1)
        if mag is not None and mag < 2.0 ** 40 * abs(bf[j]):
            # float bounds widened well past rounding error: a superset, filtered exactly later
            r = float(rest)
            a1, a2 = (-sf - r) / bf[j], (sf - r) / bf[j]
            pad = 1e-9 + 1e-12 * mag / abs(bf[j])
            lo, hi = min(a1, a2) - pad, max(a1, a2) + pad
            return range(max(lo_r, math.ceil(lo)), min(hi_r, math.floor(hi)) + 1)
        a1, a2 = (-slack - rest) / bj, (slack - rest) / bj
        lo, hi = min(a1, a2), max(a1, a2)
        return range(max(lo_r, math.ceil(lo)), min(hi_r, math.floor(hi)) + 1)

    def emit(e):
        delta = [0] * dim
        for i, x in e.items():
            delta[i] = x * D.step[i]
        return tuple(delta), D.mult(delta)

    if len(axes) == 1:
        (i,) = axes
        for ei in solve(i, l0):
            yield emit({i: ei})
        return
    i, j = axes
    # iterate over the shorter axis that leaves the other one solvable
    opts = []
    if b[j] != 0:
        opts.append((rng[i][1] - rng[i][0] + 1, i, j))
    if b[i] != 0:
        opts.append((rng[j][1] - rng[j][0] + 1, j, i))
    if not opts:
        if abs(l0) > slack:
            return
        tot = (rng[i][1] - rng[i][0] + 1) * (rng[j][1] - rng[j][0] + 1)
        if tot > budget:
            raise TooLarge("strip covers the whole grid")
        for ei in range(rng[i][0], rng[i][1] + 1):
            for ej in range(rng[j][0], rng[j][1] + 1):
                yield emit({i: ei, j: ej})
        return
    cost, it, other = min(opts)
    if cost > budget:
        raise TooLarge(f"strip enumeration over {cost} values")
    bi = bf[it]
    for ei in range(rng[it][0], rng[it][1] + 1):
        mag = abs(l0f) + abs(bi * ei) + sf
        if mag < 2.0 ** 40 * abs(bf[other]):
            rest = l0f + bi * ei
        else:
            rest, mag = l0 + b[it] * ei, None
        for ej in solve(other, rest, mag):
            yield emit({it: ei, other: ej})


def pruned_candidates(c, m, th, eps, budget=200_000):
    """Every gamma in S_m S_m^-1 with dist(gamma, th) < eps, by pruned top-down search."""
    s = c.schedule
    G = s.G
    if not _sum_plane(c, m):
        raise TooLarge("levels do not lie in a common abelian plane")
    form = planar_form(G, th)
    levels = _levels(c, m)
    below = [tuple((0, 0) for _ in range(G.dim))]
    for D in levels[:-1]:
        below.append(_box_add(below[-1], D.bbox()))
    if form is not None:
        # a little slack: the exact dist filter runs afterwards anyway
        tol = Fraction(eps) * Fraction(form[2]) * (1 + Fraction(1, 10 ** 9))
        rads = [_form_radius(form, bx) for bx in below]
    else:
        if G.kind == "H3":
            raise TooLarge("no pruning bound for this direction")
        tol = eps * (1 + 1e-9)
        rads = [_euclid_radius(bx) for bx in below]
    out = set()
    nodes = [0]

    def keep(q, i):
        if form is not None:
            return abs(_form_value(form, q)) <= tol + rads[i]
        return dist_to_subgroup(q, th, G) <= tol + rads[i]

    def rec(i, p):
        nodes[0] += 1
        if nodes[0] > budget:
            raise TooLarge("pruned search exceeded its node budget")
        if i < 0:
            out.add(p)
            return
        D = levels[i]
        if isinstance(D, DiffGrid):
            if form is not None:
                it = _grid_strip(D, form, p, tol + rads[i], budget)
            else:
                it = D.in_box(D.bbox(), budget)
        else:
            it = iter(D)
        for delta, _ in it:
            q = tuple(x + y for x, y in zip(p, delta))
            if keep(q, i):
                rec(i - 1, q)

    rec(len(levels) - 1, G.identity)
    return out


def _grid_line_points(D, form, th, multipliers=(1, 2, 3)):
    """Lattice points of one difference grid close to the line: continued-fraction hits."""
    dim = len(D.step)
    out = set()
    rng = [D.count_[i] - 1 for i in range(dim)]

    def add(e):
        if all(abs(x) <= r for x, r in zip(e, rng)) and any(e):
            out.add(tuple(x * st for x, st in zip(e, D.step)))

    if form is not None and len(form[0]) == 2:
        (i, j), (ai, aj), _ = form
        bi, bj = ai * D.step[i], aj * D.step[j]
        for mlt in multipliers:
            for sgn in (1, -1):
                e = [0] * dim
                if bi == 0:
                    e[i] = sgn * mlt
                    add(e)
                if bj == 0:
                    e = [0] * dim
                    e[j] = sgn * mlt
                    add(e)
        if bi != 0 and bj != 0:
            for r, (x, y) in ((-bi / bj, (i, j)), (-bj / bi, (j, i))):
                for p, q in convergents(r):
                    if q > rng[x] + 1 and abs(p) > rng[y] + 1:
                        break
                    for mlt in multipliers:
                        for sgn in (1, -1):
                            e = [0] * dim
                            e[x], e[y] = sgn * mlt * q, sgn * mlt * p
                            add(e)
        return out
    if form is not None:
        for mlt in multipliers:
            add([mlt] + [0] * (dim - 1))
        return out
    # generic dimension: round multiples of the direction onto the grid
    v = th.vec()
    i0 = max(range(dim), key=lambda i: abs(v[i]))
    w = [x / v[i0] for x in v]
    qs = sorted({q for q in list(range(1, 65)) + [2 ** k for k in range(6, 200)] if q <= rng[i0]}
                | {rng[i0]} if rng[i0] else set())
    for q in qs:
        coord = [q * D.step[i0] * x for x in w]
        base = [round(cx / st) for cx, st in zip(coord, D.step)]
        for sgn in (1, -1):
            add([sgn * b for b in base])
    return out


def targeted_candidates(c, m, th):
    s = c.schedule
    G = s.G
    form = planar_form(G, th) if _sum_plane(c, m) else None
    if form is None and G.kind != "H3" and G.d == 2:
        form = planar_form(G, th)
    out = set()
    for D in _levels(c, m):
        if isinstance(D, DiffTable):
            if len(D.table) <= MATERIALIZE_LIMIT:
                out.update(d for d in D.table)
        else:
            out.update(_grid_line_points(D, form if form is not None and
                                         all(D.count_[i] == 1 for i in range(len(D.step))
                                             if i not in form[0]) else None, th))
    if not G.commutative and c.A.count <= 64:
        base = list(out)
        for a in c.A:
            out.update(G.conj(a, x) for x in base)
    out.discard(G.identity)
    return out


def materialized_candidates(c, m, limit=4_000_000):
    s = c.schedule
    G = s.G
    S = level_set(c, m)
    if len(S) ** 2 > limit:
        raise TooLarge("return candidate set too large")
    inv = [G.inv(f) for f in S]
    return {G.mul(h, fi) for h in S for fi in inv}


def _materializable(c, m, limit=300):
    tot = c.A.count
    for j in range(c.level + 1, m + 1):
        tot *= c.schedule.C[j].count
        if tot > limit:
            return False
    return True


def candidate_set(c, m, th, eps, mode="auto", budget=200_000):
    """(candidates, mode used, exhaustive?)."""
    if mode in ("auto", "materialize") and _materializable(c, m):
        return materialized_candidates(c, m), "materialize", True
    if mode == "materialize":
        raise TooLarge("schedule too large to materialize S_m S_m^-1")
    if mode in ("auto", "pruned"):
        try:
            return pruned_candidates(c, m, th, eps, budget), "pruned", True
        except TooLarge:
            if mode == "pruned":
                raise
    return targeted_candidates(c, m, th), "targeted", False


# ---------------------------------------------------------------------------
# searches


def _as_fraction(x):
    return x if isinstance(x, Fraction) else Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def recurrence_search(s, th, eps, cyl=None, depth=None, K=None, min_ratio=0, mode="auto",
                      max_tests=2000, budget=200_000):
    """First candidate (ascending dist, then norm) with dist < eps, norm > K and ratio > min_ratio.

    With min_ratio > 0 the ratio must reach min_ratio; min_ratio = 0 asks for positivity.
    """
    G = s.G
    cyl = cyl if cyl is not None else cylinder(s, 0, Explicit([G.identity]))
    if cyl.schedule is not s:
        cyl = Cylinder(s, cyl.level, cyl.A)
    m = depth if depth is not None else s.depth
    if m <= cyl.level or m > s.depth:
        raise ValueError(f"depth {m} must lie in {cyl.level + 1}..{s.depth}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    K = default_K(s, cyl.level) if K is None else K
    thr = _as_fraction(min_ratio)
    cands, used, exhaustive = candidate_set(cyl, m, th, eps, mode, budget)
    scored = []
    for g in cands:
        if not any(g):
            continue
        nrm = G.norm(g)
        if nrm <= K:
            continue
        d = dist_to_subgroup(g, th, G)
        if d < eps:
            scored.append((d, float(nrm), tuple(-x for x in g), g))
    # ties go to the lexicographically largest element, so +g before -g
    scored.sort()
    mu = cylinder_measure(cyl)
    best = None
    tested = 0
    for d, nrm, _, g in scored:
        if tested >= max_tests:
            exhaustive = False
            break
        tested += 1
        r = intersection_measure(cyl, g, m).value / mu
        if best is None or r > best:
            best = r
        if (r > 0 and thr == 0) or (thr > 0 and r >= thr):
            return RecurrenceEvidence(th, eps, g, cyl, r, m, d, K, used)
    return NoWitness(th, eps, K, m, cyl.level, len(scored), tested, exhaustive, used, thr, best)


def _scan_one(args):
    s, th, eps, cyl, depth, K, min_ratio, mode = args
    return recurrence_search(s, th, eps, cyl, depth, K, min_ratio, mode)


def scan_directions(s, net, eps, depth=None, K=None, cyl=None, min_ratio=0, mode="auto", jobs=1):
    dirs = list(net)
    if not dirs:
        raise ValueError("empty direction net")
    cyl = cyl if cyl is not None else cylinder(s, 0, Explicit([s.G.identity]))
    m = depth if depth is not None else s.depth
    args = [(s, th, eps, cyl, m, K, min_ratio, mode) for th in dirs]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_scan_one, args))
    else:
        results = [_scan_one(a) for a in args]
    netd = net.to_json() if hasattr(net, "to_json") else {"directions": [d.to_json() for d in dirs]}
    params = {"eps": eps, "depth": m, "K": K, "cylinder": cyl.to_json(),
              "min_ratio": qstr(_as_fraction(min_ratio)), "mode": mode}
    prov = {k: s.provenance[k] for k in ("builder", "config") if k in s.provenance}
    return DirectionScanReport(netd, params, results, prov)


def rigidity_search(s, th, eps, levels=None, family=None, depth=None, deltas=None, K=None,
                    mode="auto"):
    """For each level n: gamma_n with dist < eps_n whose ratio on every family cylinder of
    level <= n (at depth n + 1) reaches 1 - delta_n; dists must not increase."""
    G = s.G
    levels = list(levels) if levels is not None else list(range(len(eps)))
    if len(levels) != len(eps):
        raise ValueError("one eps per level")
    top = depth if depth is not None else s.depth
    steps = []
    prev = math.inf
    for idx, (n, e) in enumerate(zip(levels, eps)):
        m = n + 1
        if m > top:
            raise ValueError(f"level {n} needs depth {m} > {top}")
        if deltas is not None:
            dl = _as_fraction(deltas[idx])
        else:
            dl = Fraction(1, 2) if n <= 1 else min(Fraction(1, 2), Fraction(1, n))
        thr = 1 - dl
        fam = ([cyl for cyl in family if cyl.level <= n] if family is not None
               else [cylinder(s, j, Explicit([G.identity])) for j in range(n + 1)])
        if not fam:
            raise ValueError(f"no family cylinder at level <= {n}")
        base = cylinder(s, n, Explicit([G.identity]))
        Kn = default_K(s, n) if K is None else K
        cands, used, _ = candidate_set(base, m, th, e, mode)
        scored = sorted((dist_to_subgroup(g, th, G), float(G.norm(g)), tuple(-x for x in g), g)
                        for g in cands if any(g) and G.norm(g) > Kn)
        found = None
        for d, _, _, g in scored:
            if d >= e or d > prev:
                break
            rs = [intersection_measure(cyl, g, m).value / cylinder_measure(cyl) for cyl in fam]
            r = min(rs)
            if r >= thr:
                found = {"gamma": g, "dist": d, "ratio": r, "threshold": thr, "level": n,
                         "depth": m, "eps": e, "mode": used}
                break
        if found is None:
            return NoWitness(th, e, Kn, m, n, len(scored), len(scored), False, used, thr)
        steps.append(found)
        prev = found["dist"]
    desc = "given family" if family is not None else "[{1}]_j for j <= n"
    return RigidityEvidence(th, steps, desc)


def even_recurrence_probe(s, th, conjugators, eps, cyl=None, depth=None, K=None, min_ratio=0,
                          mode="auto"):
    out = []
    for g in conjugators:
        th2 = adjoint_direction(g, th, s.G)
        ev = recurrence_search(s, th2, eps, cyl, depth, K, min_ratio, mode)
        out.append({"g": elem_out(g), "direction": th2, "evidence": ev})
    return out


def transfer_witness(ev, g0):
    """Move a witness along a lattice conjugator: (Ad(g0) theta, g0 gamma g0^-1, [g0 A]_n)."""
    c = ev.cylinder
    s, G = c.schedule, c.schedule.G
    A2 = Explicit([G.mul(g0, a) for a in c.A])
    c2 = Cylinder(s, c.level, A2)
    gam = G.mul(G.mul(g0, ev.witness), G.inv(g0))
    th2 = adjoint_direction(g0, ev.direction, G)
    r = intersection_measure(c2, gam, ev.depth).value / cylinder_measure(c2)
    d = dist_to_subgroup(gam, th2, G)
    return RecurrenceEvidence(th2, max(ev.eps, d * 2 + 1e-12), gam, c2, r, ev.depth, d, 0.0, "transfer")


# ---------------------------------------------------------------------------
# upper bounds from the explicit sets


def _log_direction(G, g):
    v = G.log(g)
    if not any(v):
        return None
    return project(v, kind=G.kind)


def _grid_directions(G, D, limit):
    """Directions pi(log delta) for delta in a difference grid (plane grids only)."""
    out = {}
    rng = [range(-(n - 1), n) for n in D.count_]
    tot = math.prod(len(r) for r in rng)
    if tot > limit:
        raise TooLarge(f"{tot} difference points")
    for e in product(*rng):
        if not any(e):
            continue
        if math.gcd(*[abs(x) for x in e]) != 1:
            continue
        delta = tuple(x * st for x, st in zip(e, D.step))
        th = _log_direction(G, delta)
        out[th.exact] = th
    return list(out.values())


def cluster_directions(dirs, radius):
    """Greedy kappa-clusters in input order; a cluster centre absorbs everything within radius."""
    clusters = []
    for th in dirs:
        for cl in clusters:
            if kappa(th, cl["center"]) <= radius:
                cl["members"] += 1
                cl["spread"] = max(cl["spread"], kappa(th, cl["center"]))
                break
        else:
            clusters.append({"center": th, "members": 1, "spread": 0.0})
    return clusters


def dominance_profile(s, n_range):
    """dominance_gap(C_j minus 1, C_1 ... C_{j-1}) for j in n_range (small levels)."""
    G = s.G
    out = []
    prefix = {G.identity}
    for j in range(1, max(n_range) + 1):
        Cj = s.C[j].materialize()
        if j in n_range:
            A = [x for x in Cj if any(x)]
            out.append(dominance_gap(A, prefix, G) if A else 0.0)
        if len(prefix) * len(Cj) > MATERIALIZE_LIMIT:
            raise TooLarge("prefix product too large")
        prefix = {G.mul(x, y) for x in prefix for y in Cj}
    return out


def upper_bound_directions(s, n_range, mode="twopoint", cluster_radius=0.1, limit=200_000,
                           dominance_tol=1.0):
    G = s.G
    n_range = list(n_range)
    if not n_range or min(n_range) < 1 or max(n_range) > s.depth:
        raise ValueError("n_range must lie within 1..depth")
    dirs = []
    if mode == "twopoint":
        for m in n_range:
            if s.C[m].count != 2 or G.identity not in s.C[m]:
                raise ValueError(f"twopoint needs C_{m} = {{1, c_{m}}}")
        for m in sorted(n_range, reverse=True):
            c = next(x for x in s.C[m] if any(x))
            dirs.append(_log_direction(G, c))
    elif mode == "lastblock":
        ok_comm = G.commutative or all(plane_set(G, s.C[j]) for j in range(1, max(n_range) + 1))
        if not ok_comm:
            raise ValueError("lastblock needs the C_j to generate a commutative group")
        try:
            gaps = dominance_profile(s, n_range)
        except TooLarge:
            gaps = None
        if gaps is not None and gaps and (gaps[-1] >= dominance_tol or
                                          any(b > a + 1e-12 for a, b in zip(gaps[1:], gaps[2:]))):
            raise ValueError(f"lastblock needs C_j minus 1 >> C_1...C_(j-1); gaps {gaps}")
        seen = {}
        for m in sorted(n_range, reverse=True):
            D = s.diff(m)
            if isinstance(D, DiffGrid):
                for th in _grid_directions(G, D, limit):
                    seen.setdefault(th.exact, th)
            else:
                for delta, _ in D:
                    th = _log_direction(G, delta)
                    if th is not None:
                        seen.setdefault(th.exact, th)
        dirs = list(seen.values())
    elif mode == "full":
        n0 = min(n_range)
        seen = {}
        for m in sorted(n_range, reverse=True):
            cyl = cylinder(s, n0 - 1, Explicit([G.identity]))
            for g in materialized_candidates(cyl, m, limit * 20):
                th = _log_direction(G, g)
                if th is not None:
                    seen.setdefault(th.exact if th.exact is not None else th.rep, th)
        dirs = list(seen.values())
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return {"mode": mode, "n_range": n_range, "directions": dirs,
            "clusters": cluster_directions(dirs, cluster_radius)}


# ---------------------------------------------------------------------------
# plain dict reports for rigidity runs


def rigidity_report(results, params, provenance=None):
    return {"schema": RIGIDITY_SCHEMA, "kappa": KAPPA_VERSION, "params": params,
            "provenance": provenance or {},
            "counts": {"WITNESS": sum(1 for r in results if r.verdict == "WITNESS"),
                       "NO_WITNESS": sum(1 for r in results if r.verdict != "WITNESS")},
            "results": [dict(index=i, **r.to_json()) for i, r in enumerate(results)]}

"""Parameter synthesis for the explicit (C,F)-constructions.

Z^d:  build_zd_42      two-point C_n = {0, c_n} steering recurrence to a countable set D
      build_zd_empty   two-point C_n drifting away from a single line (no recurrence)
      build_zd_43      C_{n+1} = K_{3 t_n, M_n}, recurrence in every direction
H3:   build_h3         variants "empty", "countable", "uncountable"

Every builder records its per-level certificates in ``schedule.provenance``;
``audit_*`` functions recompute them from the schedule alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
import math

import numpy as np

from .cf import CFSchedule, validate_schedule
from .diophantine import convergents, dirichlet_planar_Q, dirichlet_simultaneous_Q, min_fractional_distance
from .directions import (
    Direction,
    DirectionSetSpec,
    KAPPA_VERSION,
    direction_net,
    dist_to_subgroup,
    dominance_gap,
    kappa,
    project,
    spec_membership,
    theta,
)
from .groups import Abelian, H3
from .pointsets import MATERIALIZE_LIMIT, Explicit, Grid, TooLarge
from .serial import elem_in, elem_out, qstr


class BuildError(RuntimeError):
    def __init__(self, msg, level=None, condition=None, failures=None):
        super().__init__(msg)
        self.level, self.condition = level, condition
        self.failures = failures or []


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def _norm(v):
    return math.sqrt(sum(float(x) ** 2 for x in v))


def _check_eps(eps, depth):
    if len(eps) < depth:
        raise ValueError(f"need {depth} eps values, got {len(eps)}")
    eps = list(eps)[:depth]
    if any(e <= 0 for e in eps):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps must be strictly decreasing")
    return eps


def cube(d, a):
    return Grid.symmetric_cube(d, a)


# ---------------------------------------------------------------------------
# Theorem 4.2: countable D


@dataclass
class Builder42Config:
    d: int
    D: list
    eps: list
    depth: int
    spec: DirectionSetSpec = field(default_factory=DirectionSetSpec)
    inflation: float = 0.0
    safety: int = 3
    order: list | None = None
    budget: int = 200_000

    def __post_init__(self):
        if not self.D:
            raise ValueError("D must be nonempty")
        self.eps = _check_eps(self.eps, self.depth)

    def delta(self, n):
        if self.order:
            return self.D[self.order[(n - 1) % len(self.order)]]
        return self.D[(n - 1) % len(self.D)]

    def stage(self, n):
        return min(n, len(self.spec.stages)) if self.spec.stages else None

    def to_json(self):
        return {"d": self.d, "D": [x.to_json() for x in self.D], "eps": list(self.eps),
                "depth": self.depth, "spec": self.spec.to_json(), "inflation": self.inflation,
                "safety": self.safety, "order": self.order, "budget": self.budget}

    @classmethod
    def from_json(cls, obj):
        return cls(d=int(obj["d"]), D=[Direction.from_json(x) for x in obj["D"]],
                   eps=[float(e) for e in obj["eps"]], depth=int(obj["depth"]),
                   spec=DirectionSetSpec.from_json(obj.get("spec", {})),
                   inflation=float(obj.get("inflation", 0.0)), safety=int(obj.get("safety", 3)),
                   order=obj.get("order"), budget=int(obj.get("budget", 200_000)))


def _outside_Lplus(th, spec, stage, inflation):
    if stage is None or not spec.balls:
        return True, math.inf
    gap = spec.kappa_to_stage(th, stage) - inflation
    return not spec_membership(th, spec, stage, inflation), gap


def certify_c42(c, delta, eps, a_prev, d, spec, stage, inflation):
    """The constraints placed on c_n, evaluated from scratch."""
    G = Abelian(d)
    cvec = tuple(c)
    disjoint = max(abs(x) for x in cvec) >= max(1, 2 * a_prev)
    dist = dist_to_subgroup(cvec, delta, G)
    r_f = a_prev * math.sqrt(d)
    cn = _norm(cvec)
    proj_bound = r_f / (cn - r_f) if cn > r_f else math.inf
    # exact kappa at the cube corners, for the record
    corners = [] if a_prev == 0 else list(product((-a_prev + 1, a_prev), repeat=d))
    pc = project(cvec)
    proj_corners = max((kappa(project(tuple(x + y for x, y in zip(cvec, f))), pc) for f in corners),
                       default=0.0)
    outside, gap = _outside_Lplus(pc, spec, stage, inflation)
    return {
        "c": list(cvec),
        "delta": delta.to_json(),
        "eps": eps,
        "disjoint": bool(disjoint),
        "dist": dist,
        "dist_ok": dist < eps,
        "proj_bound": proj_bound,
        "proj_corners": proj_corners,
        "proj_ok": proj_bound < eps,
        "outside_L_plus": bool(outside),
        "kappa_gap_to_L_plus": gap if math.isfinite(gap) else None,
    }


def _c_candidates(delta, qmin, budget):
    """Lattice points near the line of delta, ordered roughly by size."""
    v = delta.vec()
    d = len(v)
    i0 = max(range(d), key=lambda i: abs(v[i]))
    w = [x / v[i0] for x in v]
    sign = 1 if v[i0] > 0 else -1
    if d == 1:
        yield (max(qmin, 1),)
        return
    if d == 2:
        j = 1 - i0
        batch = []
        for p, q in convergents(w[j]):
            s = max(1, -(-qmin // q))
            for mult in (s, s + 1):
                c = [0, 0]
                c[i0], c[j] = sign * mult * q, sign * mult * p
                batch.append(tuple(c))
        yield batch
    for q in range(max(qmin, 1), max(qmin, 1) + budget):
        yield [tuple(sign * round(q * x) for x in w)]


def build_zd_42(cfg):
    d = cfg.d
    G = Abelian(d)
    for n in range(1, cfg.depth + 1):
        st = cfg.stage(n)
        ok, gap = _outside_Lplus(cfg.delta(n), cfg.spec, st, cfg.inflation)
        if not ok or gap <= 0:
            raise BuildError(f"delta_{n} lies in the closure of L_{n}^+", level=n, condition="(4-2)")
    F = [cube(d, 0)]
    C = []
    a_prev = 0
    certs = []
    for n in range(1, cfg.depth + 1):
        delta, eps, st = cfg.delta(n), cfg.eps[n - 1], cfg.stage(n)
        r_f = a_prev * math.sqrt(d)
        qmin = max(1, 2 * a_prev, math.floor(r_f * (1 + 1 / eps) / math.sqrt(d)))
        best = None
        # each batch is scanned fully and the smallest admissible point kept
        for batch in _c_candidates(delta, qmin, cfg.budget):
            for cand in batch:
                if not any(cand):
                    continue
                cert = certify_c42(cand, delta, eps, a_prev, d, cfg.spec, st, cfg.inflation)
                if cert["disjoint"] and cert["dist_ok"] and cert["proj_ok"] and cert["outside_L_plus"]:
                    if best is None or _norm(cand) < _norm(best[0]):
                        best = (cand, cert)
            if best is not None:
                break
        if best is None:
            raise BuildError(f"no c_{n} found within budget", level=n, condition="dist(c_n, delta_n) < eps_n")
        c, cert = best
        cert["level"] = n
        certs.append(cert)
        C.append(Explicit([G.identity, c]))
        amin = a_prev + max(abs(x) for x in c)
        a_prev = cfg.safety * amin
        F.append(cube(d, a_prev))
    prov = {"builder": "zd_42", "config": cfg.to_json(), "certificates": certs,
            "kappa": KAPPA_VERSION, "reading_4_1": "projective"}
    return CFSchedule(G, F, C, prov)


def audit_zd_42(s, cfg=None):
    """Re-derive every c_n certificate from the schedule alone."""
    cfg = cfg or Builder42Config.from_json(s.provenance["config"])
    out = []
    for n in range(1, s.depth + 1):
        c = next(p for p in s.C[n] if any(p))
        a_prev = s.F[n - 1].bbox()[0][1]
        cert = certify_c42(c, cfg.delta(n), cfg.eps[n - 1], a_prev, cfg.d, cfg.spec, cfg.stage(n),
                           cfg.inflation)
        cert["level"] = n
        cert["ok"] = cert["disjoint"] and cert["dist_ok"] and cert["proj_ok"] and cert["outside_L_plus"]
        out.append(cert)
    return out


# ---------------------------------------------------------------------------
# Theorem 4.2, empty branch


def line_distance_lower_bound(c, th, radius_box):
    """Lower bound for min over |f|_inf <= radius_box of dist(c + f, line th); exact for d = 2."""
    v = th.vec()
    d = len(v)
    if d == 2:
        num = abs(v[0] * c[1] - v[1] * c[0]) - radius_box * (abs(v[0]) + abs(v[1]))
        return max(0.0, float(num) / _norm(v))
    base = dist_to_subgroup(c, th, Abelian(d))
    return max(0.0, base - radius_box * math.sqrt(d))


def certify_empty(c, th, eps, a_prev, margin=10):
    d = len(c)
    w = 0 if a_prev == 0 else 2 * a_prev - 1
    kap = kappa(project(tuple(c)), th)
    low = line_distance_lower_bound(tuple(c), th, w)
    return {"c": list(c), "kappa": kap, "eps": eps, "kappa_ok": kap < eps,
            "min_dist_lower_bound": low, "margin": margin, "dist_ok": low > margin,
            "disjoint": max(abs(x) for x in c) >= max(1, 2 * a_prev)}


def build_zd_empty(th, depth, eps, safety=3, margin=10, budget=10_000):
    eps = _check_eps(eps, depth)
    d = th.dim
    G = Abelian(d)
    u = [float(x) for x in th.rep]
    # a unit normal to the line
    if d == 1:
        raise ValueError("the empty branch needs d >= 2")
    normal = [0.0] * d
    i0 = max(range(d), key=lambda i: abs(u[i]))
    j = 0 if i0 != 0 else 1
    normal[j] = 1.0
    dot = sum(a * b for a, b in zip(normal, u))
    normal = [a - dot * b for a, b in zip(normal, u)]
    nn = math.sqrt(sum(a * a for a in normal))
    normal = [a / nn for a in normal]
    F = [cube(d, 0)]
    C, certs = [], []
    a_prev = 0
    for n in range(1, depth + 1):
        w = 0 if a_prev == 0 else 2 * a_prev - 1
        off = margin + w * math.sqrt(d) + 1
        R = max(off / eps[n - 1] * 1.1, 2 * a_prev + 1)
        found = None
        for _ in range(budget):
            c = tuple(round(R * a + off * b) for a, b in zip(u, normal))
            cert = certify_empty(c, th, eps[n - 1], a_prev, margin)
            if cert["kappa_ok"] and cert["dist_ok"] and cert["disjoint"]:
                found = (c, cert)
                break
            if not cert["dist_ok"]:
                off += 1
            else:
                R *= 1.25
        if found is None:
            raise BuildError(f"no c_{n} found within budget", level=n, condition="(4-3)/(4-4)")
        c, cert = found
        cert["level"] = n
        certs.append(cert)
        C.append(Explicit([G.identity, c]))
        a_prev = safety * (a_prev + max(abs(x) for x in c))
        F.append(cube(d, a_prev))
    prov = {"builder": "zd_empty", "config": {"theta": th.to_json(), "depth": depth, "eps": eps,
                                              "safety": safety, "margin": margin},
            "certificates": certs, "kappa": KAPPA_VERSION}
    return CFSchedule(G, F, C, prov)


def audit_zd_empty(s):
    cfg = s.provenance["config"]
    th = Direction.from_json(cfg["theta"])
    out = []
    for n in range(1, s.depth + 1):
        c = next(p for p in s.C[n] if any(p))
        a_prev = s.F[n - 1].bbox()[0][1]
        cert = certify_empty(c, th, cfg["eps"][n - 1], a_prev, cfg.get("margin", 10))
        cert["level"] = n
        cert["ok"] = cert["kappa_ok"] and cert["dist_ok"] and cert["disjoint"]
        out.append(cert)
    return out


# ---------------------------------------------------------------------------
# Theorem 4.3: the grids K_{t,N}


def kgrid_good_count(d, t, N, M):
    """(#{g in K_{t,M} : g + K_{t,N} inside K_{t,M}}, #K_{t,M}), exactly."""
    qN, qM = (N - 1) // t, (M - 1) // t
    per = 2 * (qM - qN) + 1 if qM >= qN else 0
    return per ** d, (2 * qM + 1) ** d


def kgrid_M_search(d, t, N, fraction):
    fr = _frac(fraction)
    if not 0 < fr < 1:
        raise ValueError("fraction must lie in (0, 1)")
    qN = (N - 1) // t

    def ok(qM):
        good, tot = kgrid_good_count(d, t, N, t * qM + 1)
        return good > fr * tot

    hi = max(qN, 1)
    while not ok(hi):
        hi *= 2
    lo = qN  # ok(qN) is false: a single good point is never more than the fraction of many
    if ok(lo):
        return t * lo + 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return t * hi + 1


def _net_worst(d, t, q, dirs):
    """Worst over the net directions of min over nonzero gamma in K_{t, tq+1} of dist."""
    rng = np.arange(-q, q + 1, dtype=float) * t
    pts = np.array(list(product(rng, repeat=d)))
    pts = pts[np.any(pts != 0, axis=1)]
    sq = np.sum(pts * pts, axis=1)
    U = np.array([x.rep for x in dirs])
    best = np.inf * np.ones(len(dirs))
    step = max(1, 2_000_000 // max(1, len(pts)))
    for i in range(0, len(dirs), step):
        dots = U[i:i + step] @ pts.T
        dd = np.sqrt(np.maximum(sq[None, :] - dots * dots, 0.0))
        best[i:i + step] = dd.min(axis=1)
    k = int(np.argmax(best))
    return float(best[k]), dirs[k]


def kgrid_N_search(d, t, eps, net_resolution=None, method="auto", return_certificate=False,
                   max_net=4096, budget=4_000_000):
    """Smallest N (found by the chosen method) with sup_delta min_{0 != g in K_{t,N}} dist(g, delta) < eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if d == 1:
        cert = {"method": "trivial", "N": t + 1}
        return (t + 1, cert) if return_certificate else t + 1
    if d == 2:
        Qa = dirichlet_planar_Q(t, eps)
        Na = t * Qa + 1
        analytic = {"method": "dirichlet", "Q": Qa, "N": Na,
                    "bound": float(Fraction(t) / (Qa + 1)), "eps": eps}
    else:
        Qa = dirichlet_simultaneous_Q(t, eps, d)
        Na = t * Qa ** (d - 1) + 1
        analytic = {"method": "dirichlet", "Q": Qa, "N": Na,
                    "bound": t * math.sqrt(d - 1) / Qa, "eps": eps}
    use_net = method == "net" or (method == "auto" and d == 2 and (2 * Qa + 1) ** d * 64 <= budget)
    if use_net:
        G = Abelian(d)
        for q in range(1, Qa + 1):
            N = t * q + 1
            if (2 * q + 1) ** d > budget:
                break
            if net_resolution:
                res_list = [net_resolution]
            else:
                coarse = direction_net(G, 64)
                w0, _ = _net_worst(d, t, q, coarse.directions)
                if w0 >= eps:
                    continue
                # mesh small enough that the Lipschitz slack N sqrt(d) h leaves room
                h = (eps - w0) / (2 * N * math.sqrt(d))
                r = math.ceil(math.pi / (2 * math.asin(min(1.0, h)))) if d == 2 else math.ceil(math.sqrt(d - 1) / h)
                if r > max_net:
                    continue
                res_list = [r]
            for r in res_list:
                net = direction_net(G, r)
                worst, where = _net_worst(d, t, q, net.directions)
                slack = N * math.sqrt(d) * net.mesh
                if worst < eps - slack:
                    cert = {"method": "net", "N": N, "net_resolution": r, "mesh": net.mesh,
                            "worst": worst, "worst_direction": where.to_json(), "slack": slack,
                            "margin": eps - slack - worst, "eps": eps}
                    return (N, cert) if return_certificate else N
        if method == "net":
            raise BuildError("net search could not certify any N up to the Dirichlet bound",
                             condition="(4-5)")
    return (Na, analytic) if return_certificate else Na


def fraction_for_level(n, rigidity):
    if not rigidity:
        return Fraction(1, 2)
    if n <= 1:
        return Fraction(1, 2)
    return max(Fraction(1, 2), 1 - Fraction(1, n))


@dataclass
class Builder43Config:
    d: int
    eps: list
    depth: int
    rigidity_variant: bool = False
    fractions: list | None = None
    safety: int = 3
    n_method: str = "auto"

    def __post_init__(self):
        self.eps = _check_eps(self.eps, self.depth)

    def fraction(self, n):
        """Count threshold for M_n (level n builds C_{n+1})."""
        if self.fractions:
            return _frac(self.fractions[n])
        return fraction_for_level(n, self.rigidity_variant)

    def to_json(self):
        return {"d": self.d, "eps": list(self.eps), "depth": self.depth,
                "rigidity_variant": self.rigidity_variant,
                "fractions": [qstr(f) for f in self.fractions] if self.fractions else None,
                "safety": self.safety, "n_method": self.n_method}

    @classmethod
    def from_json(cls, obj):
        fr = obj.get("fractions")
        return cls(d=int(obj["d"]), eps=[float(e) for e in obj["eps"]], depth=int(obj["depth"]),
                   rigidity_variant=bool(obj.get("rigidity_variant", False)),
                   fractions=[_frac(x) for x in fr] if fr else None,
                   safety=int(obj.get("safety", 3)), n_method=obj.get("n_method", "auto"))


def build_zd_43(cfg):
    d = cfg.d
    G = Abelian(d)
    F = [cube(d, 0)]
    C, certs = [], []
    a, t = 0, 1
    for n in range(cfg.depth):
        T = 3 * t
        N, ncert = kgrid_N_search(d, T, cfg.eps[n], method=cfg.n_method, return_certificate=True)
        fr = cfg.fraction(n)
        M = kgrid_M_search(d, T, N, fr)
        good, tot = kgrid_good_count(d, T, N, M)
        C.append(Grid.kgrid(d, T, M))
        qM = (M - 1) // T
        amin = a + T * qM
        a = cfg.safety * amin
        F.append(cube(d, a))
        certs.append({"level": n, "t": t, "step": T, "N": N, "M": M, "N_certificate": ncert,
                      "fraction": qstr(fr), "good": good, "total": tot,
                      "count_ok": Fraction(good) > fr * tot, "eps": cfg.eps[n]})
        t = 2 * a
    prov = {"builder": "zd_43", "config": cfg.to_json(), "certificates": certs, "kappa": KAPPA_VERSION}
    return CFSchedule(G, F, C, prov)


def audit_zd_43(s, cfg=None):
    cfg = cfg or Builder43Config.from_json(s.provenance["config"])
    out = []
    d = cfg.d
    for n in range(s.depth):
        Cn = s.C[n + 1]
        T = Cn.step[0]
        t = 1 if n == 0 else (s.F[n].bbox()[0][1]) * 2
        M = Cn.bbox()[0][1] + 1
        cert = dict(s.provenance["certificates"][n])
        N = cert["N"]
        good, tot = kgrid_good_count(d, T, N, M)
        fr = cfg.fraction(n)
        ok = (T == 3 * t and Cn == Grid.kgrid(d, T, M) and Fraction(good) > fr * tot)
        # the small Dirichlet/net certificate is recomputed too
        N2, c2 = kgrid_N_search(d, T, cfg.eps[n], method=cfg.n_method, return_certificate=True)
        out.append({"level": n, "step": T, "N": N, "M": M, "good": good, "total": tot,
                    "fraction": qstr(fr), "count_ok": ok, "N_reproduced": N2 == N})
    return out


# ---------------------------------------------------------------------------
# Heisenberg constructions


H3_VARIANTS = ("empty", "countable", "uncountable")


def h3_box(L, M):
    return Grid.box((-L + 1, -L + 1, -M + 1), (L - 1, L - 1, M - 1))


def h3_C(variant, p):
    if variant == "empty":
        return Grid((0, 0, 0), (p["t"], 1, 1), (2, 1, 1))
    k = p["k"]
    if variant == "countable":
        I = p["I"]
        return Grid((0, 0, -I * k), (k, 1, k), (2, 1, 2 * I + 1))
    l, I, J = p["l"], p["I"], p["J"]
    return Grid((-l * I * k, 0, -l * J * k), (k, 1, k), (2 * l * I + 1, 1, 2 * l * J + 1))


def h3_C0(p):
    k, l = p["k"], p["l"]
    return Grid((-l * k, 0, -l * k), (k, 1, k), (2 * l + 1, 1, 2 * l + 1))


def triangle_count(p, L_prev):
    """Closed form of #{w in C_n : d^-1 c d w in C_n for all d in F_{n-1}, c in C_n^0}.

    d^-1 c d = (i k, 0, j k + y i k) for c = (i k, 0, j k) and d = (x, y, z), so w = (i' k, 0, j' k)
    qualifies iff |i'| <= l I - l and |j'| <= l J - l - (L - 1) l.
    """
    l, I, J = p["l"], p["I"], p["J"]
    a = l * I - l
    b = l * J - l * L_prev
    if a < 0 or b < 0:
        return 0
    return (2 * a + 1) * (2 * b + 1)


def triangle_count_enumerated(s, n, p):
    """The same count by brute force over C_n x F_{n-1} x C_n^0 (small levels only)."""
    Cn, F, C0 = s.C[n], s.F[n - 1], h3_C0(p)
    if Cn.count * F.count * C0.count > 5 * MATERIALIZE_LIMIT:
        raise TooLarge("triangle enumeration too large")
    cs = list(C0)
    ds = list(F)
    conj = {H3.mul(H3.mul(H3.inv(dd), c), dd) for dd in ds for c in cs}
    return sum(1 for w in Cn if all(H3.mul(x, w) in Cn for x in conj))


def _auto_params(variant, depth, t=None):
    params = [{"L": 1, "M": 1}]
    for n in range(1, depth + 1):
        Lp, Mp = params[-1]["L"], params[-1]["M"]
        if variant == "empty":
            tn = t[n - 1] if t else 20 * n * Lp
            L = Lp + tn
            params.append({"t": tn, "L": L, "M": L * L})
        elif variant == "countable":
            k = 2 * n * Mp + 1
            I = 20 * n * Lp
            params.append({"k": k, "I": I, "L": Lp + k, "M": Mp + I * k})
        else:
            k = 2 * n * Mp + 1
            l = n * k
            I, J = 2 * n, 2 * n * Lp
            p = {"k": k, "l": l, "I": I, "J": J}
            while triangle_count(p, Lp) <= (1 - Fraction(1, n)) * h3_C("uncountable", p).count:
                p["I"] += 1
                p["J"] += Lp
            p["L"] = Lp + l * p["I"] * k
            p["M"] = Mp + l * p["J"] * k
            params.append(p)
    return params


@dataclass
class BuilderH3Config:
    variant: str
    depth: int
    params: list | None = None
    t: list | None = None

    def __post_init__(self):
        if self.variant not in H3_VARIANTS:
            raise ValueError(f"variant must be one of {H3_VARIANTS}")
        if self.params is None:
            self.params = _auto_params(self.variant, self.depth, self.t)
        if len(self.params) < self.depth + 1:
            raise ValueError("params must list levels 0..depth")
        if self.params[0].get("L") != 1 or self.params[0].get("M") != 1:
            raise ValueError("level 0 must be the singleton box L = M = 1")

    def to_json(self):
        return {"variant": self.variant, "depth": self.depth,
                "params": [{k: v for k, v in p.items()} for p in self.params[: self.depth + 1]]}

    @classmethod
    def from_json(cls, obj):
        params = obj.get("params")
        if params is not None:
            params = [{k: int(v) for k, v in p.items()} for p in params]
        return cls(variant=obj["variant"], depth=int(obj["depth"]), params=params,
                   t=[int(x) for x in obj["t"]] if obj.get("t") else None)


def build_h3(cfg, strict=True):
    P = cfg.params
    F = [h3_box(1, 1)]
    C = []
    for n in range(1, cfg.depth + 1):
        C.append(h3_C(cfg.variant, P[n]))
        F.append(h3_box(P[n]["L"], P[n]["M"]))
    s = CFSchedule(H3, F, C, {"builder": "h3_" + cfg.variant, "config": cfg.to_json(),
                                "kappa": KAPPA_VERSION})
    certs = [check_h3_conditions(s, cfg, n) for n in range(1, cfg.depth + 1)]
    s.provenance["certificates"] = certs
    failures = [f for c in certs for f in c["failures"]]
    s.provenance["failures"] = failures
    if strict and failures:
        f = failures[0]
        raise BuildError(f"condition {f['condition']} fails at level {f['level']}",
                         level=f["level"], condition=f["condition"], failures=failures)
    return s


def _prev_gap_bound(s, n):
    """Upper bound for kappa(pi(log ab), pi(log a)), a in C_n minus 1, b in C_1..C_{n-1}.

    All these elements have zero b-coordinate, so log is the identity and ab = a + b;
    sin of the angle between a + b and a is at most |b| / (|a| - |b|).
    """
    ext = [0, 0, 0]
    for j in range(1, n):
        for i, (lo, hi) in enumerate(s.C[j].bbox()):
            ext[i] += max(abs(lo), abs(hi))
    bmax = math.sqrt(sum(float(e) ** 2 for e in ext))
    # C_n is a grid of Y0 through the identity: nonzero points are at least one step long
    Cn = s.C[n]
    amin = min(st for st, c in zip(Cn.step, Cn.count_) if c > 1)
    if bmax == 0:
        return 0.0
    if amin <= bmax:
        return 1.0
    return min(1.0, bmax / (amin - bmax))


def _prefix_products(s, n):
    cur = {H3.identity}
    for j in range(1, n):
        pts = s.C[j].materialize()
        if len(cur) * len(pts) > MATERIALIZE_LIMIT:
            raise TooLarge("prefix product too large")
        cur = {H3.mul(x, y) for x in cur for y in pts}
    return cur


def dominance_certificate(s, n, P):
    bound = _prev_gap_bound(s, n)
    exact = None
    try:
        A = [x for x in s.C[n].materialize(20_000) if any(x)]
        B = _prefix_products(s, n)
        if len(A) * len(B) <= 200_000:
            exact = dominance_gap(A, B, H3)
    except TooLarge:
        pass
    return {"bound": bound, "exact": exact}


def check_h3_conditions(s, cfg, n):
    """Per-level certificates of the growth conditions for the chosen variant."""
    P, v = cfg.params, cfg.variant
    p, pp = P[n], P[n - 1]
    out = {"level": n, "variant": v, "failures": []}

    def fail(cond, detail=""):
        out["failures"].append({"level": n, "condition": cond, "detail": detail})

    # structure: C_n and F_n are the displayed sets
    out["structure"] = (s.C[n] == h3_C(v, p) and s.F[n] == h3_box(p["L"], p["M"]))
    if not out["structure"]:
        fail("structure", "C_n or F_n differs from the parameter table")
    # (bullet): (I)--(III) at this level
    sub = CFSchedule(H3, [s.F[n - 1], s.F[n]], [s.C[n]])
    rep = validate_schedule(sub)
    lev = rep.levels[0]
    out["(•)"] = {"I": lev["I"], "II": lev["II"], "III": lev["III"]}
    if not (lev["I"] and lev["II"] and lev["III"]):
        fail("(•)", f"(I)-(III) verdicts {lev}")
    # (diamond): L, M grow and L/M decreases
    rl, rlp = Fraction(p["L"], p["M"]), Fraction(pp["L"], pp["M"])
    dia = p["L"] > pp["L"] and p["M"] > pp["M"] and (n == 1 or rl < rlp)
    out["(⋄)"] = {"L": p["L"], "M": p["M"], "L/M": float(rl), "ok": dia}
    if not dia:
        fail("(⋄)", "L_n/M_n must decrease while L_n, M_n grow")
    # (*): dominance gap, decreasing in n
    dom = dominance_certificate(s, n, P)
    val = dom["exact"] if dom["exact"] is not None else dom["bound"]
    # level 1 is trivial (nothing precedes C_1), so decrease is judged from level 3 on
    if n >= 3:
        ok_star = dom["bound"] <= _prev_gap_bound(s, n - 1) and dom["bound"] < 1
    else:
        ok_star = val < 1
    if dom["exact"] is not None:
        ok_star = ok_star or (dom["exact"] == 0)
    dom["ok"] = ok_star
    out["(*)"] = dom
    if not ok_star:
        fail("(*)", "dominance gap does not decrease")
    if v == "countable":
        I, L_prev = p["I"], pp["L"]
        Ip = pp.get("I", 0)
        r = Fraction(L_prev, I)
        rp = Fraction(P[n - 2]["L"], Ip) if n >= 2 and Ip else None
        circ = I > Ip and (rp is None or r < rp)
        out["(∘)"] = {"I": I, "L_prev/I": float(r), "ok": circ}
        if not circ:
            fail("(∘)", "need I_n increasing and L_{n-1}/I_n decreasing")
        out["C_prime"] = countable_prime_counts(s, n, p, L_prev)
        out["C_second"] = countable_second_counts(s, n, p)
    if v == "uncountable":
        out["(△)"] = triangle_certificate(p, n)
        if not out["(△)"]["ok"]:
            fail("(△)", "no certified Diophantine witness below 1/n")
        cnt = triangle_count(p, pp["L"])
        tot = s.C[n].count
        tri = {"count": cnt, "total": tot, "threshold": qstr(1 - Fraction(1, n)),
               "ok": Fraction(cnt) > (1 - Fraction(1, n)) * tot}
        try:
            tri["enumerated"] = triangle_count_enumerated(s, n, p)
            tri["enumeration_agrees"] = tri["enumerated"] == cnt
            if not tri["enumeration_agrees"]:
                tri["ok"] = False
        except TooLarge:
            tri["enumerated"] = None
        out["(▲)"] = tri
        if not tri["ok"]:
            fail("(▲)", "good fraction does not exceed 1 - 1/n")
    return out


def countable_prime_counts(s, n, p, L_prev):
    """#C_n' from (6-1) and from the stated closed form, plus #C_n."""
    k, I = p["k"], p["I"]
    # (6-1) by membership: w = (j' k, 0, i k) qualifies iff j' = 0 and |i + j| <= I for all |j| < L_prev
    by_definition = max(0, 2 * (I - L_prev + 1) + 1)
    # the set displayed after (6-1): |i| < I and |i +- L_prev| < I
    stated = max(0, 2 * (I - L_prev) - 1)
    enum = None
    if I <= 5000 and L_prev <= 5000:
        enum = 0
        for i in range(-I, I + 1):
            w = (0, 0, i * k)
            if all(H3.mul((k, 0, j * k), w) in s.C[n] for j in range(-L_prev + 1, L_prev)):
                enum += 1
    tot = s.C[n].count
    return {"by_definition": by_definition, "enumerated": enum, "stated_form": stated,
            "total": tot, "ratio": float(Fraction(by_definition, tot))}


def countable_second_counts(s, n, p):
    k, I = p["k"], p["I"]
    cnt = 2 * (2 * I)
    return {"count": cnt, "total": s.C[n].count, "ratio": float(Fraction(cnt, s.C[n].count))}


def triangle_certificate(p, n, t_samples=None):
    """(△): sup over t of min over 1 != g in C_n^0 of dist(g, theta_t) < 1/n.

    For c(j k) a(i k) and theta_t the distance is k |t i - j| / max(1, |t|).  Dirichlet's
    theorem gives some 1 <= i <= l with |t i - j| <= 1/(l + 1), |j| <= l, for |t| <= 1
    (and symmetrically for |t| > 1), so (△) holds whenever k/(l + 1) < 1/n; theta_inf is
    hit exactly by c(k).
    """
    k, l = p["k"], p["l"]
    analytic = Fraction(k, l + 1) < Fraction(1, n)
    ts = t_samples if t_samples is not None else _log_t_grid()
    worst = Fraction(0)
    worst_t = None
    for t in ts:
        t = Fraction(t)
        if abs(t) <= 1:
            err, _, _ = min_fractional_distance(t, l)
            dist = k * err
        else:
            err, _, _ = min_fractional_distance(1 / t, l)
            dist = k * err
        if dist >= worst:
            worst, worst_t = dist, t
    return {"analytic": analytic, "k_over_l_plus_1": float(Fraction(k, l + 1)),
            "sample_worst": float(worst), "sample_worst_t": qstr(worst_t) if worst_t is not None else None,
            "samples": len(ts), "sample_ok": worst < Fraction(1, n),
            "net_verdict": "UNRESOLVED", "ok": analytic and worst < Fraction(1, n)}


def _log_t_grid():
    out = [Fraction(0)]
    for e in range(-6, 7):
        for m in (1, 2, 5):
            x = Fraction(m) * Fraction(10) ** e
            out += [x, -x]
    out += [Fraction(1, 3), Fraction(2, 7), Fraction(355, 113), Fraction(99, 70)]
    return out


def audit_h3(s, cfg=None):
    cfg = cfg or BuilderH3Config.from_json(s.provenance["config"])
    return [check_h3_conditions(s, cfg, n) for n in range(1, cfg.depth + 1)]


def config_from_json(kind, obj):
    if kind == "zd_42":
        return Builder42Config.from_json(obj)
    if kind == "zd_43":
        return Builder43Config.from_json(obj)
    if kind in ("h3", "h3_empty", "h3_countable", "h3_uncountable"):
        return BuilderH3Config.from_json(obj)
    raise ValueError(f"unknown builder {kind!r}")

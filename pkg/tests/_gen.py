"""Random small schedules for oracle tests."""
import random

from cfdirlab.cf import CFSchedule
from cfdirlab.groups import H3, Abelian
from cfdirlab.pointsets import Explicit, Grid


def random_schedule(G, depth, rng, csize=(2, 3), spread=1, plane=False, grid_c=False):
    """F levels are symmetric boxes, C levels are spread far enough for (III)."""
    d = G.dim
    F = [Explicit([G.identity])]
    C = []
    for n in range(1, depth + 1):
        prev = F[-1]
        w = max(hi - lo for lo, hi in prev.bbox()) + 1
        if G.kind == "H3":
            (x0, x1), (y0, y1), (z0, z1) = prev.bbox()
            step = 2 * max(abs(x0), abs(x1), abs(y0), abs(y1), abs(z0), abs(z1)) + 2
            step = step + 2 * step * step
        else:
            step = 2 * w
        k = rng.randint(*csize)
        if not grid_c:
            free = d - 1 if (G.kind == "H3" and plane) else d
            k = min(k, (2 * spread + 1) ** free)
        if grid_c:
            cnt = [1] * d
            ax = rng.randrange(d)
            if G.kind == "H3" and plane:
                ax = rng.choice([0, 2])
            cnt[ax] = k
            Cn = Grid(tuple(0 for _ in range(d)), (step,) * d, tuple(cnt))
        else:
            pts = {G.identity}
            while len(pts) < k:
                p = [step * rng.randint(-spread, spread) for _ in range(d)]
                if G.kind == "H3" and plane:
                    p[1] = 0
                pts.add(tuple(p))
            Cn = Explicit(pts)
        C.append(Cn)
        B = G.mul_box(prev.bbox(), Cn.bbox())
        r = max(max(abs(lo), abs(hi)) for lo, hi in B)
        F.append(Grid.box((-r,) * d, (r,) * d))
    return CFSchedule(G, F, C)


def random_base(s, n, rng, k=4):
    """A few points of F_n: some from the level-n orbit of the identity, some anywhere in the box."""
    G = s.G
    box = s.F[n].bbox()
    out = set()
    for _ in range(rng.randint(1, k)):
        if rng.random() < 0.5:
            x = G.identity
            for j in range(1, n + 1):
                x = G.mul(x, rng.choice(sorted(s.C[j])))
        else:
            x = tuple(rng.randint(lo, hi) for lo, hi in box)
        out.add(x)
    return Explicit(sorted(out))

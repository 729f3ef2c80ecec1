"""Recurrence in the Heisenberg group: which lines see returns.

The countable variant recurs along theta_l (integer l) and along the centre
theta_inf, and nowhere else.  Conjugating theta_0 by b(1/2) lands on
theta_{-1/2}, which has no witness, so recurrence is not even.
"""
from fractions import Fraction

from cfdirlab.analysis import even_recurrence_probe, scan_directions
from cfdirlab.builders import BuilderH3Config, build_h3
from cfdirlab.cf import cylinder
from cfdirlab.directions import kappa, theta, theta_family_net
from cfdirlab.groups import H3, b
from cfdirlab.pointsets import Explicit

n = 4
s = build_h3(BuilderH3Config("countable", n))
half = theta(Fraction(1, 2))
eps = min(kappa(half, theta(0)), kappa(half, theta(1))) / 2
c = cylinder(s, n - 1, Explicit([H3.identity]))

rep = scan_directions(s, theta_family_net([0, 1, -1, Fraction(1, 2), Fraction(1, 3)]), eps, depth=n, cyl=c)
for ev in rep.results:
    r = f"{float(ev.ratio):.4f}" if ev.verdict == "WITNESS" else "-"
    print(f"{ev.direction.label():<12} {ev.verdict:<11} ratio {r}")

probe = even_recurrence_probe(s, theta(0), [b(Fraction(1, 2))], eps, c, n)[0]
print("b(1/2) moves theta_0 to", probe["direction"].label(), "->", probe["evidence"].verdict)

"""Recurrence along every direction of the plane, at finite depth.

Builds the Z^2 schedule whose C_n are lattice grids, then scans a net of
directions at each level and prints the weakest witness found.
"""
from fractions import Fraction

from cfdirlab.analysis import scan_directions
from cfdirlab.builders import Builder43Config, build_zd_43
from cfdirlab.cf import cylinder, validate_schedule
from cfdirlab.directions import direction_net
from cfdirlab.pointsets import Explicit

cfg = Builder43Config(d=2, eps=[0.5, 0.3, 0.2], depth=3)
s = build_zd_43(cfg)
print("schedule valid:", validate_schedule(s).ok)
print("#C_n:", [c.count for c in s.C[1:]])

net = direction_net(s.G, 16)
for n in range(s.depth):
    rep = scan_directions(s, net, cfg.eps[n], depth=n + 1, cyl=cylinder(s, n, Explicit([(0, 0)])),
                          min_ratio=Fraction(1, 2))
    worst = min(rep.results, key=lambda ev: ev.ratio)
    print(f"level {n}: eps {cfg.eps[n]}  {rep.counts()}  weakest {worst.direction.label()} "
          f"gamma {worst.witness} ratio {worst.ratio}")

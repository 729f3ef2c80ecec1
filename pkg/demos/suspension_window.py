"""From lattice witnesses to the suspended R^2 flow.

A witness gamma close to the line through theta moves the window [1/2, 1/2+eps)^2
back onto itself; the transfer statistic measures how much of the torus
fibre survives the shift.
"""
import math

from cfdirlab.directions import project
from cfdirlab.suspension import cocycle, transfer_sequence, window_return_check

print("h((0.7, 0), (0.5, 0)) =", cocycle((0.7, 0), (0.5, 0)))
print("window hit for (2.05, -1.02):", window_return_check((2.05, -1.02), 0.1))
print("window hit for (1.3, 0):", window_return_check((1.3, 0), 0.2))

# convergents of sqrt(2) - 1 approach the line of slope sqrt(2) - 1
th = project((1, math.sqrt(2) - 1))
ws = [(1, 0), (2, 1), (5, 2), (12, 5), (29, 12), (70, 29), (169, 70)]
for w, stat in zip(ws, transfer_sequence(ws, th)):
    print(f"gamma {w!s:<10} statistic {stat:.6f}")

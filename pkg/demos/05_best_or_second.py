"""
Winning with the best or second best
====================================

Two thresholds: after r take a candidate better than everyone so far,
after s also take one that is second best so far.
"""

import numpy as np

from stoprule import multithreshold as mt

for n in (10, 100, 1000, 10**4, 10**6):
    res = mt.solve_two_threshold(n)
    print(f"n={n:>7}  r={res.r:>7}  s={res.s:>7}  success {res.payoff:.8f}")

r, s, p = mt.two_threshold_asymptotics()
print(f"limits    r/n -> {r:.14f}  s/n -> {s:.6f}  success -> {p:.14f}")

# the exhaustive check over all 8! orders and all (r, s)
print("gap to the best (r, s) over all orders, n=8:", mt.verify_two_threshold_optimality(8))

x = np.linspace(0, 1, 7)
print(np.round(mt.two_threshold_f(x), 6))

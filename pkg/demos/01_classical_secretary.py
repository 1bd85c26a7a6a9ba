"""
The classical secretary problem, three ways
===========================================

Reject the first k candidates, then take the first one better than all
before.  The backward recurrence gives the value of every threshold at
once; exact enumeration and simulation check it.
"""

import math

import numpy as np

from stoprule import core, oracle, variants

# value of each threshold at n = 8, from the recurrence and from all 8! orders
n = 8
spec, payoff, _ = variants.make_variant("classical", n)
table = core.solve_backward(spec)
exact = oracle.enumerate_table("classical", n)
print("k   recurrence   enumeration")
for k in range(n + 1):
    print(f"{k}   {table[k]:.10f}   {exact[k]:.10f}")

res = core.optimal_threshold(table, payoff)
print(f"\nbest threshold {res.kappa} ({res.certified_by.value}), success {res.payoff:.6f}")

# as n grows kappa/n and the success probability both approach 1/e
print("\n       n    kappa/n     payoff")
for n in (10, 100, 10**4, 10**6, 10**7):
    sol = variants.solve_variant("classical", n)
    print(f"{n:>8}   {sol.kappa_over_n:.7f}   {sol.payoff:.7f}")
print(f"   limit   {math.exp(-1):.7f}   {math.exp(-1):.7f}")

# a million simulated interviews at n = 100
sol = variants.solve_variant("classical", 100)
rep = oracle.simulate("classical", 100, sol.kappa, 10**6, seed=12345)
print(f"\nsimulated {rep.estimate:.5f} +/- {rep.std_error:.5f}  vs  exact {sol.payoff:.5f}")

"""
Limits from an ODE
==================

Rescaled, the recurrence F(k) = G(k) + H(k) F(k+1) turns into
y' = y h - g with y(1) = mu.  Integrating that numerically gives theta
without knowing the closed form; here both routes are compared.
"""

import numpy as np

from stoprule import asymptotics, variants

print(f"{'variant':>14}  {'theta (closed)':>16}  {'theta (ode)':>16}  {'payoff (closed)':>16}")
for vid in variants.VARIANT_IDS:
    a = variants.asymptotic_limits(vid)
    b = variants.asymptotic_limits(vid, method="ode")
    print(f"{vid:>14}  {a.theta:16.12f}  {b.theta:16.12f}  {a.limit_payoff:16.12f}")

# how fast F_n(floor(nx)) settles onto the limit curve
f = lambda x: variants.closed_form_f("duration", None, x)
for n in (10**2, 10**3, 10**4, 10**5):
    table = variants.solve_variant("duration", n, materialize=True).table
    print(n, asymptotics.measure_gap(table, f).sup_gap)

# a sampled solution can be queried like a function
sol = asymptotics.integrate_ode(variants.ode_problem("duration"))
x = np.array([0.1, 0.2031878699799799, 0.5])
print(sol(x), f(x))

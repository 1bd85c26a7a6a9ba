"""
Ten million candidates
======================

Four games whose optimal threshold is not a simple fraction of n.  The
backward pass streams in chunks, so n = 10^7 needs a few megabytes and
well under a second per game.
"""

import time

from stoprule import variants

games = [
    ("lottery", {}),          # payoff Y(x) = x when a white ball is drawn
    ("wildcard", {}),         # a wildcard worth 1/2 hides among the candidates
    ("interruption", {}),     # the process may be cut off at any step
    ("penalty", {"b": 2}),    # picking the second best costs b
]

for vid, params in games:
    t = time.perf_counter()
    sol = variants.solve_variant(vid, 10**7, params)
    lim = variants.asymptotic_limits(vid, params)
    dt = time.perf_counter() - t
    print(f"{vid:>13}: kappa={sol.kappa}  P={sol.payoff:.12f}  "
          f"(limits {lim.theta:.9f}, {lim.limit_payoff:.9f})  {dt:.2f}s")

"""Two-threshold game: success if the chosen candidate is best or second best.

The optimal strategy rejects the first ``r`` candidates, accepts a
relatively best candidate at steps ``r+1..s`` and a relatively best or
second-best one after ``s``.  With

    S(k)    = C(k,2)/C(n,2)            payoff of taking a relative second at k
    M(k)    = (k^2 - 2kn + k)/(n - n^2) payoff of taking a relative best at k
    Fbar(k) = 2k(n-k)/((n-1)n)          value of waiting for a top-two candidate

``s`` is the last ``k`` with ``S(k) < Fbar(k)``, and the first threshold
comes from the backward pass

    F(k) = 2/n + (k-1)/(k+1) F(k+1)          s <= k < n  (top-two regime)
    F(k) = M(k+1)/(k+1) + k/(k+1) F(k+1)     k < s       (best-only regime)

with ``F(n) = 0``; ``r`` is its argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import _backward_kernel
from .errors import DiagnosticError, StructureError, ValidationError
from .specialfn import lambert_w

__all__ = [
    "TwoThresholdResult",
    "second_payoff",
    "best_payoff",
    "wait_value",
    "solve_two_threshold",
    "two_threshold_dp",
    "max_form_value",
    "two_threshold_asymptotics",
    "two_threshold_f",
    "verify_two_threshold_optimality",
]

EXACT_MAX_N = 9


@dataclass(frozen=True)
class TwoThresholdResult:
    n: int
    r: int
    s: int
    payoff: float
    value_table: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.value_table, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "value_table", v)


def second_payoff(n, k):
    k = np.asarray(k, dtype=float)
    return (k * k - k) / (n * n - n)


def best_payoff(n, k):
    k = np.asarray(k, dtype=float)
    return (k * k - 2.0 * k * n + k) / (n - n * n)


def wait_value(n, k):
    k = np.asarray(k, dtype=float)
    return -2.0 * k * (k - n) / ((n - 1.0) * n)


def _second_threshold(n: int) -> int:
    k = np.arange(1, n + 1)
    above = np.nonzero(second_payoff(n, k) < wait_value(n, k))[0]
    if above.size == 0:
        raise StructureError(f"no crossing of S and Fbar at n={n}")
    return int(k[above[-1]])


def two_threshold_dp(n: int, s: int) -> np.ndarray:
    """``F(0..n)`` for a fixed second threshold ``s``."""
    k = np.arange(n, dtype=float)
    tail = k >= s
    G = np.where(tail, 2.0 / n, best_payoff(n, k + 1.0) / (k + 1.0))
    H = np.where(tail, (k - 1.0) / (k + 1.0), k / (k + 1.0))
    out = np.empty(n + 1)
    out[n] = 0.0
    _backward_kernel(G, H, 0.0, out[:n])
    return out


def solve_two_threshold(n: int) -> TwoThresholdResult:
    if int(n) != n or n < 5:
        raise ValidationError(f"two-threshold game needs integer n >= 5, got {n!r}")
    n = int(n)
    s = _second_threshold(n)
    F = two_threshold_dp(n, s)
    r = int(np.argmax(F))
    if r > s:
        raise StructureError(f"first threshold {r} exceeds second threshold {s}")
    return TwoThresholdResult(n, r, s, float(F[r]), F)


def max_form_value(n: int) -> float:
    """Optimal value over all stopping rules that see relative ranks 1 and 2."""
    e = 0.0
    for k in range(n - 1, -1, -1):
        j = k + 1
        take_best = max(float(best_payoff(n, j)), e)
        take_second = max(float(second_payoff(n, j)), e)
        e = take_best / j + take_second / j + (j - 2.0) / j * e
    return e


def two_threshold_asymptotics():
    """``(lim r_n/n, lim s_n/n, lim payoff)``."""
    r = -lambert_w("principal", -2.0 / (3.0 * math.e))
    return r, 2.0 / 3.0, r * (2.0 - r)


def two_threshold_f(x, branch=None):
    """Piecewise limit of ``F_n(floor(nx))``.

    ``branch`` may force ``"lower"`` (``x^2 - 2x log x - 2x log(3/2)``) or
    ``"upper"`` (``2x - 2x^2``); both equal 4/9 at ``x = 2/3``.
    """
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    lower = np.where(x > 0, safe * safe - 2.0 * safe * np.log(safe) - 2.0 * safe * math.log(1.5), 0.0)
    upper = 2.0 * x - 2.0 * x * x
    if branch == "lower":
        out = lower
    elif branch == "upper":
        out = upper
    else:
        out = np.where(x <= 2.0 / 3.0, lower, upper)
    return float(out) if out.ndim == 0 else out


def verify_two_threshold_optimality(n: int) -> float:
    """Check the computed (r, s) against an independent optimum.

    For ``n <= 9`` all orders and all pairs ``0 <= r <= s <= n`` are
    enumerated; for larger ``n`` the unrestricted optimal-stopping DP is
    used.  Returns the absolute difference between the computed payoff and
    the independent optimum.
    """
    res = solve_two_threshold(n)
    if n <= EXACT_MAX_N:
        from .oracle import enumerate_two_threshold_table

        table = enumerate_two_threshold_table(n)
        best = float(table.max())
        mine = float(table[res.r, res.s])
        if abs(best - mine) > 1e-12 or abs(mine - res.payoff) > 1e-12:
            rr, ss = np.unravel_index(int(np.argmax(table)), table.shape)
            raise DiagnosticError(
                f"n={n}: DP strategy (r={res.r}, s={res.s}) scores {mine!r} "
                f"(DP value {res.payoff!r}) but (r={rr}, s={ss}) scores {best!r}"
            )
        return abs(best - res.payoff)
    e0 = max_form_value(n)
    gap = abs(e0 - res.payoff)
    if gap > 1e-10:
        raise DiagnosticError(f"n={n}: optimal DP value {e0!r} but two-threshold payoff {res.payoff!r}")
    return gap

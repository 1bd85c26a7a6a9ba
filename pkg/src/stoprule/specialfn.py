"""Real special functions used by the closed-form asymptotics.

All three functions accept a float or a numpy array and return the same
kind.  Accuracy targets (float64):

* ``lambert_w``  -- ``w * exp(w) == x`` to ~1e-15 relative
* ``digamma``    -- 1e-12 absolute for ``x >= 1``, relative below
* ``expint_ei``  -- 1e-12 relative on ``[-40, 700]``
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError

__all__ = ["BranchId", "lambert_w", "digamma", "expint_ei", "EULER_GAMMA"]

EULER_GAMMA = 0.57721566490153286061
_INV_E = math.exp(-1.0)
_BRANCH_TOL = 1e-14


class BranchId(str, enum.Enum):
    PRINCIPAL = "principal"
    MINUS_ONE = "minus-one"

    @classmethod
    def coerce(cls, branch) -> "BranchId":
        if isinstance(branch, cls):
            return branch
        if branch in (0, "0", "principal", "w0"):
            return cls.PRINCIPAL
        if branch in (-1, "-1", "minus-one", "w-1"):
            return cls.MINUS_ONE
        raise DomainError(f"unknown Lambert W branch {branch!r}")


def _halley(x: float, w: float) -> float:
    for _ in range(50):
        ew = math.exp(w)
        r = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = r / (ew * wp1 - (w + 2.0) * r / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 1e-15 * (1.0 + abs(w)):
            break
    return w


def _lambert_w_scalar(branch: BranchId, x: float) -> float:
    if not math.isfinite(x):
        raise DomainError(f"Lambert W ({branch.value}) undefined at x={x!r}")
    if x < -_INV_E - _BRANCH_TOL:
        raise DomainError(f"Lambert W ({branch.value}) undefined at x={x!r} < -1/e")
    if branch is BranchId.MINUS_ONE and x >= 0.0:
        raise DomainError(f"Lambert W (minus-one) defined on [-1/e, 0), got x={x!r}")
    if x <= -_INV_E:
        return -1.0
    if x == 0.0:
        return 0.0

    near = x < -0.25
    if near:
        p = math.sqrt(2.0 * math.e * (x + _INV_E))
        if branch is BranchId.MINUS_ONE:
            p = -p
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif branch is BranchId.MINUS_ONE:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    elif x < 3.0:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    return _halley(x, w)


def lambert_w(branch, x):
    """Real Lambert W on the given branch (``"principal"`` or ``"minus-one"``).

    Initial guesses come from the branch-point series near ``-1/e`` and the
    ``log x - log log x`` asymptotics elsewhere, then Halley iteration.

    Raises
    ------
    DomainError
        If ``x < -1/e`` (beyond a 1e-14 tolerance), or ``x >= 0`` on the
        minus-one branch.
    """
    b = BranchId.coerce(branch)
    if np.ndim(x) == 0:
        return _lambert_w_scalar(b, float(x))
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    for idx, v in np.ndenumerate(arr):
        out[idx] = _lambert_w_scalar(b, float(v))
    return out


# Bernoulli-number coefficients B_{2k} / (2k) for the digamma tail.
_PSI_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x):
    """psi(x) for x > 0: upward recurrence to x >= 8, then asymptotic series."""
    scalar = np.ndim(x) == 0
    arr = np.array(x, dtype=float, ndmin=1)
    if not np.all(arr > 0) or not np.all(np.isfinite(arr)):
        bad = arr[~((arr > 0) & np.isfinite(arr))][0]
        raise DomainError(f"digamma requires x > 0, got x={bad!r}")
    shift = np.zeros_like(arr)
    z = arr.copy()
    while True:
        low = z < 8.0
        if not low.any():
            break
        shift[low] += 1.0 / z[low]
        z[low] += 1.0
    inv2 = 1.0 / (z * z)
    tail = np.zeros_like(z)
    for c in reversed(_PSI_COEFFS):
        tail = (tail + c) * inv2
    out = np.log(z) - 0.5 / z - tail - shift
    return float(out[0]) if scalar else out.reshape(np.shape(x))


def _ei_series(x):
    # gamma + log|x| + sum x^k / (k k!)
    term = x.copy()
    total = x.copy()
    k = 1
    while True:
        k += 1
        term = term * x / k
        inc = term / k
        total = total + inc
        if np.all(np.abs(inc) <= 1e-17 * np.abs(total)) or k > 200:
            break
    return EULER_GAMMA + np.log(np.abs(x)) + total


def _e1_continued_fraction(t):
    # E1(t) for t > 1, modified Lentz on the even contraction.
    tiny = 1e-300
    b = t + 1.0
    c = np.full_like(t, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 500):
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= 1e-16):
            break
    return h * np.exp(-t)


def _ei_asymptotic(x):
    # e^x / x * sum k! / x^k, truncated at the smallest term.
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 60):
        nxt = term * k / x
        if np.all(np.abs(nxt) >= np.abs(term)):
            break
        use = np.abs(nxt) < np.abs(term)
        term = np.where(use, nxt, 0.0)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * total):
            break
    return np.exp(x) / x * total


def expint_ei(x):
    """Exponential integral Ei(x), principal value, for real x != 0.

    Negative x in [-1, 0) and positive x up to 40 use the power series;
    x < -1 uses the continued fraction for E1(-x) = -Ei(x); x > 40 uses the
    divergent asymptotic series.
    """
    scalar = np.ndim(x) == 0
    arr = np.array(x, dtype=float, ndmin=1)
    if np.any(arr == 0.0) or np.any(np.isnan(arr)):
        raise DomainError("Ei has a logarithmic singularity at x=0")
    out = np.empty_like(arr)
    cf = arr < -1.0
    ser = (arr >= -1.0) & (arr <= 40.0)
    asy = arr > 40.0
    if cf.any():
        t = -arr[cf]
        vals = np.zeros_like(t)
        finite = t < 740.0
        vals[finite] = -_e1_continued_fraction(t[finite])
        out[cf] = vals
    if ser.any():
        out[ser] = _ei_series(arr[ser])
    if asy.any():
        out[asy] = _ei_asymptotic(arr[asy])
    return float(out[0]) if scalar else out.reshape(np.shape(x))

"""Backward induction for threshold recurrences.

A threshold problem of horizon ``n`` is described by a linear recurrence

    F(k) = G(k) + H(k) * F(k + 1),   F(n) = mu,   k = n-1, ..., 0

where ``F(k)`` is the expected payoff of rejecting the first ``k``
observations and then stopping at the first success.  The optimal-value
dynamic program over the same Bernoulli observation model is

    E(k) = p(k+1) * max(P(k+1), E(k+1)) + (1 - p(k+1)) * E(k+1),   E(n) = mu.

``G``, ``H``, ``p`` and the stop payoff ``P`` are callables evaluated on
integer numpy arrays.  Scalar-returning callables are broadcast.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np

from .errors import DiagnosticError, NonFiniteError, ValidationError

__all__ = [
    "RecurrenceSpec",
    "PayoffModel",
    "ValueTable",
    "Certification",
    "ThresholdResult",
    "ThresholdWarning",
    "solve_backward",
    "optimal_threshold",
    "streaming_threshold",
    "solve_optimal",
    "verify_threshold_optimality",
    "evaluate",
]

DEFAULT_CHUNK = 1 << 20


def evaluate(fn: Callable, k: np.ndarray) -> np.ndarray:
    """Evaluate ``fn`` on the integer array ``k`` as a float64 array."""
    try:
        out = fn(k)
    except (TypeError, ValueError):
        out = np.vectorize(fn, otypes=[float])(k)
    out = np.asarray(out, dtype=float)
    if out.shape != k.shape:
        out = np.broadcast_to(out, k.shape).copy()
    return out


@dataclass(frozen=True)
class RecurrenceSpec:
    """Finite-horizon recurrence ``F(k) = G(k) + H(k) F(k+1)``, ``F(n) = mu``.

    ``g_limit``/``h_limit`` are the pointwise limits of ``n G(floor(nx))``
    and ``n (1 - H(floor(nx)))``.  ``H_complement`` optionally returns
    ``1 - H(k)`` without cancellation; it is only used for diagnostics.
    """

    n: int
    mu: float
    G: Callable
    H: Callable
    g_limit: Optional[Callable] = None
    h_limit: Optional[Callable] = None
    H_complement: Optional[Callable] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"horizon n must be an integer >= 2, got {self.n!r}")
        if not math.isfinite(self.mu):
            raise ValidationError(f"terminal value mu must be finite, got {self.mu!r}")

    def coefficients(self, lo: int = 0, hi: Optional[int] = None):
        """``(k, G(k), H(k))`` on ``lo <= k < hi`` (default ``[0, n)``)."""
        hi = self.n if hi is None else hi
        k = np.arange(lo, hi, dtype=np.int64)
        return k, evaluate(self.G, k), evaluate(self.H, k)

    def one_minus_H(self, k: np.ndarray) -> np.ndarray:
        if self.H_complement is not None:
            return evaluate(self.H_complement, k)
        return 1.0 - evaluate(self.H, k)


@dataclass(frozen=True)
class PayoffModel:
    """Bernoulli observation model for steps ``k = 1..n``.

    ``p(k)`` is the success probability of observation ``k`` and
    ``stop_payoff(k)`` the payoff of stopping on a success at step ``k``.
    """

    n: int
    p: Callable
    stop_payoff: Callable

    def arrays(self):
        k = np.arange(1, self.n + 1, dtype=np.int64)
        p = evaluate(self.p, k)
        if np.any(p < 0) or np.any(p > 1):
            bad = int(k[(p < 0) | (p > 1)][0])
            raise ValidationError(f"p({bad}) outside [0, 1]")
        return k, p, evaluate(self.stop_payoff, k)


@dataclass(frozen=True)
class ValueTable:
    """Immutable table ``values[k] = F_n(k)`` for ``k = 0..n``."""

    n: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.n + 1,):
            raise ValidationError(f"table for n={self.n} needs {self.n + 1} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self):
        return self.n + 1


class Certification(str, enum.Enum):
    ARGMAX = "argmax"
    CROSSING = "continuation-crossing"
    BOTH = "both-agree"


class ThresholdWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ThresholdResult:
    kappa: int
    payoff: float
    certified_by: Certification
    argmax: int
    crossing: Optional[int]
    warning: Optional[str] = None


@numba.njit(nogil=True, cache=True)
def _backward_kernel(G, H, carry, out):
    f = carry
    for i in range(G.shape[0] - 1, -1, -1):
        f = G[i] + H[i] * f
        out[i] = f
    return f


def _check_finite(k0: int, values: np.ndarray):
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.nonzero(bad)[0][-1])
        raise NonFiniteError(k0 + i, float(values[i]))


def solve_backward(spec: RecurrenceSpec) -> ValueTable:
    """One O(n) backward pass; ``values[n] = mu`` exactly."""
    _, G, H = spec.coefficients()
    values = np.empty(spec.n + 1)
    values[spec.n] = spec.mu
    _backward_kernel(G, H, float(spec.mu), values[: spec.n])
    _check_finite(0, values)
    return ValueTable(spec.n, values)


def _certify(argmax: int, crossing: Optional[int], values_at) -> ThresholdResult:
    if crossing is None:
        msg = "no continuation crossing: stopping at the first success is optimal"
        warnings.warn(msg, ThresholdWarning, stacklevel=3)
        return ThresholdResult(0, float(values_at(0)), Certification.ARGMAX, argmax, None, msg)
    if crossing == argmax:
        return ThresholdResult(crossing, float(values_at(crossing)), Certification.BOTH, argmax, crossing)
    if abs(crossing - argmax) == 1:
        return ThresholdResult(crossing, float(values_at(crossing)), Certification.CROSSING, argmax, crossing)
    raise DiagnosticError(
        f"crossing threshold {crossing} and argmax {argmax} disagree: not a threshold structure"
    )


def optimal_threshold(table: ValueTable, payoff: PayoffModel) -> ThresholdResult:
    """Extract kappa_n from a value table.

    The crossing rule takes the largest ``k >= 1`` with
    ``F(k) > stop_payoff(k)``; by construction every later index prefers
    stopping.  The argmax is computed independently (ties to the smallest
    ``k``) and the two are cross-checked.
    """
    if payoff.n != table.n:
        raise ValidationError(f"table has n={table.n} but payoff model has n={payoff.n}")
    _, _, stop = payoff.arrays()
    values = table.values
    above = np.nonzero(values[1:] > stop)[0]
    crossing = int(above[-1]) + 1 if above.size else None
    argmax = int(np.argmax(values))
    return _certify(argmax, crossing, lambda k: values[k])


def streaming_threshold(
    spec: RecurrenceSpec,
    payoff: PayoffModel,
    combiner: Optional[Callable] = None,
    chunk: int = DEFAULT_CHUNK,
) -> ThresholdResult:
    """Same result as ``optimal_threshold`` without materialising the table.

    The backward pass runs in chunks of ``chunk`` indices; ``combiner``
    (``(n, k, F) -> composite``, vectorised) is applied per chunk.  Memory is
    O(chunk).
    """
    n = spec.n
    if payoff.n != n:
        raise ValidationError(f"spec has n={n} but payoff model has n={payoff.n}")

    def composite(k, F):
        return F if combiner is None else np.asarray(combiner(n, k, F), dtype=float)

    k_top = np.array([n], dtype=np.int64)
    top = composite(k_top, np.array([float(spec.mu)]))
    best_val, best_k = float(top[0]), n
    crossing = None
    if top[0] > evaluate(payoff.stop_payoff, k_top)[0]:
        crossing = n
    kept = {n: best_val}

    carry = float(spec.mu)
    hi = n
    while hi > 0:
        lo = max(0, hi - chunk)
        k, G, H = spec.coefficients(lo, hi)
        F = np.empty(hi - lo)
        carry = _backward_kernel(G, H, carry, F)
        _check_finite(lo, F)
        C = composite(k, F)
        _check_finite(lo, C)
        if crossing is None:
            pos = k >= 1
            if pos.any():
                stop = evaluate(payoff.stop_payoff, k[pos])
                above = np.nonzero(C[pos] > stop)[0]
                if above.size:
                    crossing = int(k[pos][above[-1]])
                    kept[crossing] = float(C[crossing - lo])
        i = int(np.argmax(C))
        if C[i] >= best_val:
            best_val, best_k = float(C[i]), int(lo + i)
            kept[best_k] = best_val
        if lo == 0:
            kept[0] = float(C[0])
        hi = lo
    return _certify(best_k, crossing, lambda kk: kept[kk])


@numba.njit(nogil=True, cache=True)
def _optimal_kernel(p, stop, mu):
    e = mu
    for i in range(p.shape[0] - 1, -1, -1):
        s = stop[i]
        m = s if s > e else e
        e = p[i] * m + (1.0 - p[i]) * e
    return e


def solve_optimal(payoff: PayoffModel, mu: float) -> float:
    """E(0) of the optimal-stopping DP (failures cannot be stopped on)."""
    _, p, stop = payoff.arrays()
    e = float(_optimal_kernel(p, stop, float(mu)))
    if math.isfinite(e):
        return e
    # locate the first offending step
    e = float(mu)
    for i in range(payoff.n - 1, -1, -1):
        e = p[i] * max(stop[i], e) + (1.0 - p[i]) * e
        if not math.isfinite(e):
            raise NonFiniteError(i, e)
    raise NonFiniteError(0, e)


def verify_threshold_optimality(
    payoff: PayoffModel,
    spec: RecurrenceSpec,
    combiner: Optional[Callable] = None,
    mu: Optional[float] = None,
) -> float:
    """``|E(0) - max_k composite(k)|``; small values certify threshold optimality.

    ``mu`` is the terminal value of the optimal DP (defaults to ``spec.mu``);
    it differs from ``spec.mu`` only when ``combiner`` rescales the table.
    """
    e0 = solve_optimal(payoff, spec.mu if mu is None else mu)
    values = solve_backward(spec).values
    if combiner is not None:
        k = np.arange(spec.n + 1, dtype=np.int64)
        values = np.asarray(combiner(spec.n, k, values), dtype=float)
    return abs(e0 - float(values.max()))

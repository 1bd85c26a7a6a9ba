"""ODE limits of threshold recurrences and the diagnostics around them.

If ``n G(floor(nx)) -> g(x)`` and ``n (1 - H(floor(nx))) -> h(x)``, the
rescaled value ``F_n(floor(nx))`` tends to the solution of

    y'(x) = y(x) h(x) - g(x),    y(1) = mu.

This module integrates that IVP numerically, measures how far a finite-n
table is from a candidate limit, checks the sufficient conditions for
uniform convergence on concrete recurrences, and locates argmax/crossing
points of limit functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numba
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .core import RecurrenceSpec, ValueTable, evaluate, solve_backward
from .errors import IntegrationError, StructureError, ValidationError

__all__ = [
    "OdeProblem",
    "SampledFunction",
    "HypothesisReport",
    "GapReport",
    "ConjectureRun",
    "ConjectureResult",
    "integrate_ode",
    "check_hypotheses",
    "residuals",
    "measure_gap",
    "find_argmax",
    "find_crossing",
    "conjecture_spec",
    "conjecture_reference",
    "run_conjecture_experiment",
]

DELTA = 1e-4
SINGULAR_OFFSET = 1e-6
INTERIOR_EPS = 0.05
_STEP_CAP = 0.1  # substep so that |h| * dx <= _STEP_CAP


@dataclass(frozen=True)
class OdeProblem:
    h: Callable
    g: Callable
    terminal: float
    singular_at_one: bool = False


class SampledFunction:
    """Samples ``y(x)`` on an increasing grid with cubic-spline queries."""

    def __init__(self, x, y):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if self.x.shape != self.y.shape or self.x.size < 4:
            raise ValidationError("sampled function needs matching x/y arrays of length >= 4")
        self._spline = CubicSpline(self.x, self.y)

    def __call__(self, t):
        out = self._spline(np.asarray(t, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    @property
    def domain(self):
        return float(self.x[0]), float(self.x[-1])

    def derivative(self, t):
        return self._spline(np.asarray(t, dtype=float), 1)


@numba.njit(cache=True)
def _rk4_kernel(xs, h0, hm, h1, g0, gm, g1, y0):
    # xs descending; three evaluations per step (start, mid, end)
    n = xs.shape[0] - 1
    ys = np.empty(n + 1)
    ys[0] = y0
    y = y0
    for i in range(n):
        dx = xs[i + 1] - xs[i]
        k1 = y * h0[i] - g0[i]
        k2 = (y + 0.5 * dx * k1) * hm[i] - gm[i]
        k3 = (y + 0.5 * dx * k2) * hm[i] - gm[i]
        k4 = (y + dx * k3) * h1[i] - g1[i]
        y = y + dx * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        ys[i + 1] = y
        if not np.isfinite(y):
            return ys, i + 1
    return ys, -1


def integrate_ode(prob: OdeProblem, grid_points: int = 4001, delta: float = DELTA) -> SampledFunction:
    """Classical RK4 for ``y' = y h - g`` backward from ``x = 1`` to ``delta``.

    The output grid is uniform on ``[delta, 1]``; each interval is subdivided
    so that ``|h| dx`` stays below 0.1.  For problems singular at 1 the first
    interval starts at ``1 - 1e-6`` with the terminal value taken as the
    continuous extension there.
    """
    if grid_points < 100:
        raise ValidationError(f"grid_points must be >= 100, got {grid_points}")
    grid = np.linspace(delta, 1.0, int(grid_points))[::-1]
    starts = grid[:-1].copy()
    if prob.singular_at_one:
        starts[0] = 1.0 - SINGULAR_OFFSET
    ends = grid[1:]

    def fh(x):
        return evaluate(prob.h, x) if callable(prob.h) else np.full(x.shape, float(prob.h))

    def fg(x):
        return evaluate(prob.g, x) if callable(prob.g) else np.full(x.shape, float(prob.g))

    hmax = np.maximum(np.abs(fh(starts)), np.abs(fh(ends)))
    if not np.all(np.isfinite(hmax)):
        bad = int(np.nonzero(~np.isfinite(hmax))[0][0])
        raise IntegrationError(starts[bad], f"h is not finite near x={starts[bad]!r}")
    nsub = np.maximum(1, np.ceil(np.abs(starts - ends) * hmax / _STEP_CAP)).astype(np.int64)

    # full substep node list, descending
    pieces = [np.linspace(a, b, m + 1)[:-1] for a, b, m in zip(starts, ends, nsub)]
    nodes = np.concatenate(pieces + [grid[-1:]])
    marks = np.concatenate([[0], np.cumsum(nsub)])  # index of each grid point in nodes
    a, c = nodes[:-1], nodes[1:]
    mid = 0.5 * (a + c)
    ys, bad = _rk4_kernel(nodes, fh(a), fh(mid), fh(c), fg(a), fg(mid), fg(c), float(prob.terminal))
    if bad >= 0:
        raise IntegrationError(nodes[bad])
    y_grid = ys[marks]
    return SampledFunction(grid[::-1], y_grid[::-1])


# --------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class HypothesisReport:
    n: int
    max_abs_H: float
    terminal_drift: float
    v_sum: float
    m_sum: float
    boundary_drift: float


def _fd_second(f: Callable, x: np.ndarray) -> np.ndarray:
    e = np.minimum(1e-4, np.minimum(x, 1.0 - x) / 2.0)
    e = np.where(e > 0, e, 1e-4)
    return (evaluate_real(f, x + e) - 2.0 * evaluate_real(f, x) + evaluate_real(f, x - e)) / (e * e)


def evaluate_real(f: Callable, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(f(x), dtype=float)
    except (TypeError, ValueError):
        out = np.vectorize(f, otypes=[float])(x)
    return np.broadcast_to(out, x.shape).astype(float)


def _residuals(spec, f, k, G, one_minus_H):
    n = spec.n
    kk = k[1 : n - 1]
    x = (kk + 1.0) / n
    V = (n * G[1 : n - 1] - evaluate(spec.g_limit, x)) - evaluate_real(f, x) * (
        n * one_minus_H[1 : n - 1] - evaluate(spec.h_limit, x)
    )
    return kk, V


def residuals(spec: RecurrenceSpec, f: Callable):
    """Local defects ``V_n(k)`` for ``k = 1..n-2``, returned as ``(k, V)``.

    ``V_n(k) = (n G(k) - g(x)) - f(x) (n (1 - H(k)) - h(x))`` at
    ``x = (k + 1)/n``.
    """
    if spec.g_limit is None or spec.h_limit is None:
        raise ValidationError("residuals need g_limit and h_limit on the spec")
    k, G, _ = spec.coefficients()
    return _residuals(spec, f, k, G, spec.one_minus_H(k))


def _report(spec: RecurrenceSpec, f: Callable, f_second: Optional[Callable]) -> HypothesisReport:
    if spec.g_limit is None or spec.h_limit is None:
        raise ValidationError("hypothesis checks need g_limit and h_limit on the spec")
    n = spec.n
    k, G, H = spec.coefficients()
    one_minus_H = spec.one_minus_H(k)
    max_abs_H = float(np.max(np.abs(H)))
    terminal = abs(G[n - 1] + spec.mu * H[n - 1] - spec.mu)
    f0 = float(evaluate_real(f, np.array([0.0]))[0])
    boundary = abs(G[0] + f0 * H[0] - f0)

    kk, V = _residuals(spec, f, k, G, one_minus_H)
    v_sum = float(np.sum(np.abs(V)) / n)

    # M_n(k): max |f''| on [k/n, (k+1)/n] from five samples
    t = np.linspace(0.0, 1.0, 5)
    pts = (kk[:, None] + t[None, :]) / n
    second = evaluate_real(f_second, pts) if f_second is not None else _fd_second(f, pts)
    M = np.max(np.abs(second), axis=1)
    m_sum = float(np.sum(M) / (n * n))
    return HypothesisReport(n, max_abs_H, float(terminal), v_sum, m_sum, float(boundary))


def check_hypotheses(spec_factory, f: Callable, n_list: Optional[Sequence[int]] = None,
                     f_second: Optional[Callable] = None) -> list:
    """Evaluate the uniform-convergence conditions for each ``n``.

    ``spec_factory`` maps ``n`` to a :class:`RecurrenceSpec` (a single spec
    is accepted and used for its own ``n``).  ``f_second`` is an analytic
    ``f''``; without it a central finite difference is used.
    """
    if isinstance(spec_factory, RecurrenceSpec):
        spec = spec_factory
        if n_list is not None and list(n_list) != [spec.n]:
            raise ValidationError("a fixed spec can only be checked at its own n")
        return [_report(spec, f, f_second)]
    if not n_list:
        raise ValidationError("n_list must be non-empty")
    return [_report(spec_factory(int(n)), f, f_second) for n in n_list]


# --------------------------------------------------------------------------
# uniform gap


@dataclass(frozen=True)
class GapReport:
    n: int
    sup_gap: float
    interior_gap: float
    argmax_gap: float  # x = k/n where the sup is attained


def measure_gap(table: ValueTable, f: Callable, eps: float = INTERIOR_EPS) -> GapReport:
    """``max_k |F_n(k) - f(k/n)|`` over all k and over ``k/n`` in ``[eps, 1-eps]``."""
    n = table.n
    x = np.arange(n + 1) / n
    ref = evaluate_real(f, x)
    if not np.all(np.isfinite(ref)):
        bad = float(x[~np.isfinite(ref)][0])
        raise ValidationError(f"reference function is not finite at x={bad!r}")
    diff = np.abs(table.values - ref)
    inner = (x >= eps) & (x <= 1.0 - eps)
    i = int(np.argmax(diff))
    return GapReport(n, float(diff[i]), float(diff[inner].max()) if inner.any() else 0.0, float(x[i]))


# --------------------------------------------------------------------------
# argmax and crossing


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(fn, a, b, tol):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def find_argmax(f, a: Optional[float] = None, b: Optional[float] = None,
                grid: int = 10001, tol: float = 1e-10) -> float:
    """Global maximiser of ``f`` on ``[a, b]``.

    A grid scan picks the bracket; golden-section search narrows it to
    ``tol``.  The final position is polished on a zero of the derivative
    (exact spline derivative for sampled functions, a central difference
    otherwise), where golden section alone is limited by rounding of ``f``.
    """
    if isinstance(f, SampledFunction):
        lo, hi = f.domain
        a = lo if a is None else max(a, lo)
        b = hi if b is None else min(b, hi)
    a = 0.0 if a is None else float(a)
    b = 1.0 if b is None else float(b)
    if grid < 1000:
        raise ValidationError("find_argmax needs at least 1000 grid points")
    xs = np.linspace(a, b, grid)
    ys = evaluate_real(f, xs)
    if not np.all(np.isfinite(ys)):
        ok = np.isfinite(ys)
        ys = np.where(ok, ys, -np.inf)
    top = float(np.max(ys))
    near = np.nonzero(ys >= top - 1e-15 * (1.0 + abs(top)))[0]
    if xs[near[-1]] - xs[near[0]] > 1e-6:
        raise StructureError(
            f"maximum {top!r} attained on a plateau [{xs[near[0]]!r}, {xs[near[-1]]!r}]"
        )
    i = int(near[0])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    scalar = lambda t: float(evaluate_real(f, np.array([t]))[0])  # noqa: E731
    x = _golden(scalar, lo, hi, tol)

    if isinstance(f, SampledFunction):
        dfn = lambda t: float(f.derivative(t))  # noqa: E731
        s = 0.0
    else:
        s = 1e-5

        def dfn(t):
            return (scalar(t + s) - scalar(t - s)) / (2.0 * s)

    u, v = max(lo, a + s), min(hi, b - s)
    if u < x < v:
        du, dv = dfn(u), dfn(v)
        if du > 0 > dv:
            x = brentq(dfn, u, v, xtol=1e-15)
    return float(x)


def find_crossing(f, q, a: float = 0.0, b: float = 1.0, grid: int = 10000,
                  xtol: float = 1e-12) -> float:
    """Unique point in ``(a, b]`` where ``q - f`` changes sign, by bisection."""
    xs = np.linspace(a, b, grid + 1)[1:]
    d = evaluate_real(q, xs) - evaluate_real(f, xs)
    if not np.all(np.isfinite(d)):
        raise StructureError("q - f is not finite on the scan grid")
    pos = d > 0
    idx = np.nonzero(pos[1:] != pos[:-1])[0]
    zeros = xs[d == 0.0]
    if idx.size != 1:
        found = [float(0.5 * (xs[i] + xs[i + 1])) for i in idx]
        raise StructureError(f"expected exactly one sign change of q - f, found {len(found)}: {found}")
    i = int(idx[0])
    lo, hi = float(xs[i]), float(xs[i + 1])
    if zeros.size and lo in zeros:
        return lo

    def diff(t):
        return float(evaluate_real(q, np.array([t]))[0] - evaluate_real(f, np.array([t]))[0])

    if diff(hi) == 0.0:
        return hi
    return float(brentq(diff, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))


# --------------------------------------------------------------------------
# recurrences whose limit misses the terminal condition


_E = math.e


def conjecture_spec(example: str, n: int, mu: float) -> RecurrenceSpec:
    """Recurrence of one of the two non-uniform convergence examples.

    ``exmu`` has ``G = k/n^2 + 2(k+2n)/(n(3n-3k+2))`` and
    ``H = (3n-3k)/(3n-3k+2)``; ``ei-example`` has ``G = (k/n)^n + 1/(k+n)``
    and ``H = k/(k+1)``.
    """
    n = int(n)
    if example == "exmu":
        return RecurrenceSpec(
            n, mu,
            G=lambda k: k / n**2 + 2.0 * (k + 2.0 * n) / (n * (3.0 * n - 3.0 * k + 2.0)),
            H=lambda k: (3.0 * n - 3.0 * k) / (3.0 * n - 3.0 * k + 2.0),
            g_limit=lambda x: (-3.0 * x**2 + 5.0 * x + 4.0) / (3.0 - 3.0 * x),
            h_limit=lambda x: 2.0 / (3.0 - 3.0 * x),
            H_complement=lambda k: 2.0 / (3.0 * n - 3.0 * k + 2.0),
        )
    if example == "ei-example":
        return RecurrenceSpec(
            n, mu,
            G=lambda k: np.power(k / n, n) + 1.0 / (k + n),
            H=lambda k: k / (k + 1.0),
            g_limit=lambda x: 1.0 / (x + 1.0),
            h_limit=lambda x: 1.0 / x,
            H_complement=lambda k: 1.0 / (k + 1.0),
        )
    raise ValidationError(f"unknown conjecture example {example!r} (known: exmu, ei-example)")


def conjecture_reference(example: str, mu: float):
    """``(f, Theta)``: the conjectured limit and its value at x = 1."""
    if example == "exmu":
        return (lambda x: (-15.0 * np.asarray(x, float) ** 2 + 22.0 * np.asarray(x, float) + 113.0) / 40.0), 3.0
    if example == "ei-example":
        theta = 1.0 / (_E - 1.0) + mu

        def f(x):
            x = np.asarray(x, dtype=float)
            safe = np.where(x > 0, x, 1.0)
            inner = (np.log(safe) - _E * np.log(2.0 * safe) + (_E - 1.0) * mu + 1.0 + math.log(2.0)) / (_E - 1.0)
            return np.where(x > 0, safe * (inner + np.log1p(safe)), 0.0)

        return f, theta
    raise ValidationError(f"unknown conjecture example {example!r} (known: exmu, ei-example)")


@dataclass(frozen=True)
class ConjectureRun:
    n: int
    x: np.ndarray
    F: np.ndarray
    f: np.ndarray
    gap: GapReport
    terminal_drift: float
    argmax: int  # over 0 < k < n
    max_value: float


@dataclass(frozen=True)
class ConjectureResult:
    example: str
    mu: float
    Theta: float
    theta: float  # maximiser of the reference f
    f_theta: float
    runs: tuple


def run_conjecture_experiment(example: str, mu: float, n_list: Sequence[int],
                              samples: int = 201) -> ConjectureResult:
    """Finite-n curves ``F_n(floor(nx))`` against the conjectured limit.

    Each run keeps ``samples`` evenly spaced indices (for plotting) plus the
    full-table gap, terminal drift and the interior argmax/max.
    """
    f, Theta = conjecture_reference(example, mu)
    runs = []
    for n in n_list:
        spec = conjecture_spec(example, n, mu)
        table = solve_backward(spec)
        idx = np.unique(np.floor(np.linspace(0, n, samples) + 1e-9).astype(np.int64))
        x = idx / n
        v = table.values
        inner = v[1:n]
        j = int(np.argmax(inner)) + 1
        _, G, H = spec.coefficients(n - 1, n)
        drift = abs(G[0] + mu * H[0] - mu)
        runs.append(
            ConjectureRun(
                int(n), x, v[idx].copy(), evaluate_real(f, x), measure_gap(table, f),
                float(drift), j, float(v[j]),
            )
        )
    theta = find_argmax(f, 1e-6, 1.0)
    return ConjectureResult(example, float(mu), float(Theta), theta, float(evaluate_real(f, [theta])[0]), tuple(runs))

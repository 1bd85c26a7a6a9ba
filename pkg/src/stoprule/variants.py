"""Catalog of single-threshold secretary-type problems.

Every variant provides

* the finite-n recurrence (``G``, ``H``, ``mu``) whose value ``F_n(k)`` is
  the payoff of the threshold-``k`` strategy,
* a :class:`~stoprule.core.PayoffModel` for the optimal-value DP,
* a combiner mapping ``F_n(k)`` to the reported success quantity,
* closed-form asymptotics: the ODE solution ``f``, ``theta = lim kappa_n/n``
  and ``lim P_n``.

For the three variants with a non-trivial combiner (``random-N``,
``wildcard``, ``interruption``) the payoff model describes the
*unconditional* game, so that ``combiner(n, k, F_n(k))`` satisfies the
standard threshold recurrence of that model.  Thresholds are therefore
extracted from the composite sequence for every variant.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.special import xlogy

from . import asymptotics
from .core import (
    PayoffModel,
    RecurrenceSpec,
    ThresholdResult,
    ValueTable,
    optimal_threshold,
    solve_backward,
    streaming_threshold,
)
from .errors import ValidationError
from .specialfn import expint_ei, lambert_w

__all__ = [
    "VARIANT_IDS",
    "VariantParams",
    "VariantDefinition",
    "VariantInstance",
    "VariantSolution",
    "AsymptoticResult",
    "CATALOG",
    "get_variant",
    "make_variant",
    "solve_variant",
    "asymptotic_limits",
    "closed_form_f",
    "parse_params",
    "availability_payoff",
]

VARIANT_IDS = (
    "classical",
    "postdoc",
    "best-or-worst",
    "uncertain",
    "cost",
    "win-lose-draw",
    "duration",
    "multicriteria",
    "random-N",
    "lottery",
    "wildcard",
    "interruption",
    "penalty",
)


# --------------------------------------------------------------------------
# payoff curves for the lottery


_ALLOWED_FUNCS = {
    "exp": np.exp,
    "log": np.log,
    "log1p": np.log1p,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "minimum": np.minimum,
    "maximum": np.maximum,
}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _compile_expr(text: str) -> Callable:
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse payoff expression {text!r}") from exc

    def ev(node, x):
        if isinstance(node, ast.Expression):
            return ev(node.body, x)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id == "x":
                return x
            if node.id == "e":
                return math.e
            if node.id == "pi":
                return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, x), ev(node.right, x))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand, x)
            return -v if isinstance(node.op, ast.USub) else v
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _ALLOWED_FUNCS
            and not node.keywords
        ):
            return _ALLOWED_FUNCS[node.func.id](*(ev(a, x) for a in node.args))
        raise ValidationError(f"unsupported construct in payoff expression {text!r}")

    def Y(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(ev(tree, x), dtype=float), x.shape) + 0.0

    return Y


def _identity(x):
    return np.asarray(x, dtype=float) + 0.0


@dataclass(frozen=True)
class PayoffCurve:
    """Non-decreasing Lipschitz payoff ``Y`` on [0, 1] for the lottery."""

    fn: Callable
    label: str = "x"
    lipschitz: float = field(default=1.0, compare=False)

    def __call__(self, x):
        return self.fn(x)

    @classmethod
    def parse(cls, spec) -> "PayoffCurve":
        if isinstance(spec, PayoffCurve):
            return spec
        if callable(spec):
            return cls.validated(spec, getattr(spec, "__name__", "Y"))
        text = str(spec).strip()
        if text in ("x", "identity"):
            return cls.validated(_identity, "x")
        return cls.validated(_compile_expr(text), text)

    @classmethod
    def validated(cls, fn: Callable, label: str) -> "PayoffCurve":
        grid = np.linspace(0.0, 1.0, 1001)
        try:
            y = np.asarray(fn(grid), dtype=float)
            if y.shape != grid.shape:
                y = np.broadcast_to(y, grid.shape)
        except Exception:
            y = np.array([float(fn(t)) for t in grid])
            fn = np.vectorize(fn, otypes=[float])
        if not np.all(np.isfinite(y)):
            raise ValidationError(f"payoff Y={label} is not finite on [0, 1]")
        dy = np.diff(y)
        if np.any(dy < -1e-12 * max(1.0, float(np.max(np.abs(y))))):
            raise ValidationError(f"payoff Y={label} must be non-decreasing on [0, 1]")
        lip = float(np.max(np.abs(dy)) / (grid[1] - grid[0]))
        return cls(fn, label, lip)


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class VariantParams:
    p: float = 0.5
    c: float = 0.1
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.0
    m: int = 3
    b: float = 2.0
    Y: PayoffCurve = field(default_factory=lambda: PayoffCurve(_identity, "x", 1.0))

    def as_dict(self, names) -> dict:
        out = {}
        for name in names:
            v = getattr(self, name)
            out[name] = v.label if isinstance(v, PayoffCurve) else v
        return out


def _check(cond: bool, msg: str):
    if not cond:
        raise ValidationError(msg)


def parse_params(variant_id: str, raw: Optional[Mapping] = None) -> VariantParams:
    """Build :class:`VariantParams` from ``key -> value`` pairs.

    Keys must belong to the variant; values may be strings (CLI) or
    numbers.  Unset fields keep their defaults.
    """
    definition = get_variant(variant_id)
    if raw is None:
        return VariantParams()
    if isinstance(raw, VariantParams):
        return raw
    updates = {}
    for key, value in raw.items():
        if key not in definition.param_names:
            allowed = ", ".join(definition.param_names) or "none"
            raise ValidationError(
                f"unknown parameter {key!r} for variant {variant_id!r} (allowed: {allowed})"
            )
        if key == "Y":
            updates["Y"] = PayoffCurve.parse(value)
        elif key == "m":
            try:
                fv = float(value)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"parameter m must be an integer, got {value!r}") from exc
            _check(fv.is_integer(), f"parameter m must be an integer, got {value!r}")
            updates["m"] = int(fv)
        else:
            try:
                updates[key] = float(value)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"parameter {key} must be a real number, got {value!r}") from exc
    return replace(VariantParams(), **updates)


def _validate(variant_id: str, q: VariantParams):
    for name in get_variant(variant_id).param_names:
        v = getattr(q, name)
        if name != "Y":
            _check(math.isfinite(v), f"parameter {name} must be finite, got {v!r}")
    if variant_id == "uncertain":
        _check(0.0 < q.p <= 1.0, f"uncertain employment needs 0 < p <= 1, got p={q.p}")
    elif variant_id == "cost":
        _check(0.0 <= q.c < 1.0, f"interview cost needs 0 <= c < 1, got c={q.c}")
    elif variant_id == "win-lose-draw":
        _check(q.alpha + q.beta > 0, "win-lose-draw needs alpha + beta > 0")
    elif variant_id == "multicriteria":
        _check(q.m >= 1, f"multicriteria needs m >= 1, got m={q.m}")
    elif variant_id == "penalty":
        _check(q.b >= 0.0, f"penalty needs b >= 0, got b={q.b}")


# --------------------------------------------------------------------------
# finite-n instances


@dataclass(frozen=True)
class VariantInstance:
    """One variant at one horizon.  Unpacks as ``(spec, payoff, combiner)``."""

    variant: str
    n: int
    params: VariantParams
    spec: RecurrenceSpec
    payoff: PayoffModel
    combiner: Optional[Callable] = None
    payoff_mu: float = 0.0

    def __iter__(self):
        return iter((self.spec, self.payoff, self.combiner))

    def composite(self, k, F):
        if self.combiner is None:
            return np.asarray(F, dtype=float)
        return np.asarray(self.combiner(self.n, k, F), dtype=float)


def _f(k):
    return np.asarray(k, dtype=float)


def _classical(n, q):
    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: np.full(np.shape(k), 1.0 / n),
        H=lambda k: _f(k) / (_f(k) + 1.0),
        g_limit=lambda x: np.ones_like(_f(x)),
        h_limit=lambda x: 1.0 / _f(x),
        H_complement=lambda k: 1.0 / (_f(k) + 1.0),
    )
    payoff = PayoffModel(n, p=lambda k: 1.0 / _f(k), stop_payoff=lambda k: _f(k) / n)
    return spec, payoff, None, 0.0


def _postdoc(n, q):
    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: _f(k) / (n * (n - 1.0)),
        H=lambda k: _f(k) / (_f(k) + 1.0),
        g_limit=lambda x: _f(x),
        h_limit=lambda x: 1.0 / _f(x),
        H_complement=lambda k: 1.0 / (_f(k) + 1.0),
    )
    payoff = PayoffModel(
        n,
        p=lambda k: 1.0 / _f(k),
        stop_payoff=lambda k: _f(k) * (_f(k) - 1.0) / (n * (n - 1.0)),
    )
    return spec, payoff, None, 0.0


def _best_or_worst(n, q):
    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: np.full(np.shape(k), 2.0 / n),
        H=lambda k: (_f(k) - 1.0) / (_f(k) + 1.0),
        g_limit=lambda x: np.full(np.shape(x), 2.0),
        h_limit=lambda x: 2.0 / _f(x),
        H_complement=lambda k: 2.0 / (_f(k) + 1.0),
    )
    # The first observation is both best and worst: p_1 = 1, payoff 2/n.
    payoff = PayoffModel(
        n,
        p=lambda k: np.minimum(1.0, 2.0 / _f(k)),
        stop_payoff=lambda k: np.where(_f(k) == 1.0, 2.0 / n, _f(k) / n),
    )
    return spec, payoff, None, 0.0


def _uncertain(n, q):
    p = q.p
    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: np.full(np.shape(k), p / n),
        H=lambda k: (_f(k) + 1.0 - p) / (_f(k) + 1.0),
        g_limit=lambda x: np.full(np.shape(x), p),
        h_limit=lambda x: p / _f(x),
        H_complement=lambda k: p / (_f(k) + 1.0),
    )
    payoff = PayoffModel(n, p=lambda k: p / _f(k), stop_payoff=lambda k: _f(k) / n)
    return spec, payoff, None, 0.0


def _cost(n, q):
    c = q.c
    spec = RecurrenceSpec(
        n, -c,
        G=lambda k: np.full(np.shape(k), (1.0 - c) / n),
        H=lambda k: _f(k) / (_f(k) + 1.0),
        g_limit=lambda x: np.full(np.shape(x), 1.0 - c),
        h_limit=lambda x: 1.0 / _f(x),
        H_complement=lambda k: 1.0 / (_f(k) + 1.0),
    )
    payoff = PayoffModel(n, p=lambda k: 1.0 / _f(k), stop_payoff=lambda k: _f(k) / n * (1.0 - c))
    return spec, payoff, None, -c


def _win_lose_draw(n, q):
    a, b, g = q.alpha, q.beta, q.gamma
    spec = RecurrenceSpec(
        n, -g,
        G=lambda k: ((a + b) * (_f(k) + 1.0) - b * n) / ((_f(k) + 1.0) * n),
        H=lambda k: _f(k) / (_f(k) + 1.0),
        g_limit=lambda x: a + b - b / _f(x),
        h_limit=lambda x: 1.0 / _f(x),
        H_complement=lambda k: 1.0 / (_f(k) + 1.0),
    )
    payoff = PayoffModel(
        n,
        p=lambda k: 1.0 / _f(k),
        stop_payoff=lambda k: a * _f(k) / n - b * (1.0 - _f(k) / n),
    )
    return spec, payoff, None, -g


def _duration(n, q):
    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: (n - _f(k)) / (n * n),
        H=lambda k: _f(k) / (_f(k) + 1.0),
        g_limit=lambda x: 1.0 - _f(x),
        h_limit=lambda x: 1.0 / _f(x),
        H_complement=lambda k: 1.0 / (_f(k) + 1.0),
    )
    payoff = PayoffModel(
        n,
        p=lambda k: 1.0 / _f(k),
        stop_payoff=lambda k: _f(k) * (n + 1.0 - _f(k)) / (n * n),
    )
    return spec, payoff, None, 0.0


def _multicriteria(n, q):
    m = q.m
    if m == 1:
        return _classical(n, q)

    def miss(k):  # 1 - (k/(k+1))^m without cancellation
        with np.errstate(divide="ignore"):
            return -np.expm1(m * np.log1p(-1.0 / (_f(k) + 1.0)))

    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: miss(k) * (_f(k) + 1.0) / n,
        H=lambda k: (_f(k) / (_f(k) + 1.0)) ** m,
        g_limit=lambda x: np.full(np.shape(x), float(m)),
        h_limit=lambda x: m / _f(x),
        H_complement=miss,
    )
    payoff = PayoffModel(n, p=lambda k: miss(_f(k) - 1.0), stop_payoff=lambda k: _f(k) / n)
    return spec, payoff, None, 0.0


def _tail_harmonic(n):
    """``T[j] = sum_{i=j}^{n} 1/i`` for ``j = 0..n+1`` (``T[0]`` unused)."""
    inv = np.zeros(n + 2)
    inv[1 : n + 1] = 1.0 / np.arange(1, n + 1, dtype=float)
    return np.cumsum(inv[::-1])[::-1]


def availability_payoff(n: int, k) -> np.ndarray:
    """Success probability of choosing a relatively best candidate at step k
    when the number of candidates is uniform on {1..n}: k(psi(n+1)-psi(k))/(n-k+1)."""
    from .specialfn import digamma

    kf = _f(k)
    return kf * (digamma(n + 1.0) - digamma(kf)) / (n - kf + 1.0)


def _random_n(n, q):
    T = _tail_harmonic(n)

    def avail(k):  # probability that rejecting at k still leaves candidates
        kf = _f(k)
        return np.where(kf == 0, 1.0, (n - kf) / (n - kf + 1.0))

    def PA(j):
        j = np.asarray(j, dtype=np.int64)
        return _f(j) * T[j] / (n - _f(j) + 1.0)

    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: avail(k) * PA(np.asarray(k) + 1) / (_f(k) + 1.0),
        H=lambda k: avail(k) * _f(k) / (_f(k) + 1.0),
        g_limit=lambda x: _log_ratio(_f(x)),
        h_limit=lambda x: 1.0 / (_f(x) - _f(x) ** 2),
        H_complement=lambda k: np.where(
            _f(k) == 0, 1.0, (n + 1.0) / ((n - _f(k) + 1.0) * (_f(k) + 1.0))
        ),
    )
    # unconditional model: P(N >= k) * P^A(k) = (k/n) sum_{i>=k} 1/i
    payoff = PayoffModel(
        n,
        p=lambda k: 1.0 / _f(k),
        stop_payoff=lambda k: _f(k) / n * T[np.asarray(k, dtype=np.int64)],
    )

    return spec, payoff, _random_n_combiner, 0.0


def _random_n_combiner(n, k, F):
    """Unconditional payoff: P(N >= k) * F(k), with the k = 0 case equal to F."""
    kf = _f(k)
    reach = np.where(kf == 0, 1.0, (n - kf + 1.0) / n)
    return reach * np.asarray(F, dtype=float)


def _lottery(n, q):
    Y = q.Y
    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: Y((_f(k) + 1.0) / n) / n,
        H=lambda k: np.full(np.shape(k), (n - 1.0) / n),
        g_limit=lambda x: Y(_f(x)),
        h_limit=lambda x: np.ones_like(_f(x)),
        H_complement=lambda k: np.full(np.shape(k), 1.0 / n),
    )
    payoff = PayoffModel(
        n,
        p=lambda k: np.full(np.shape(k), 1.0 / n),
        stop_payoff=lambda k: Y(_f(k) / n),
    )
    return spec, payoff, None, 0.0


def _wildcard_combiner(n, k, F):
    seen = _f(k) / (n + 1.0)
    return 0.5 * seen + (1.0 - seen) * np.asarray(F, dtype=float)


def _wildcard(n, q):
    spec = RecurrenceSpec(
        n, 0.5,
        G=lambda k: (3.0 * n - 2.0 * _f(k)) / (2.0 * n * (n - _f(k) + 1.0)),
        H=lambda k: _f(k) * (n - _f(k)) / ((_f(k) + 1.0) * (n - _f(k) + 1.0)),
        g_limit=lambda x: (3.0 - 2.0 * _f(x)) / (2.0 - 2.0 * _f(x)),
        h_limit=lambda x: 1.0 / (_f(x) - _f(x) ** 2),
        H_complement=lambda k: (n + 1.0) / ((_f(k) + 1.0) * (n - _f(k) + 1.0)),
    )
    # unconditional model; a positive affine image of F(k) versus k/n
    payoff = PayoffModel(
        n,
        p=lambda k: 1.0 / _f(k),
        stop_payoff=lambda k: _wildcard_combiner(n, k, _f(k) / n),
    )
    return spec, payoff, _wildcard_combiner, 0.5


def _survival(n, k):
    return np.exp(_f(k) * math.log1p(-1.0 / n))


def _interruption_combiner(n, k, F):
    return _survival(n, k) * np.asarray(F, dtype=float)


def _interruption(n, q):
    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: np.full(np.shape(k), (n - 1.0) / (n * n)),
        H=lambda k: _f(k) * (n - 1.0) / ((_f(k) + 1.0) * n),
        g_limit=lambda x: np.ones_like(_f(x)),
        h_limit=lambda x: 1.0 + 1.0 / _f(x),
        H_complement=lambda k: (n + _f(k)) / ((_f(k) + 1.0) * n),
    )
    payoff = PayoffModel(
        n,
        p=lambda k: 1.0 / _f(k),
        stop_payoff=lambda k: _survival(n, k) * (_f(k) / n),
    )
    return spec, payoff, _interruption_combiner, 0.0


def _penalty_select_value(n, b, j):
    """Expected payoff of choosing a relatively best candidate at step j."""
    jf = _f(j)
    return jf * (b * (jf - n) + n - 1.0) / ((n - 1.0) * n)


def _penalty(n, q):
    b = q.b
    spec = RecurrenceSpec(
        n, 0.0,
        G=lambda k: _penalty_select_value(n, b, _f(k) + 1.0) / (_f(k) + 1.0),
        H=lambda k: _f(k) / (_f(k) + 1.0),
        g_limit=lambda x: b * (_f(x) - 1.0) + 1.0,
        h_limit=lambda x: 1.0 / _f(x),
        H_complement=lambda k: 1.0 / (_f(k) + 1.0),
    )
    payoff = PayoffModel(
        n, p=lambda k: 1.0 / _f(k), stop_payoff=lambda k: _penalty_select_value(n, b, k)
    )
    return spec, payoff, None, 0.0


# --------------------------------------------------------------------------
# closed forms


def _log_ratio(x):
    """log(x) / (x - 1), continuous at x = 1."""
    x = _f(x)
    u = x - 1.0
    small = np.abs(u) < 1e-4
    safe_u = np.where(small, 1.0, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log1p(safe_u * ~small + u * small) / safe_u
    series = 1.0 - u / 2.0 + u * u / 3.0 - u ** 3 / 4.0
    return np.where(small, series, direct)


def _xlogx(x):
    return xlogy(_f(x), _f(x))


def _f_classical(x, q):
    return -_xlogx(x)


def _f_uncertain(x, q):
    if q.p == 1.0:
        return _f_classical(x, q)
    x = _f(x)
    return q.p * (x ** q.p - x) / (1.0 - q.p)


def _f_multicriteria(x, q):
    if q.m == 1:
        return _f_classical(x, q)
    x = _f(x)
    return -q.m * (x ** q.m - x) / (q.m - 1.0)


def _f_random_n(x, q):
    x = _f(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -0.5 * _xlogx(x) * _log_ratio(x)
    return np.where((x <= 0.0) | (np.abs(x - 1.0) < 1e-12), 0.0, out)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _f_lottery(x, q):
    """e^x * int_x^1 e^{-u} Y(u) du by 48-point Gauss-Legendre on [x, 1]."""
    x = np.atleast_1d(_f(x))
    half = (1.0 - x)[:, None] / 2.0
    u = x[:, None] + half * (_GL_NODES[None, :] + 1.0)
    vals = np.exp(x[:, None] - u) * q.Y(u.ravel()).reshape(u.shape)
    out = (half[:, 0]) * (vals @ _GL_WEIGHTS)
    return out


def _f_wildcard(x, q):
    x = _f(x)
    safe = np.where(x > 0, x, 1.0)
    out = np.where(np.abs(x - 1.0) < 1e-12, 0.5, safe * (3.0 * _log_ratio(safe) - 2.0) / 2.0)
    return np.where(x > 0, out, 0.0)


_EI_M1 = float(expint_ei(-1.0))


def _f_interruption(x, q):
    x = _f(x)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, safe * np.exp(safe) * (_EI_M1 - expint_ei(-safe)), 0.0)


def _f_penalty(x, q):
    b = q.b
    x = _f(x)
    return -b * x * x + b * x + (b - 1.0) * _xlogx(x)


def _f2_random_n(x, q):
    x = _f(x)
    lx = np.log(x)
    return (x - lx - 1.0) * (-x + x * lx + 1.0) / ((x - 1.0) ** 3 * x)


def _f2_wildcard(x, q):
    x = _f(x)
    return -3.0 * (x * x - 2.0 * x * np.log(x) - 1.0) / (2.0 * (x - 1.0) ** 3 * x)


def _f2_interruption(x, q):
    x = _f(x)
    return np.exp(x) * (x + 2.0) * (_EI_M1 - expint_ei(-x)) - (x + 1.0) / x


def _theta_penalty(q):
    b = q.b
    if b == 0.0:
        return math.exp(-1.0)
    if b == 1.0:
        return 0.5
    scale = (1.0 - b) / (2.0 * b)
    expo = (2.0 * b - 1.0) / (1.0 - b)
    if b < 1.0:
        log_arg = math.log(2.0 * b / (1.0 - b)) + expo
        return scale * _w0_of_exp(log_arg)
    return scale * _wm1_of_negexp(math.log(2.0 * b / (b - 1.0)) + expo)


def _w0_of_exp(log_arg: float) -> float:
    """W0(exp(L)) without overflowing exp(L)."""
    if log_arg < 600.0:
        return lambert_w("principal", math.exp(log_arg))
    w = log_arg - math.log(log_arg)
    for _ in range(50):
        step = (w + math.log(w) - log_arg) / (1.0 + 1.0 / w)
        w -= step
        if abs(step) <= 1e-16 * w:
            break
    return w


def _wm1_of_negexp(log_arg: float) -> float:
    """W_{-1}(-exp(L)) for L <= -1, without underflowing exp(L)."""
    if log_arg > -600.0:
        return lambert_w("minus-one", -math.exp(log_arg))
    # w = -t with t - log t = -L
    t = -log_arg + math.log(-log_arg)
    for _ in range(50):
        step = (t - math.log(t) + log_arg) / (1.0 - 1.0 / t)
        t -= step
        if abs(step) <= 1e-16 * t:
            break
    return -t


def _theta_crossing_identity(fn):
    def theta(q):
        return asymptotics.find_crossing(lambda x: fn(x, q), lambda x: _f(x))
    return theta


def _theta_lottery(q):
    return asymptotics.find_crossing(lambda x: _f_lottery(x, q), lambda x: q.Y(_f(x)))


# --------------------------------------------------------------------------
# definitions


@dataclass(frozen=True)
class VariantDefinition:
    """One catalog entry.

    ``kind`` is ``"argmax"`` when theta maximises ``objective`` and
    ``"crossing"`` when it is the crossing of ``f`` with the rescaled stop
    payoff ``x``.  ``objective`` is the limit of the composite sequence
    (``f`` itself unless the variant has a combiner).
    """

    id: str
    param_names: tuple
    build: Callable
    f_closed: Callable
    theta_closed: Callable
    limit_payoff_closed: Callable
    g_limit: Callable
    h_limit: Callable
    kind: str = "argmax"
    objective: Optional[Callable] = None
    f_second: Optional[Callable] = None
    singular_at_one: bool = False
    combiner: Optional[Callable] = None

    def objective_closed(self, x, q):
        if self.objective is None:
            return self.f_closed(x, q)
        return self.objective(x, q)


def _const(v):
    return lambda x: np.full(np.shape(x), float(v))


def _inv(c):
    return lambda x: c / _f(x)


def _theta_wld(q):
    return math.exp((-q.alpha - q.gamma) / (q.alpha + q.beta))


def _f_wld(x, q):
    x = _f(x)
    return -(q.alpha + q.beta) * _xlogx(x) + q.beta * (x - 1.0) - q.gamma * x


def _theta_duration(q):
    return -0.5 * lambert_w("principal", -2.0 * math.exp(-2.0))


def _theta_wildcard(q):
    return -0.75 * lambert_w("principal", -4.0 / (3.0 * math.exp(4.0 / 3.0)))


def _theta_uncertain(q):
    return math.exp(-1.0) if q.p == 1.0 else q.p ** (1.0 / (1.0 - q.p))


def _theta_multicriteria(q):
    return math.exp(-1.0) if q.m == 1 else float(q.m) ** (1.0 / (1.0 - q.m))


def _defs():
    E1 = math.exp(-1.0)
    out = [
        VariantDefinition(
            "classical", (), _classical, _f_classical,
            lambda q: E1, lambda q: E1, _const(1.0), _inv(1.0),
            f_second=lambda x, q: -1.0 / _f(x),
        ),
        VariantDefinition(
            "postdoc", (), _postdoc, lambda x, q: _f(x) - _f(x) ** 2,
            lambda q: 0.5, lambda q: 0.25, lambda x: _f(x), _inv(1.0),
            f_second=lambda x, q: np.full(np.shape(x), -2.0),
        ),
        VariantDefinition(
            "best-or-worst", (), _best_or_worst, lambda x, q: 2.0 * _f(x) - 2.0 * _f(x) ** 2,
            lambda q: 0.5, lambda q: 0.5, _const(2.0), _inv(2.0),
            f_second=lambda x, q: np.full(np.shape(x), -4.0),
        ),
        VariantDefinition(
            "uncertain", ("p",), _uncertain, _f_uncertain,
            _theta_uncertain, _theta_uncertain,
            None, None,
            f_second=lambda x, q: -(q.p ** 2) * _f(x) ** (q.p - 2.0),
        ),
        VariantDefinition(
            "cost", ("c",), _cost,
            lambda x, q: -q.c * _f(x) + (q.c - 1.0) * _xlogx(x),
            lambda q: math.exp(1.0 / (q.c - 1.0)),
            lambda q: (1.0 - q.c) * math.exp(1.0 / (q.c - 1.0)),
            None, _inv(1.0),
            f_second=lambda x, q: (q.c - 1.0) / _f(x),
        ),
        VariantDefinition(
            "win-lose-draw", ("alpha", "beta", "gamma"), _win_lose_draw, _f_wld,
            _theta_wld, lambda q: float(_f_wld(_theta_wld(q), q)),
            None, _inv(1.0),
            f_second=lambda x, q: -(q.alpha + q.beta) / _f(x),
        ),
        VariantDefinition(
            "duration", (), _duration, lambda x, q: _f(x) ** 2 - _f(x) - _xlogx(x),
            _theta_duration, lambda q: _theta_duration(q) - _theta_duration(q) ** 2,
            lambda x: 1.0 - _f(x), _inv(1.0),
            f_second=lambda x, q: 2.0 - 1.0 / _f(x),
        ),
        VariantDefinition(
            "multicriteria", ("m",), _multicriteria, _f_multicriteria,
            _theta_multicriteria, _theta_multicriteria,
            None, None,
            f_second=lambda x, q: -(q.m ** 2) * _f(x) ** (q.m - 2.0),
        ),
        VariantDefinition(
            "random-N", (), _random_n, _f_random_n,
            lambda q: math.exp(-2.0), lambda q: 2.0 * math.exp(-2.0),
            _log_ratio, lambda x: 1.0 / (_f(x) - _f(x) ** 2),
            objective=lambda x, q: (1.0 - _f(x)) * _f_random_n(x, q),
            f_second=_f2_random_n, singular_at_one=True, combiner=_random_n_combiner,
        ),
        VariantDefinition(
            "lottery", ("Y",), _lottery, _f_lottery,
            _theta_lottery, lambda q: float(q.Y(_theta_lottery(q))),
            None, _const(1.0),
        ),
        VariantDefinition(
            "wildcard", (), _wildcard, _f_wildcard,
            _theta_wildcard,
            lambda q: 0.5 * _theta_wildcard(q) + (1.0 - _theta_wildcard(q)) * _theta_wildcard(q),
            lambda x: (3.0 - 2.0 * _f(x)) / (2.0 - 2.0 * _f(x)),
            lambda x: 1.0 / (_f(x) - _f(x) ** 2),
            kind="crossing",
            objective=lambda x, q: 0.5 * _f(x) + (1.0 - _f(x)) * _f_wildcard(x, q),
            f_second=_f2_wildcard, singular_at_one=True, combiner=_wildcard_combiner,
        ),
        VariantDefinition(
            "interruption", (), _interruption, _f_interruption,
            _theta_crossing_identity(_f_interruption),
            lambda q: _interruption_limit(),
            _const(1.0), lambda x: 1.0 + 1.0 / _f(x),
            kind="crossing",
            objective=lambda x, q: np.exp(-_f(x)) * _f_interruption(x, q),
            f_second=_f2_interruption, combiner=_interruption_combiner,
        ),
        VariantDefinition(
            "penalty", ("b",), _penalty, _f_penalty,
            _theta_penalty, lambda q: float(_f_penalty(_theta_penalty(q), q)),
            None, _inv(1.0),
            f_second=lambda x, q: -2.0 * q.b + (q.b - 1.0) / _f(x),
        ),
    ]
    return {d.id: d for d in out}


def _interruption_limit():
    theta = _theta_crossing_identity(_f_interruption)(None)
    # f(theta) = theta at the crossing
    return theta * math.exp(-theta)


CATALOG = _defs()


def get_variant(variant_id: str) -> VariantDefinition:
    try:
        return CATALOG[variant_id]
    except KeyError:
        raise ValidationError(
            f"unknown variant {variant_id!r} (known: {', '.join(VARIANT_IDS)})"
        ) from None


def limit_functions(variant_id: str, params: Optional[VariantParams] = None):
    """``(g, h)``: limits of ``n G(floor(nx))`` and ``n (1 - H(floor(nx)))``."""
    q = parse_params(variant_id, params)
    _validate(variant_id, q)
    d = get_variant(variant_id)
    if variant_id == "uncertain":
        return _const(q.p), _inv(q.p)
    if variant_id == "cost":
        return _const(1.0 - q.c), d.h_limit
    if variant_id == "win-lose-draw":
        return (lambda x: q.alpha + q.beta - q.beta / _f(x)), d.h_limit
    if variant_id == "multicriteria":
        return _const(float(q.m)), _inv(float(q.m))
    if variant_id == "lottery":
        return (lambda x: q.Y(_f(x))), d.h_limit
    if variant_id == "penalty":
        return (lambda x: q.b * (_f(x) - 1.0) + 1.0), d.h_limit
    return d.g_limit, d.h_limit


def make_variant(variant_id: str, n: int, params=None) -> VariantInstance:
    """Instantiate a catalog variant at horizon ``n`` (``n >= 2``)."""
    q = parse_params(variant_id, params)
    _validate(variant_id, q)
    if int(n) != n or n < 2:
        raise ValidationError(f"horizon n must be an integer >= 2, got {n!r}")
    n = int(n)
    builder = get_variant(variant_id).build
    spec, payoff, combiner, mu_opt = builder(n, q)
    return VariantInstance(variant_id, n, q, spec, payoff, combiner, mu_opt)


# --------------------------------------------------------------------------
# solving


@dataclass(frozen=True)
class VariantSolution:
    variant: str
    n: int
    kappa: int
    payoff: float
    certified_by: str
    threshold: ThresholdResult
    table: Optional[ValueTable] = None
    composite: Optional[ValueTable] = None

    @property
    def kappa_over_n(self) -> float:
        return self.kappa / self.n


def solve_variant(variant_id: str, n: int, params=None, materialize: Optional[bool] = None,
                  chunk: Optional[int] = None) -> VariantSolution:
    """Optimal threshold and payoff of a variant at horizon ``n``.

    With ``materialize`` false the backward pass streams in chunks and keeps
    no table (the default above two million indices).
    """
    inst = make_variant(variant_id, n, params)
    if materialize is None:
        materialize = n <= 2_000_000
    if not materialize:
        kwargs = {} if chunk is None else {"chunk": chunk}
        res = streaming_threshold(inst.spec, inst.payoff, inst.combiner, **kwargs)
        return VariantSolution(variant_id, inst.n, res.kappa, res.payoff, res.certified_by.value, res)
    table = solve_backward(inst.spec)
    k = np.arange(inst.n + 1, dtype=np.int64)
    comp = ValueTable(inst.n, inst.composite(k, table.values))
    res = optimal_threshold(comp, inst.payoff)
    return VariantSolution(
        variant_id, inst.n, res.kappa, res.payoff, res.certified_by.value, res, table, comp
    )


# --------------------------------------------------------------------------
# asymptotics


@dataclass(frozen=True)
class AsymptoticResult:
    theta: float
    limit_payoff: float
    source: str

    def __post_init__(self):
        if not (0.0 < self.theta <= 1.0):
            raise ValidationError(f"theta must lie in (0, 1], got {self.theta}")


def closed_form_f(variant_id: str, params, x):
    """The variant's limit function ``f`` (continuous extension at singular ends)."""
    q = parse_params(variant_id, params)
    _validate(variant_id, q)
    scalar = np.ndim(x) == 0
    out = np.asarray(get_variant(variant_id).f_closed(np.atleast_1d(_f(x)), q), dtype=float)
    return float(out.ravel()[0]) if scalar else out.reshape(np.shape(x))


def ode_problem(variant_id: str, params=None) -> "asymptotics.OdeProblem":
    q = parse_params(variant_id, params)
    d = get_variant(variant_id)
    g, h = limit_functions(variant_id, q)
    terminal = float(closed_form_f(variant_id, q, 1.0))
    return asymptotics.OdeProblem(h=h, g=g, terminal=terminal, singular_at_one=d.singular_at_one)


def asymptotic_limits(variant_id: str, params=None, method: str = "closed-form",
                      grid_points: int = 4001) -> AsymptoticResult:
    """``(theta, lim P_n)`` from closed forms, or from the integrated ODE.

    ``method="ode"`` integrates ``y' = y h - g`` numerically and extracts
    theta by argmax (or crossing with ``x``) on the sampled solution; it is
    an independent route to the same limits.
    """
    q = parse_params(variant_id, params)
    _validate(variant_id, q)
    d = get_variant(variant_id)
    if method == "closed-form":
        return AsymptoticResult(float(d.theta_closed(q)), float(d.limit_payoff_closed(q)), "closed-form")
    if method != "ode":
        raise ValidationError(f"unknown method {method!r}")
    sol = asymptotics.integrate_ode(ode_problem(variant_id, q), grid_points)
    x = sol.x
    if d.kind == "crossing":
        theta = asymptotics.find_crossing(sol, lambda t: _f(t), a=float(x[0]))
    else:
        obj = _composite_limit(variant_id, sol)
        theta = asymptotics.find_argmax(obj)
    fval = float(sol(theta))
    if variant_id == "random-N":
        payoff = (1.0 - theta) * fval
    elif variant_id == "wildcard":
        payoff = 0.5 * theta + (1.0 - theta) * fval
    elif variant_id == "interruption":
        payoff = math.exp(-theta) * fval
    elif variant_id == "lottery":
        payoff = float(q.Y(theta))
    else:
        payoff = fval
    return AsymptoticResult(float(theta), payoff, "ode-numeric")


def _composite_limit(variant_id, sol):
    if variant_id == "random-N":
        return asymptotics.SampledFunction(sol.x, (1.0 - sol.x) * sol.y)
    return sol

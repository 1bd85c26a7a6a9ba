"""Ground truth by playing the games directly.

Every game is reduced to per-stage arrays over a set of equally weighted
(or explicitly weighted) rows:

* ``S``  success observation at that stage (e.g. relatively best),
* ``A``  probability that a success stage is actually accepted
  (1 for pure rank games; p for uncertain employment; 1/n for the
  lottery's white ball),
* ``W``  payoff received when stopping there,
* ``F``  forced stop regardless of the threshold (wildcard drawn, random
  interruption, no candidates left),

plus the payoff ``mu`` when the game ends without a stop.  A threshold-k
strategy rejects stages ``1..k`` except forced ones.  Exact enumeration
builds the rows from all permutations and all auxiliary events; simulation
builds them from sampled permutations and sampled events.

Permutations hold 0-based values, the best candidate being ``n - 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import ValidationError
from .variants import VARIANT_IDS, VariantParams, _validate, parse_params

__all__ = [
    "SimReport",
    "SUPPORTED",
    "enumerate_exact",
    "enumerate_table",
    "enumerate_two_threshold_table",
    "multicriteria_by_permutations",
    "simulate",
    "BLOCK",
]

MAX_ENUM_N = 10
MAX_STATES = 10**7
BLOCK = 1 << 16
SUPPORTED = tuple(VARIANT_IDS) + ("gusein-zade",)

_PERM_CACHE: dict = {}


def _perms(n: int) -> np.ndarray:
    if n not in _PERM_CACHE:
        _PERM_CACHE[n] = np.array(list(itertools.permutations(range(n))), dtype=np.int16)
    return _PERM_CACHE[n]


@dataclass
class _Rows:
    S: np.ndarray
    A: np.ndarray
    W: np.ndarray
    F: np.ndarray
    mu: float
    weights: Optional[np.ndarray] = None  # None means equal weights


@numba.njit(cache=True)
def _rank_kernel(perm, best, second, worst):
    R, n = perm.shape
    for i in range(R):
        top1, top2, low = -1, -1, n
        for j in range(n):
            v = perm[i, j]
            best[i, j] = v > top1
            second[i, j] = top2 < v < top1
            worst[i, j] = v < low
            if v > top1:
                top2 = top1
                top1 = v
            elif v > top2:
                top2 = v
            if v < low:
                low = v


def _rank_features(perm: np.ndarray):
    """Relative best / second best / worst indicators, stage by stage."""
    perm = np.ascontiguousarray(perm)
    best = np.empty(perm.shape, dtype=np.bool_)
    second = np.empty(perm.shape, dtype=np.bool_)
    worst = np.empty(perm.shape, dtype=np.bool_)
    _rank_kernel(perm, best, second, worst)
    return best, second, worst


def _ones(shape):
    return np.ones(shape)


def _no_force(shape):
    return np.zeros(shape, dtype=bool)


def _rank_rows(variant: str, n: int, q: VariantParams, perm: np.ndarray) -> _Rows:
    best, second, worst = _rank_features(perm)
    is_top = perm == n - 1
    shape = perm.shape
    stage = np.arange(1, n + 1, dtype=float)
    if variant == "classical":
        return _Rows(best, _ones(shape), is_top.astype(float), _no_force(shape), 0.0)
    if variant == "postdoc":
        return _Rows(second, _ones(shape), (perm == n - 2).astype(float), _no_force(shape), 0.0)
    if variant == "best-or-worst":
        win = (is_top | (perm == 0)).astype(float)
        return _Rows(best | worst, _ones(shape), win, _no_force(shape), 0.0)
    if variant == "cost":
        W = is_top - q.c * stage[None, :] / n
        return _Rows(best, _ones(shape), W, _no_force(shape), -q.c)
    if variant == "win-lose-draw":
        W = np.where(is_top, q.alpha, -q.beta)
        return _Rows(best, _ones(shape), W, _no_force(shape), -q.gamma)
    if variant == "duration":
        W = is_top * (n + 1.0 - stage[None, :]) / n
        return _Rows(best, _ones(shape), W, _no_force(shape), 0.0)
    if variant == "penalty":
        W = is_top - q.b * (perm == n - 2)
        return _Rows(best, _ones(shape), W, _no_force(shape), 0.0)
    if variant == "uncertain":
        return _Rows(best, np.full(shape, q.p), is_top.astype(float), _no_force(shape), 0.0)
    raise AssertionError(variant)


@numba.njit(cache=True)
def _play_kernel(S, A, W, F, mu, k, out):
    R, n = S.shape
    for i in range(R):
        surv = 1.0
        acc = 0.0
        for j in range(n):
            if F[i, j]:
                a = 1.0
            elif S[i, j] and j >= k:
                a = A[i, j]
            else:
                continue
            acc += W[i, j] * a * surv
            surv *= 1.0 - a
            if surv == 0.0:
                break
        out[i] = acc + mu * surv


def _play(rows: _Rows, k: int) -> np.ndarray:
    """Payoff of the threshold-k strategy on every row.

    Success stages after ``k`` (and forced stages anywhere) are accepted
    with probability ``A``; the value averages over those acceptances.
    """
    def c(x, dt):
        return np.ascontiguousarray(np.broadcast_to(x, rows.S.shape), dtype=dt)

    out = np.empty(rows.S.shape[0])
    _play_kernel(c(rows.S, np.bool_), c(rows.A, np.float64), c(rows.W, np.float64),
                 c(rows.F, np.bool_), float(rows.mu), int(k), out)
    return out


# --------------------------------------------------------------------------
# games with auxiliary randomness


def _wildcard_rows(perm: np.ndarray, positions: np.ndarray) -> _Rows:
    """Insert the wildcard at 1-based draw ``positions`` (one per row)."""
    R, n = perm.shape
    best, _, _ = _rank_features(perm)
    win = (perm == n - 1).astype(float)
    draws = np.arange(1, n + 2)
    # numbered ball i (1-based) sits at draw i if i < w, else i + 1
    src = draws[None, :] - (draws[None, :] > positions[:, None])  # ball index at each draw
    is_wild = draws[None, :] == positions[:, None]
    col = np.clip(src - 1, 0, n - 1)
    rows_idx = np.arange(R)[:, None]
    S = np.where(is_wild, False, best[rows_idx, col])
    W = np.where(is_wild, 0.5, win[rows_idx, col])
    return _Rows(S, np.ones((R, n + 1)), W, is_wild, 0.5)


def _cut_rows(rows: _Rows, cut: np.ndarray) -> _Rows:
    """End each row with zero payoff at 1-based stage ``cut`` (n+1: never)."""
    R, n = rows.S.shape
    stage = np.arange(1, n + 1)
    hit = stage[None, :] == cut[:, None]
    W = np.where(hit, 0.0, rows.W)
    return _Rows(rows.S, rows.A, W, rows.F | hit, rows.mu)


def _random_n_rows(perm: np.ndarray, N: np.ndarray) -> _Rows:
    """Only the first ``N`` candidates exist; success means best of those."""
    R, n = perm.shape
    best, _, _ = _rank_features(perm)
    stage = np.arange(1, n + 1)
    prefix_max = np.max(np.where(stage[None, :] <= N[:, None], perm, -1), axis=1)
    win = (perm == prefix_max[:, None]).astype(float)
    base = _Rows(best, np.ones((R, n)), win, _no_force((R, n)), 0.0)
    return _cut_rows(base, N + 1)


def _record_patterns(n: int):
    """All record-indicator vectors of a uniform permutation, with weights.

    Record events at different stages are independent with probability 1/j.
    """
    tail = np.array(list(itertools.product((False, True), repeat=n - 1)), dtype=bool).reshape(-1, n - 1)
    pat = np.concatenate([np.ones((tail.shape[0], 1), dtype=bool), tail], axis=1)
    j = np.arange(1, n + 1, dtype=float)
    w = np.prod(np.where(pat, 1.0 / j, 1.0 - 1.0 / j), axis=1)
    return pat, w


def _multicriteria_from_records(recs) -> _Rows:
    """``recs``: list of m boolean arrays (R, n) of record indicators."""
    R, n = recs[0].shape
    any_rec = np.zeros((R, n), dtype=bool)
    win = np.zeros((R, n))
    chosen = np.zeros((R, n), dtype=bool)
    for rec in recs:
        # later record in this attribute means it is not the overall best
        later = np.flip(np.cumsum(np.flip(rec, axis=1), axis=1), axis=1) - rec
        take = rec & ~chosen
        win = np.where(take, (later == 0).astype(float), win)
        chosen |= rec
        any_rec |= rec
    return _Rows(any_rec, np.ones((R, n)), win, _no_force((R, n)), 0.0)


def _records_of(perm):
    return perm == np.maximum.accumulate(perm, axis=1)


def multicriteria_by_permutations(n: int, m: int, k: int) -> float:
    """Threshold-k value from all m-tuples of permutations (tiny n only)."""
    P = _perms(n)
    count = P.shape[0] ** m
    if count > MAX_STATES:
        raise ValidationError(f"{count} permutation tuples exceed the enumeration budget")
    idx = np.array(list(itertools.product(range(P.shape[0]), repeat=m)))
    recs = [_records_of(P[idx[:, a]]) for a in range(m)]
    return float(np.mean(_play(_multicriteria_from_records(recs), k)))


# --------------------------------------------------------------------------
# exact enumeration


def _exact_rows(variant: str, n: int, q: VariantParams) -> _Rows:
    if variant == "lottery":
        stage = np.arange(1, n + 1) / n
        W = np.asarray(q.Y(stage), dtype=float)[None, :]
        return _Rows(np.ones((1, n), dtype=bool), np.full((1, n), 1.0 / n), W, _no_force((1, n)), 0.0)
    if variant == "multicriteria":
        pat, w = _record_patterns(n)
        count = pat.shape[0] ** q.m
        if count > MAX_STATES:
            raise ValidationError(f"multicriteria m={q.m}, n={n}: {count} states exceed the budget")
        idx = np.array(list(itertools.product(range(pat.shape[0]), repeat=q.m)))
        rows = _multicriteria_from_records([pat[idx[:, a]] for a in range(q.m)])
        rows.weights = np.prod(w[idx], axis=1)
        return rows

    perm = _perms(n)
    P = perm.shape[0]
    if variant == "wildcard":
        _budget(P * (n + 1))
        rep = np.repeat(perm, n + 1, axis=0)
        pos = np.tile(np.arange(1, n + 2), P)
        return _wildcard_rows(rep, pos)
    if variant == "interruption":
        _budget(P * (n + 1))
        rep = np.repeat(perm, n + 1, axis=0)
        cut = np.tile(np.arange(1, n + 2), P)
        r = 1.0 - 1.0 / n
        w_cut = np.where(np.arange(1, n + 2) <= n, r ** np.arange(n + 1) / n, r**n)
        best, _, _ = _rank_features(rep)
        base = _Rows(best, np.ones(rep.shape), (rep == n - 1).astype(float), _no_force(rep.shape), 0.0)
        rows = _cut_rows(base, cut)
        rows.weights = np.tile(w_cut, P) / P
        return rows
    if variant == "random-N":
        _budget(P * n)
        rep = np.repeat(perm, n, axis=0)
        N = np.tile(np.arange(1, n + 1), P)
        return _random_n_rows(rep, N)
    _budget(P)
    return _rank_rows(variant, n, q, perm)


def _budget(states: int):
    if states > MAX_STATES:
        raise ValidationError(f"{states} states exceed the enumeration budget of {MAX_STATES}")


def _average(rows: _Rows, values: np.ndarray) -> float:
    if rows.weights is None:
        return float(np.mean(values))
    return float(np.dot(rows.weights, values) / np.sum(rows.weights))


def _check_variant(variant: str):
    if variant not in SUPPORTED:
        raise ValidationError(f"unsupported variant {variant!r} for the oracle (supported: {', '.join(SUPPORTED)})")


def enumerate_table(variant: str, n: int, params=None) -> np.ndarray:
    """Exact expected payoff of every threshold ``k = 0..n``."""
    _check_variant(variant)
    if variant == "gusein-zade":
        raise ValidationError("gusein-zade uses two thresholds; see enumerate_two_threshold_table")
    if not (2 <= n <= MAX_ENUM_N):
        raise ValidationError(f"enumeration needs 2 <= n <= {MAX_ENUM_N}, got {n}")
    q = parse_params(variant, params)
    _validate(variant, q)
    rows = _exact_rows(variant, n, q)
    return np.array([_average(rows, _play(rows, k)) for k in range(n + 1)])


def enumerate_exact(variant: str, n: int, strategy, params=None) -> float:
    """Exact expected payoff of a threshold (or ``(r, s)`` pair for gusein-zade)."""
    _check_variant(variant)
    if variant == "gusein-zade":
        r, s = strategy
        return float(enumerate_two_threshold_table(n)[int(r), int(s)])
    k = int(strategy)
    if not (0 <= k <= n):
        raise ValidationError(f"threshold must lie in [0, {n}], got {strategy!r}")
    return float(enumerate_table(variant, n, params)[k])


def enumerate_two_threshold_table(n: int) -> np.ndarray:
    """``table[r, s]``: success probability (best or second best) of the
    two-threshold rule, over all orders."""
    if not (2 <= n <= 9):
        raise ValidationError(f"two-threshold enumeration needs 2 <= n <= 9, got {n}")
    perm = _perms(n)
    best, second, _ = _rank_features(perm)
    win = (perm >= n - 2).astype(float)
    stage = np.arange(1, n + 1)
    out = np.zeros((n + 1, n + 1))
    ones = np.ones(perm.shape)
    for s in range(n + 1):
        S = best | (second & (stage > s)[None, :])
        rows = _Rows(S, ones, win, _no_force(perm.shape), 0.0)
        for r in range(n + 1):
            out[r, s] = float(np.mean(_play(rows, r)))
    return out


# --------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SimReport:
    variant: str
    n: int
    strategy: int
    trials: int
    seed: int
    estimate: float
    std_error: float


@numba.njit(cache=True)
def _fisher_yates(u, n):
    """One uniform permutation of 0..n-1 per row of ``u`` (shape (R, n-1))."""
    R = u.shape[0]
    out = np.empty((R, n), dtype=np.int16)
    for i in range(R):
        for j in range(n):
            out[i, j] = j
        for j in range(n - 1, 0, -1):
            t = int(u[i, n - 1 - j] * (j + 1))
            if t > j:
                t = j
            tmp = out[i, j]
            out[i, j] = out[i, t]
            out[i, t] = tmp
    return out


def _sample_rows(variant: str, n: int, q: VariantParams, size: int, rng: np.random.Generator) -> _Rows:
    if variant == "lottery":
        white = rng.random((size, n)) < 1.0 / n
        W = np.broadcast_to(np.asarray(q.Y(np.arange(1, n + 1) / n), dtype=float), (size, n))
        return _Rows(white, np.ones((size, n)), W, _no_force((size, n)), 0.0)

    def draw(count=1):
        return [_fisher_yates(rng.random((size, n - 1)), n) for _ in range(count)]

    if variant == "multicriteria":
        return _multicriteria_from_records([_records_of(p) for p in draw(q.m)])
    (perm,) = draw()
    if variant == "wildcard":
        return _wildcard_rows(perm, rng.integers(1, n + 2, size=size))
    if variant == "interruption":
        best, _, _ = _rank_features(perm)
        base = _Rows(best, np.ones((size, n)), (perm == n - 1).astype(float), _no_force((size, n)), 0.0)
        cut = np.minimum(rng.geometric(1.0 / n, size=size), n + 1)
        return _cut_rows(base, cut)
    if variant == "random-N":
        return _random_n_rows(perm, rng.integers(1, n + 1, size=size))
    if variant == "uncertain":
        rows = _rank_rows(variant, n, q, perm)
        rows.A = (rng.random((size, n)) < q.p).astype(float)
        return rows
    return _rank_rows(variant, n, q, perm)


def simulate(variant: str, n: int, strategy: int, trials: int, seed: int, params=None) -> SimReport:
    """Monte Carlo estimate of a threshold strategy's expected payoff.

    Permutations come from a Fisher-Yates shuffle fed by uniforms.
    Trials run in blocks of 65536; block ``b`` draws from
    ``PCG64(SeedSequence(seed, spawn_key=(b,)))``, so the result is
    reproducible bit for bit and independent of how blocks are scheduled.
    ``std_error`` is the sample standard deviation over ``sqrt(trials)``.
    """
    _check_variant(variant)
    if variant == "gusein-zade":
        raise ValidationError("simulation supports single-threshold variants only")
    if trials < 10_000:
        raise ValidationError(f"simulate needs trials >= 10000, got {trials}")
    if int(seed) != seed or not (0 <= seed < 2**64):
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    n, k = int(n), int(strategy)
    if n < 2 or not (0 <= k <= n):
        raise ValidationError(f"need n >= 2 and 0 <= strategy <= n, got n={n}, strategy={strategy}")
    q = parse_params(variant, params)
    _validate(variant, q)

    count, mean, m2 = 0, 0.0, 0.0
    for b in range(math.ceil(trials / BLOCK)):
        size = min(BLOCK, trials - b * BLOCK)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(b,))))
        vals = _play(_sample_rows(variant, n, q, size, rng), k)
        bm = float(np.mean(vals))
        bm2 = float(np.sum((vals - bm) ** 2))
        tot = count + size
        delta = bm - mean
        mean += delta * size / tot
        m2 += bm2 + delta * delta * count * size / tot
        count = tot
    std = math.sqrt(m2 / (count - 1))
    return SimReport(variant, n, k, int(trials), int(seed), mean, std / math.sqrt(count))

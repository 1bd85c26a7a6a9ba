import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stoprule import core, variants as V
from stoprule.core import Certification, PayoffModel, RecurrenceSpec, ThresholdWarning
from stoprule.errors import NonFiniteError, ValidationError


def classical(n):
    spec, payoff, _ = V.make_variant("classical", n)
    return spec, payoff


def test_classical_n3_table():
    spec, _ = classical(3)
    np.testing.assert_allclose(core.solve_backward(spec).values, [1 / 3, 1 / 2, 1 / 3, 0], atol=1e-15)


def test_postdoc_n4_table():
    spec, _, _ = V.make_variant("postdoc", 4)
    np.testing.assert_allclose(core.solve_backward(spec).values, [0, 1 / 4, 1 / 3, 1 / 4, 0], atol=1e-15)


def test_identity_recurrence():
    spec = RecurrenceSpec(7, 2.5, G=lambda k: np.zeros(k.shape), H=lambda k: np.ones(k.shape))
    assert np.all(core.solve_backward(spec).values == 2.5)


def test_table_is_read_only():
    spec, _ = classical(5)
    t = core.solve_backward(spec)
    with pytest.raises(ValueError):
        t.values[0] = 1.0
    assert len(t) == 6 and t[5] == spec.mu


def test_threshold_classical_n3():
    spec, payoff = classical(3)
    res = core.optimal_threshold(core.solve_backward(spec), payoff)
    assert res.kappa == 1 and res.payoff == pytest.approx(0.5, abs=1e-15)
    assert res.certified_by == Certification.BOTH


def test_degenerate_table_warns():
    n = 4
    spec = RecurrenceSpec(n, 0.0, G=lambda k: 0.1 * (n - k), H=lambda k: np.zeros(k.shape))
    payoff = PayoffModel(n, p=lambda k: np.ones(k.shape), stop_payoff=lambda k: np.full(k.shape, 10.0))
    with pytest.warns(ThresholdWarning):
        res = core.optimal_threshold(core.solve_backward(spec), payoff)
    assert res.kappa == 0 and res.warning


def test_solve_optimal_examples():
    _, payoff = classical(3)
    assert core.solve_optimal(payoff, 0.0) == pytest.approx(0.5, abs=1e-15)
    const = PayoffModel(2, p=lambda k: np.ones(k.shape), stop_payoff=lambda k: np.full(k.shape, 5.0))
    assert core.solve_optimal(const, 0.0) == 5.0


def test_classical_large_n():
    spec, payoff = classical(10**7)
    res = core.streaming_threshold(spec, payoff)
    assert abs(res.kappa / 1e7 - np.exp(-1)) < 1e-3
    assert core.solve_optimal(payoff, 0.0) == pytest.approx(res.payoff, abs=1e-12)


@pytest.mark.parametrize("vid,n", [("classical", 100), ("postdoc", 100), ("wildcard", 50)])
def test_optimality_gap_examples(vid, n):
    inst = V.make_variant(vid, n)
    assert core.verify_threshold_optimality(inst.payoff, inst.spec, inst.combiner, inst.payoff_mu) <= 1e-12


@pytest.mark.parametrize("vid", V.VARIANT_IDS)
def test_streaming_matches_materialized(vid):
    n = 5000
    inst = V.make_variant(vid, n)
    a = core.streaming_threshold(inst.spec, inst.payoff, inst.combiner, chunk=777)
    b = V.solve_variant(vid, n, materialize=True)
    assert a.kappa == b.kappa and a.payoff == pytest.approx(b.payoff, abs=1e-15)


def test_non_finite_reported():
    spec = RecurrenceSpec(5, 1.0, G=lambda k: np.where(k == 2, np.inf, 0.0), H=lambda k: np.ones(k.shape))
    with pytest.raises(NonFiniteError):
        core.solve_backward(spec)


def test_validation():
    with pytest.raises(ValidationError):
        RecurrenceSpec(1, 0.0, G=lambda k: k, H=lambda k: k)
    with pytest.raises(ValidationError):
        RecurrenceSpec(5, float("nan"), G=lambda k: k, H=lambda k: k)
    bad = PayoffModel(3, p=lambda k: np.full(k.shape, 1.5), stop_payoff=lambda k: k)
    with pytest.raises(ValidationError):
        bad.arrays()


@pytest.mark.parametrize("vid", [v for v in V.VARIANT_IDS if v not in ("best-or-worst",)])
def test_convex_combination_bound(vid):
    # with 0 <= H <= 1 each F(k) averages payoffs and mu
    n = 500
    inst = V.make_variant(vid, n)
    _, G, H = inst.spec.coefficients()
    if np.any(H < 0) or np.any(H > 1):
        pytest.skip("H leaves [0, 1]")
    _, _, stop = inst.payoff.arrays()
    F = core.solve_backward(inst.spec).values
    lo = min(stop.min(), inst.spec.mu, 0.0)
    hi = max(stop.max(), inst.spec.mu)
    assert F.min() >= lo - 1e-12 and F.max() <= hi + 1e-12


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 300),
    mu=st.floats(-5, 5),
    seed=st.integers(0, 2**32 - 1),
)
def test_backward_pass_properties(n, mu, seed):
    rng = np.random.default_rng(seed)
    g, h = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    spec = RecurrenceSpec(n, mu, G=lambda k: g[k], H=lambda k: h[k])
    a = core.solve_backward(spec).values
    b = core.solve_backward(spec).values
    assert a.tobytes() == b.tobytes()
    assert a[n] == mu
    # direct python unroll
    f = mu
    for k in range(n - 1, -1, -1):
        f = g[k] + h[k] * f
        assert a[k] == f


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 400), seed=st.integers(0, 2**32 - 1))
def test_optimal_value_dominates_thresholds(n, seed):
    rng = np.random.default_rng(seed)
    p = np.sort(rng.uniform(0.01, 1.0, n))[::-1]
    pay = np.sort(rng.uniform(0, 1, n))
    payoff = PayoffModel(n, p=lambda k: p[k - 1], stop_payoff=lambda k: pay[k - 1])
    # threshold value: F(k) = p_{k+1} Y_{k+1} + (1 - p_{k+1}) F(k+1)
    spec = RecurrenceSpec(n, 0.0, G=lambda k: p[k] * pay[k], H=lambda k: 1.0 - p[k])
    F = core.solve_backward(spec).values
    assert core.solve_optimal(payoff, 0.0) >= F.max() - 1e-12


def test_linear_scaling():
    spec1, pay1 = classical(10**6)
    spec2, pay2 = classical(2 * 10**6)
    core.streaming_threshold(spec1, pay1)  # warm caches

    def best_of(spec, payoff, reps=3):
        out = []
        for _ in range(reps):
            t = time.perf_counter()
            core.streaming_threshold(spec, payoff)
            out.append(time.perf_counter() - t)
        return min(out)

    assert best_of(spec2, pay2) <= 2.6 * best_of(spec1, pay1)

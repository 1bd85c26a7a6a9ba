import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stoprule import variants as V
from stoprule.errors import DomainError
from stoprule.specialfn import BranchId, digamma, expint_ei, lambert_w

E = math.e


def test_w_examples():
    assert lambert_w("principal", 0.0) == 0.0
    assert -0.5 * lambert_w(BranchId.PRINCIPAL, -2 * E**-2) == pytest.approx(0.2031878699799799, abs=1e-13)
    assert -0.25 * lambert_w("minus-one", -4 * E**-3) == pytest.approx(0.63741732638, abs=1e-11)
    assert -0.75 * lambert_w("principal", -4 / (3 * E ** (4 / 3))) == pytest.approx(0.545605016560, abs=1e-12)


def test_w_branch_point_and_domain():
    assert lambert_w("principal", -1 / E) == pytest.approx(-1.0, abs=1e-7)
    assert lambert_w("minus-one", -1 / E) == pytest.approx(-1.0, abs=1e-7)
    with pytest.raises(DomainError):
        lambert_w("principal", -0.5)
    with pytest.raises(DomainError):
        lambert_w("minus-one", 0.1)
    with pytest.raises(DomainError):
        lambert_w("w7", 1.0)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-1 / E + 1e-9, -1e-12))
def test_branch_ordering(x):
    assert lambert_w("minus-one", x) < -1 < lambert_w("principal", x) < 0


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-1 / E + 1e-6, 1e6))
def test_w_against_mpmath(x):
    ref = float(mpmath.lambertw(x))
    assert lambert_w("principal", x) == pytest.approx(ref, rel=1e-13, abs=1e-300)


def test_w_array_input():
    x = np.linspace(-0.3, 5, 50)
    out = lambert_w("principal", x)
    assert out.shape == x.shape
    np.testing.assert_allclose(out * np.exp(out), x, rtol=1e-14, atol=1e-16)


def test_digamma_examples():
    assert digamma(2.0) - digamma(1.0) == pytest.approx(1.0, abs=1e-15)
    h = sum(1.0 / i for i in range(1, 101))
    assert digamma(101.0) - digamma(1.0) == pytest.approx(h, abs=1e-12)
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-12)


def test_digamma_availability_form():
    n, k = 10, 4
    brute = sum(k / i for i in range(k, n + 1)) / (n - k + 1)
    closed = k * (digamma(n + 1.0) - digamma(float(k))) / (n - k + 1)
    assert closed == pytest.approx(brute, abs=1e-14)
    assert V.availability_payoff(n, np.array([k]))[0] == pytest.approx(brute, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(1e-3, 1e4))
def test_digamma_against_mpmath(x):
    assert digamma(x) == pytest.approx(float(mpmath.digamma(x)), rel=1e-12, abs=1e-12)


def test_ei_examples():
    with mpmath.workdps(30):
        ref1 = float(-mpmath.quad(lambda t: mpmath.exp(-t) / t, [1, mpmath.inf]))
        ref2 = float(-mpmath.quad(lambda t: mpmath.exp(-t) / t, [2, mpmath.inf]))
    assert expint_ei(-1.0) == pytest.approx(ref1, rel=1e-12)
    assert expint_ei(-2.0) == pytest.approx(ref2, rel=1e-12)
    # exp(-x) = int_{-x}^{-1} e^t/t dt at the interruption threshold
    x = 0.27105459032
    assert math.exp(-x) == pytest.approx(expint_ei(-1.0) - expint_ei(-x), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(x=st.one_of(st.floats(-40, -1e-6), st.floats(1e-6, 700)))
def test_ei_against_mpmath(x):
    assert expint_ei(x) == pytest.approx(float(mpmath.ei(x)), rel=1e-12)


def test_ei_derivative():
    x = np.concatenate([np.linspace(-10, -0.1, 50), np.linspace(0.1, 10, 50)])
    h = 1e-5 * np.maximum(1.0, np.abs(x))
    fd = (expint_ei(x + h) - expint_ei(x - h)) / (2 * h)
    np.testing.assert_allclose(fd, np.exp(x) / x, rtol=1e-6)


def test_ei_pole():
    with pytest.raises(DomainError):
        expint_ei(0.0)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stoprule import asymptotics as A
from stoprule import core, variants as V
from stoprule.errors import ValidationError

E1 = math.exp(-1.0)
INTERIOR = np.linspace(0.02, 0.98, 1000)


def defaults(vid):
    return V.parse_params(vid, None)


def test_classical_small():
    sol = V.solve_variant("classical", 3)
    assert sol.kappa == 1 and sol.payoff == pytest.approx(0.5, abs=1e-15)


def test_uncertain_near_one_is_classical():
    res = V.asymptotic_limits("uncertain", {"p": 0.999})
    assert abs(res.theta - E1) < 1e-2 and abs(res.limit_payoff - E1) < 1e-2


@pytest.mark.parametrize(
    "vid,theta,payoff",
    [
        ("classical", E1, E1),
        ("duration", 0.2031878699799799, 0.161902559),
        ("random-N", math.exp(-2), 2 * math.exp(-2)),
        ("win-lose-draw", 1 / math.sqrt(math.e), 2 / math.sqrt(math.e) - 1),
    ],
)
def test_asymptotic_examples(vid, theta, payoff):
    res = V.asymptotic_limits(vid)
    assert res.theta == pytest.approx(theta, abs=1e-9)
    assert res.limit_payoff == pytest.approx(payoff, abs=1e-9)
    assert res.source == "closed-form"


def test_closed_form_examples():
    assert V.closed_form_f("classical", None, E1) == pytest.approx(E1, abs=1e-15)
    assert V.closed_form_f("best-or-worst", None, 1.0) == 0.0
    x = math.exp(-2)
    comp = (1 - x) * V.closed_form_f("random-N", None, x)
    assert comp == pytest.approx(x * math.log(x) ** 2 / 2, abs=1e-14)
    assert comp == pytest.approx(2 * math.exp(-2), abs=1e-14)


# ---------------------------------------------------------------- chains
def _coeffs(vid, params, n):
    spec = V.make_variant(vid, n, params).spec
    _, G, H = spec.coefficients()
    return G, H, spec.mu


@pytest.mark.parametrize(
    "left,right,exact",
    [
        (("cost", {"c": 0}), ("classical", None), True),
        (("win-lose-draw", {"alpha": 1, "beta": 0, "gamma": 0}), ("classical", None), True),
        (("win-lose-draw", {"alpha": 0.7, "beta": 0, "gamma": 0.3}), ("cost", {"c": 0.3}), False),
        (("multicriteria", {"m": 1}), ("classical", None), True),
    ],
)
def test_specialization_chains(left, right, exact):
    n = 257
    a, b = _coeffs(*left, n), _coeffs(*right, n)
    for x, y in zip(a[:2], b[:2]):
        if exact:
            assert x.tobytes() == y.tobytes()
        else:
            np.testing.assert_allclose(x, y, rtol=0, atol=1e-15)
    assert a[2] == b[2]


# ---------------------------------------------------------------- closed forms
@pytest.mark.parametrize("vid", V.VARIANT_IDS)
def test_closed_form_solves_ode(vid):
    q = defaults(vid)
    g, h = V.limit_functions(vid, q)
    f = lambda x: V.closed_form_f(vid, q, x)
    e = 1e-5
    dfdx = (f(INTERIOR + e) - f(INTERIOR - e)) / (2 * e)
    np.testing.assert_allclose(dfdx, f(INTERIOR) * h(INTERIOR) - g(INTERIOR), atol=1e-6)


@pytest.mark.parametrize("vid", V.VARIANT_IDS)
def test_terminal_value(vid):
    inst = V.make_variant(vid, 100)
    assert V.closed_form_f(vid, None, 1.0) == pytest.approx(inst.spec.mu, abs=1e-12)


@pytest.mark.parametrize("vid", [v for v in V.VARIANT_IDS if V.get_variant(v).f_second is not None])
def test_second_derivative(vid):
    d, q = V.get_variant(vid), defaults(vid)
    x = np.linspace(0.05, 0.95, 91)
    e = 1e-4
    f = lambda t: V.closed_form_f(vid, q, t)
    fd = (f(x + e) - 2 * f(x) + f(x - e)) / (e * e)
    np.testing.assert_allclose(d.f_second(x, q), fd, rtol=1e-4, atol=1e-4)


@pytest.mark.parametrize("vid", V.VARIANT_IDS)
def test_theta_characterization(vid):
    d, q = V.get_variant(vid), defaults(vid)
    theta = d.theta_closed(q)
    assert 0 < theta <= 1
    if d.kind == "crossing":
        assert V.closed_form_f(vid, q, theta) == pytest.approx(theta, abs=1e-12)
    else:
        best = A.find_argmax(lambda x: d.objective_closed(x, q), 1e-6, 1 - 1e-6)
        assert best == pytest.approx(theta, abs=1e-8)


@pytest.mark.parametrize("b", [0.0, 1e-4, 0.25, 0.5, 0.999, 0.999999, 1.0, 1.000001, 1.001, 2.0, 7.5, 1e3])
def test_penalty_theta(b):
    q = V.parse_params("penalty", {"b": b})
    theta = V.get_variant("penalty").theta_closed(q)
    best = A.find_argmax(lambda x: V.closed_form_f("penalty", q, x), 1e-9, 1 - 1e-9)
    assert theta == pytest.approx(best, abs=1e-7)


@pytest.mark.parametrize("vid", V.VARIANT_IDS)
def test_ode_route_matches_closed_form(vid):
    a = V.asymptotic_limits(vid)
    b = V.asymptotic_limits(vid, method="ode")
    assert b.theta == pytest.approx(a.theta, abs=1e-6)
    assert b.limit_payoff == pytest.approx(a.limit_payoff, abs=1e-6)


# ---------------------------------------------------------------- finite n
@pytest.mark.parametrize("vid", V.VARIANT_IDS)
def test_finite_n_consistency(vid):
    n = 10**6
    sol = V.solve_variant(vid, n)
    lim = V.asymptotic_limits(vid)
    tol = 5 / math.sqrt(n)
    assert abs(sol.kappa_over_n - lim.theta) <= tol
    assert abs(sol.payoff - lim.limit_payoff) <= tol


@pytest.mark.parametrize(
    "vid,bound",
    [
        ("classical", lambda k, q: 1e-12),
        ("best-or-worst", lambda k, q: 1e-12),
        ("multicriteria", lambda k, q: q.m / k),
        ("penalty", lambda k, q: q.b / k),
    ],
)
def test_hypothesis_bounds(vid, bound):
    q = defaults(vid)
    spec = V.make_variant(vid, 10**4).spec
    k, resid = A.residuals(spec, lambda x: V.closed_form_f(vid, q, x))
    assert np.all(np.abs(resid) < bound(k, q))


@pytest.mark.parametrize("Y", ["x", "x**2"])
def test_lottery_threshold_optimal(Y):
    inst = V.make_variant("lottery", 1000, {"Y": Y})
    assert core.verify_threshold_optimality(inst.payoff, inst.spec, inst.combiner, inst.payoff_mu) <= 1e-10


# ---------------------------------------------------------------- params
def test_param_validation():
    with pytest.raises(ValidationError):
        V.make_variant("classical", 10, {"p": 0.3})
    with pytest.raises(ValidationError):
        V.make_variant("uncertain", 10, {"p": 0})
    with pytest.raises(ValidationError):
        V.make_variant("cost", 10, {"c": 1})
    with pytest.raises(ValidationError):
        V.make_variant("multicriteria", 10, {"m": 2.5})
    with pytest.raises(ValidationError):
        V.make_variant("penalty", 10, {"b": -1})
    with pytest.raises(ValidationError):
        V.make_variant("win-lose-draw", 10, {"alpha": 0, "beta": 0})
    with pytest.raises(ValidationError):
        V.make_variant("lottery", 10, {"Y": "1 - x"})
    with pytest.raises(ValidationError):
        V.make_variant("lottery", 10, {"Y": "__import__('os')"})
    with pytest.raises(ValidationError):
        V.get_variant("nope")
    with pytest.raises(ValidationError):
        V.make_variant("classical", 1)


def test_payoff_curve_parse():
    q = V.parse_params("lottery", {"Y": "sqrt(x)"})
    assert q.Y(0.25) == pytest.approx(0.5)
    assert q.as_dict(("Y",)) == {"Y": "sqrt(x)"}


@settings(max_examples=25, deadline=None)
@given(
    vid=st.sampled_from(V.VARIANT_IDS),
    n=st.integers(3, 2000),
)
def test_threshold_in_range(vid, n):
    sol = V.solve_variant(vid, n)
    assert 0 <= sol.kappa <= n
    assert sol.certified_by in ("both-agree", "continuation-crossing", "argmax")
    assert math.isfinite(sol.payoff)


@settings(max_examples=25, deadline=None)
@given(p=st.floats(0.05, 0.95), c=st.floats(0.0, 0.75))
def test_parametric_limits_match_ode(p, c):
    # theta = exp(1/(c-1)) stays well inside the integration range [1e-4, 1]
    for vid, params in (("uncertain", {"p": p}), ("cost", {"c": c})):
        a = V.asymptotic_limits(vid, params)
        b = V.asymptotic_limits(vid, params, method="ode")
        assert b.theta == pytest.approx(a.theta, abs=1e-5)
        assert b.limit_payoff == pytest.approx(a.limit_payoff, abs=1e-5)

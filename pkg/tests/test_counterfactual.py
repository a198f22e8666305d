from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wrightiv.counterfactual import (
    TariffScenario,
    apply_tariff,
    consumer_surplus_change_exact,
    optimal_tariff,
    pass_through,
    quadratic_stationary_point,
    welfare_polynomial,
)
from wrightiv.exceptions import DegenerateSystemError
from wrightiv.structural import StructuralParams, solve_equilibrium


def hand_substitution(alpha1, beta1, tau, revenue_terms="cubic"):
    """Exact rational evaluation of the welfare polynomials."""
    a, b, t = Fraction(alpha1), Fraction(beta1), Fraction(tau)
    c = b / (b - a)
    dp = c * t
    dy = a * dp
    cs = -c * t - a * c * c * t * t / 2
    rev = t + c * (1 + a) * t * t
    if revenue_terms == "cubic":
        rev += c ** 3 * a ** 2 * t ** 3
    elif revenue_terms == "expanded":
        rev += a * c ** 2 * t ** 3
    return {"c": c, "dp": dp, "dy": dy, "cs": cs, "rev": rev, "welfare": cs + rev}


def test_pass_through_examples():
    assert pass_through(-1.0, 1.0) == 0.5
    assert pass_through(-2.5, 0.0) == 0.0
    assert pass_through(0.0, 1.0) == 1.0
    with pytest.raises(DegenerateSystemError):
        pass_through(0.0, 0.0)


def test_scenario_validation():
    with pytest.raises(ValueError):
        TariffScenario(1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        TariffScenario(-0.1, -1.0, 1.0)
    with pytest.raises(ValueError):
        TariffScenario(0.1, 0.5, 1.0)


def test_zero_tariff_all_zero():
    out = apply_tariff(TariffScenario(0.0, -1.3, 0.7))
    assert (out.delta_p, out.delta_y, out.cs_change_ratio, out.revenue_ratio,
            out.welfare_sum) == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert consumer_surplus_change_exact(TariffScenario(0.0, -1.0, 1.0)) == 0.0


def test_worked_example():
    out = apply_tariff(TariffScenario(0.2, -1.0, 1.0))
    ref = hand_substitution(-1.0, 1.0, 0.2)
    assert out.pass_through_c == 0.5
    assert out.delta_p == pytest.approx(0.1, abs=1e-15)
    assert out.delta_y == pytest.approx(-0.1, abs=1e-15)
    assert out.cs_change_ratio == pytest.approx(-0.095, abs=1e-15)
    assert out.revenue_ratio == pytest.approx(0.201, abs=1e-15)
    assert out.welfare_sum == pytest.approx(0.106, abs=1e-15)
    assert abs(out.welfare_sum - float(ref["welfare"])) <= 1e-15


def test_baseline_levels_shift():
    out = apply_tariff(TariffScenario(0.2, -1.0, 1.0, baseline_p=1.5, baseline_y=-0.5))
    assert out.p_star == pytest.approx(1.6)
    assert out.y_star == pytest.approx(-0.6)


def test_small_tariff_gains_when_pass_through_below_one():
    assert apply_tariff(TariffScenario(1e-4, -1.0, 1.0)).welfare_sum > 0


@pytest.mark.parametrize("terms", ["cubic", "quadratic", "expanded"])
def test_matches_hand_substitution(terms):
    for a in (-2.0, -1.0, -0.25, 0.0):
        for b in (0.0, 0.5, 1.0, 4.0):
            if b - a <= 0:
                continue
            for t in (0.01, 0.1, 0.37):
                out = apply_tariff(TariffScenario(t, a, b), revenue_terms=terms)
                ref = hand_substitution(a, b, t, terms)
                assert abs(out.revenue_ratio - float(ref["rev"])) <= 1e-12
                assert abs(out.cs_change_ratio - float(ref["cs"])) <= 1e-12
                assert abs(out.welfare_sum - float(ref["welfare"])) <= 1e-12


def test_unknown_revenue_terms():
    with pytest.raises(ValueError):
        apply_tariff(TariffScenario(0.1, -1.0, 1.0), revenue_terms="quartic")


def test_expanded_revenue_is_exact_product():
    # tau * (dP + dY + dP dY) expands to the "expanded" polynomial
    for a, b, t in [(-1.0, 1.0, 0.2), (-0.3, 2.0, 0.45), (-3.0, 0.4, 0.05)]:
        out = apply_tariff(TariffScenario(t, a, b), revenue_terms="expanded")
        dp, dy = out.delta_p, out.delta_y
        assert out.revenue_ratio == pytest.approx(t * (1 + dp + dy + dp * dy), abs=1e-15)


def test_trapezoid_example_and_agreement():
    assert consumer_surplus_change_exact(TariffScenario(0.2, -1.0, 1.0)) == pytest.approx(
        -0.095, abs=1e-15)
    for a in (-3.0, -1.0, -0.2, 0.0):
        for b in (0.1, 1.0, 5.0):
            for t in np.round(np.arange(0.01, 0.301, 0.01), 2):
                s = TariffScenario(float(t), a, b)
                poly = apply_tariff(s).cs_change_ratio
                assert abs(poly - consumer_surplus_change_exact(s)) <= 10 * t ** 3


def test_trapezoid_on_levels_is_second_order_close():
    s = TariffScenario(0.01, -1.0, 1.0)
    lv = consumer_surplus_change_exact(s, levels=True)
    assert abs(lv - consumer_surplus_change_exact(s)) <= 10 * s.tau ** 2


def test_quadratic_stationary_point():
    # interior maximum
    t, is_max = quadratic_stationary_point(-3.0, 27.0)
    assert is_max and t == pytest.approx(0.1 / 1.17, rel=1e-12)
    # for symmetric unit elasticities the quadratic is convex: stationary point is a minimum
    t, is_max = quadratic_stationary_point(-1.0, 1.0)
    assert t == pytest.approx(-2.0) and not is_max


def test_optimal_tariff_near_stationary_point():
    grid = np.round(np.arange(0, 5001) * 1e-4, 12)
    curve = optimal_tariff(-3.0, 27.0, grid, revenue_terms="quadratic")
    assert curve.stationary_tau is not None
    assert abs(curve.argmax_tau - curve.stationary_tau) <= 1e-4
    assert curve.argmax_value == pytest.approx(np.max(curve.welfare))


def test_optimal_tariff_convex_case_goes_to_edge():
    curve = optimal_tariff(-1.0, 1.0, np.linspace(0, 0.5, 5001))
    assert curve.stationary_tau is None
    assert curve.argmax_tau == 0.5


def test_optimal_tariff_elastic_supply_no_gain():
    curve = optimal_tariff(-3.0, 1e9, revenue_terms="quadratic")
    assert curve.argmax_tau == 0.0
    assert curve.argmax_value == 0.0


def test_optimal_tariff_tie_break_smallest():
    # c rounds to 1 and alpha1 = -2 cancels the quadratic term: a flat curve
    curve = optimal_tariff(-2.0, 1e300, [0.3, 0.1, 0.2], revenue_terms="quadratic")
    assert np.all(curve.welfare == 0)
    assert curve.argmax_tau == pytest.approx(0.1)
    assert list(curve.tau_grid) == [0.1, 0.2, 0.3]


def test_optimal_tariff_grid_errors():
    with pytest.raises(ValueError):
        optimal_tariff(-1.0, 1.0, [])
    with pytest.raises(ValueError):
        optimal_tariff(-1.0, 1.0, [0.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-5, 0), b=st.floats(0.01, 5))
def test_monotone_start_iff_pass_through_below_one(a, b):
    c = pass_through(a, b)
    slope = (welfare_polynomial(a, b, 1e-7) - welfare_polynomial(a, b, 0.0)) / 1e-7
    assert (slope > 0) == (c < 1) or abs(1 - c) < 1e-6


def test_monotone_start_boundary():
    # inelastic demand: c = 1 and the linear term vanishes
    assert welfare_polynomial(0.0, 1.0, 1e-6) == pytest.approx(1e-12, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-10, 0), b=st.floats(0, 10), t=st.floats(0, 0.99))
def test_sign_contracts(a, b, t):
    if b - a <= 1e-6:
        return
    out = apply_tariff(TariffScenario(t, a, b))
    assert out.delta_p >= 0
    assert out.delta_y <= 0
    assert 0 <= out.pass_through_c <= 1


def test_consistent_with_equilibrium_solver():
    rng = np.random.default_rng(0)
    params = StructuralParams(-0.7, 1.3, (1.0,), (1.0,), (0.0,), (0.0,))
    u_d, u_s = rng.normal(size=50), rng.normal(size=50)
    p, y = solve_equilibrium(params, u_d, u_s)
    for tau in (0.05, 0.2, 0.6):
        # S(p - tau) = beta1 p + (u_s - beta1 tau)
        p_star, y_star = solve_equilibrium(params, u_d, u_s - params.beta1 * tau)
        for i in range(50):
            out = apply_tariff(TariffScenario(tau, params.alpha1, params.beta1, p[i], y[i]))
            assert abs(out.p_star - p_star[i]) <= 1e-12
            assert abs(out.y_star - y_star[i]) <= 1e-12


def test_price_change_linear_in_tau():
    h = 1e-3
    for a, b in [(-1.0, 1.0), (-0.2, 3.0), (-4.0, 0.5)]:
        c = pass_through(a, b)
        for t in (0.0, 0.1, 0.4):
            d0 = apply_tariff(TariffScenario(t, a, b)).delta_p
            d1 = apply_tariff(TariffScenario(t + h, a, b)).delta_p
            assert abs((d1 - d0) / h - c) <= 1e-10


def test_welfare_curve_csv():
    curve = optimal_tariff(-1.0, 1.0, [0.2, 0.0, 0.1])
    lines = curve.to_csv().splitlines()
    assert lines[0] == "tau,cs_ratio,revenue_ratio,welfare_sum"
    assert [float(line.split(",")[0]) for line in lines[1:]] == [0.0, 0.1, 0.2]
    assert float(lines[3].split(",")[3]) == pytest.approx(0.106)

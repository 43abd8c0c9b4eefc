import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idsmix.best_response import (
    BestResponseCurve,
    assumption4_report,
    check_assumption4,
    golden_section_minimize,
    saturation_thresholds,
)
from idsmix.errors import AssumptionViolation
from idsmix.model import InfectionCurve, ThreatModel

FIG_THREAT = ThreatModel(0.7, 1.0, 10.0, 1e-3, 1e3)


def power_brc(gamma=1.0, eps=0.1, threat=FIG_THREAT):
    return BestResponseCurve.build(threat, InfectionCurve.power(eps, gamma))


def test_golden_section_on_parabola():
    x = golden_section_minimize(lambda t: (t - 1.234567) ** 2, -3.0, 7.0, tol=1e-12)
    assert x == pytest.approx(1.234567, abs=1e-6)
    # boundary minimum
    assert golden_section_minimize(lambda t: t, 2.0, 5.0) == pytest.approx(2.0, abs=1e-9)


class TestOptimalInvestment:
    @pytest.mark.parametrize("gamma", [2.0, 5.0, 9.0])
    def test_exact_power_form_is_the_minimizer(self, gamma):
        # first-order condition r L gamma eps^gamma (a + eps)^-(gamma+1) = 1
        brc = power_brc(gamma)
        for r in (0.5, 30.0, 857.5, 1e5):
            a = brc.optimal_investment(r)
            foc = r * 10.0 * gamma * 0.1**gamma * (a + 0.1) ** -(gamma + 1)
            assert foc == pytest.approx(1.0, rel=1e-12)
            assert a == pytest.approx(brc.numeric_investment(r), rel=1e-7)

    def test_omit_gamma_form(self):
        threat = FIG_THREAT
        curve = InfectionCurve.power(0.1, 5.0)
        exact = BestResponseCurve.build(threat, curve)
        omit = BestResponseCurve.build(threat, curve, power_form="omit_gamma")
        r = 857.5
        assert omit.optimal_investment(r) == pytest.approx((r * 10 * 0.1**5) ** (1 / 6) - 0.1, rel=1e-14)
        assert omit.r_min == pytest.approx(exact.r_min * 5, rel=1e-14)
        # it minimizes the cost with loss L / gamma, not the actual cost
        assert exact.cost(r, exact.optimal_investment(r)) < exact.cost(r, omit.optimal_investment(r))
        scaled = BestResponseCurve.build(ThreatModel(0.7, 1.0, 2.0, 1e-3, 1e3), curve)
        assert omit.optimal_investment(r) == pytest.approx(scaled.optimal_investment(r), rel=1e-12)
        g1 = InfectionCurve.power(0.1, 1.0)
        np.testing.assert_allclose(
            BestResponseCurve.build(threat, g1, "omit_gamma").optimal_investment([1.0, 10.0]),
            BestResponseCurve.build(threat, g1).optimal_investment([1.0, 10.0]), rtol=1e-15)
        with pytest.raises(ValueError):
            BestResponseCurve.build(threat, curve, power_form="bogus")

    def test_worked_power_value(self):
        brc = power_brc()
        expected = math.sqrt(10 * 10 * 0.1) - 0.1
        assert expected == pytest.approx(3.0622, abs=1e-4)
        assert brc.optimal_investment(10.0) == pytest.approx(expected, rel=1e-14)
        assert brc.numeric_investment(10.0) == pytest.approx(expected, rel=1e-8)

    def test_zero_risk_invests_minimum(self):
        assert power_brc().optimal_investment(0.0) == FIG_THREAT.i_min

    def test_exponential_at_r_min(self):
        threat = ThreatModel(0.7, 1.0, 10.0, 0.5, 20.0)
        brc = BestResponseCurve.build(threat, InfectionCurve.exponential(1.3))
        r_min = math.exp(0.5 * 1.3) / (10 * 1.3)
        assert brc.r_min == pytest.approx(r_min, rel=1e-15)
        assert brc.optimal_investment(r_min) == 0.5

    def test_ties_go_to_the_boundary(self):
        brc = power_brc()
        assert brc.optimal_investment(brc.r_min) == FIG_THREAT.i_min
        assert brc.optimal_investment(brc.r_max) == FIG_THREAT.i_max
        assert brc.optimal_investment(10 * brc.r_max) == FIG_THREAT.i_max

    def test_rejects_negative_r(self):
        with pytest.raises(ValueError):
            power_brc().optimal_investment(-1.0)

    @pytest.mark.parametrize("gamma", [1.0, 3.0, 9.0])
    def test_monotone(self, gamma):
        brc = power_brc(gamma)
        r = np.geomspace(brc.r_min / 100, brc.r_max * 100, 2000)
        a = brc.optimal_investment(r)
        p = brc.optimal_infection_probability(r)
        assert np.all(np.diff(a) >= 0)
        assert np.all(np.diff(p) <= 0)
        inside = (r > brc.r_min) & (r < brc.r_max)
        assert np.all(np.diff(a[inside]) > 0)
        assert np.all(np.diff(p[inside]) < 0)

    def test_tabulated_matches_golden_section(self):
        knots = np.linspace(0.0, 8.0, 30)
        curve = InfectionCurve.tabulated(knots, np.exp(-0.6 * knots))
        brc = BestResponseCurve.build(ThreatModel(0.7, 1.0, 10.0, 0.0, 8.0), curve)
        r = np.geomspace(brc.r_min * 1.01, brc.r_max * 0.99, 40)
        closed = brc.optimal_investment(r)
        numeric = np.array([brc.numeric_investment(x) for x in r])
        np.testing.assert_allclose(closed, numeric, atol=1e-7)

    def test_no_better_alternative(self, rng):
        # envelope check: 100 random r, 100 random alternative actions each
        for gamma in (1.0, 5.0):
            brc = power_brc(gamma)
            for r in np.exp(rng.uniform(np.log(1e-3), np.log(1e7), 100)):
                best = brc.cost(r, brc.optimal_investment(r))
                alt = rng.uniform(FIG_THREAT.i_min, FIG_THREAT.i_max, 100)
                alt[:50] = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), 50))
                assert np.all(best <= brc.cost(r, alt) * (1 + 1e-14))


class TestInfectionProbability:
    def test_power_closed_form(self):
        for gamma in (1.0, 4.0):
            brc = power_brc(gamma)
            r = np.geomspace(brc.r_min, brc.r_max, 50)
            eps, L = 0.1, 10.0
            expected = eps**gamma / (gamma * r * L * eps**gamma) ** (gamma / (gamma + 1))
            np.testing.assert_allclose(brc.optimal_infection_probability(r), expected, rtol=1e-12)

    def test_saturated_below_r_min(self):
        brc = power_brc(2.0)
        r = np.array([0.0, brc.r_min / 2, brc.r_min])
        np.testing.assert_allclose(brc.optimal_infection_probability(r),
                                   brc.curve(FIG_THREAT.i_min), rtol=1e-15)

    @given(st.floats(0.05, 5.0), st.floats(0.5, 50.0), st.floats(0.0, 2.0), st.floats(0.5, 10.0))
    @settings(max_examples=100)
    def test_exponential_identities(self, xi, loss, i_min, width):
        threat = ThreatModel(0.5, 1.0, loss, i_min, i_min + width)
        brc = BestResponseCurve.build(threat, InfectionCurve.exponential(xi))
        r_min = math.exp(i_min * xi) / (loss * xi)
        r_max = math.exp((i_min + width) * xi) / (loss * xi)
        assert brc.r_min == pytest.approx(r_min, rel=1e-12)
        assert brc.r_max == pytest.approx(r_max, rel=1e-12)
        r = np.geomspace(r_min / 10, r_max * 10, 64)
        r_tilde = np.clip(r, r_min, r_max)
        np.testing.assert_allclose(brc.optimal_infection_probability(r),
                                   1.0 / (r_tilde * loss * xi), rtol=1e-12)
        a = np.clip(np.log(r * loss * xi) / xi, threat.i_min, threat.i_max)
        np.testing.assert_allclose(brc.optimal_investment(r), a, rtol=1e-12, atol=1e-12)


class TestThresholds:
    def test_power_figure_values(self):
        r_min, r_max = saturation_thresholds(FIG_THREAT, InfectionCurve.power(0.1, 1.0))
        assert r_min == pytest.approx(0.010201, rel=1e-12)
        assert r_max == pytest.approx(1000.1**2, rel=1e-12)
        assert r_max == pytest.approx(1.0002e6, rel=1e-4)

    def test_exponential_value(self):
        threat = ThreatModel(0.7, 1.0, 10.0, 0.0, 5.0)
        r_min, _ = saturation_thresholds(threat, InfectionCurve.exponential(1.0))
        assert r_min == pytest.approx(0.1, rel=1e-15)

    def test_power_thresholds_carry_gamma(self):
        r_min, r_max = saturation_thresholds(FIG_THREAT, InfectionCurve.power(0.1, 3.0))
        assert r_min == pytest.approx(0.101**4 / (3 * 10 * 1e-3), rel=1e-12)
        r_min_o, _ = saturation_thresholds(FIG_THREAT, InfectionCurve.power(0.1, 3.0), "omit_gamma")
        assert r_min_o == pytest.approx(3 * r_min, rel=1e-14)
        # I_opt leaves i_min exactly at r_min
        brc = power_brc(3.0)
        assert brc.optimal_investment(r_min * (1 + 1e-9)) > FIG_THREAT.i_min
        assert brc.optimal_investment(r_max) == FIG_THREAT.i_max

    def test_interval_collapse(self):
        for width in (1e-3, 1e-6, 1e-9):
            threat = ThreatModel(0.7, 1.0, 10.0, 1.0, 1.0 + width)
            r_min, r_max = saturation_thresholds(threat, InfectionCurve.power(0.1, 2.0))
            assert r_max / r_min - 1 == pytest.approx(3 * width / 1.1, rel=1e-2)

    def test_constant_curve_rejected(self):
        with pytest.raises(AssumptionViolation):
            saturation_thresholds(FIG_THREAT, InfectionCurve.constant(0.2))
        brc = BestResponseCurve.build(FIG_THREAT, InfectionCurve.constant(0.2))
        assert brc.r_min == brc.r_max == math.inf
        assert brc.optimal_investment(1e9) == FIG_THREAT.i_min

    def test_tabulated_first_order_condition(self):
        knots = np.linspace(0.0, 8.0, 30)
        curve = InfectionCurve.tabulated(knots, np.exp(-0.6 * knots))
        threat = ThreatModel(0.7, 1.0, 10.0, 0.0, 8.0)
        r_min, r_max = saturation_thresholds(threat, curve)
        for a, r in ((0.0, r_min), (8.0, r_max)):
            assert r * threat.loss * float(curve.derivative(a)) + 1 == pytest.approx(0.0, abs=1e-12)
        # close to the exponential closed forms the knots were sampled from
        assert r_min == pytest.approx(1 / 6, rel=0.02)
        assert r_max == pytest.approx(math.exp(4.8) / 6, rel=0.02)


class TestAssumption4:
    @pytest.mark.parametrize("gamma", [1.0, 2.0, 5.0, 9.0])
    def test_power_family_passes(self, gamma):
        assert check_assumption4(power_brc(gamma), grid_size=200).passed

    def test_exponential_family_passes(self):
        brc = BestResponseCurve.build(ThreatModel(0.7, 1, 10, 0, 20), InfectionCurve.exponential(0.5))
        assert check_assumption4(brc).passed

    @pytest.mark.parametrize("chi", [0.3, 1.0, 2.5])
    def test_shifted_power_law_passes_when_shift_small(self, chi):
        # r * dp*/dr is increasing iff nu2 <= chi * r on the range
        r_min, r_max = 1.0, 1e3
        for nu2 in (0.0, 0.5 * chi * r_min, chi * r_min):
            report = assumption4_report(lambda r: 0.7 / (r + nu2) ** chi, r_min, r_max, 300)
            assert report.passed

    @pytest.mark.parametrize("chi", [1.0, 2.5])
    def test_shifted_power_law_stated_bound(self, chi):
        r_min = 1.0
        report = assumption4_report(lambda r: 0.7 / (r + r_min / chi) ** chi, r_min, 1e3, 300)
        assert report.passed

    def test_shifted_power_law_stated_bound_too_loose_below_one(self):
        chi, r_min, r_max = 0.3, 1.0, 1e3
        nu2 = r_min / chi
        report = assumption4_report(lambda r: 0.7 / (r + nu2) ** chi, r_min, r_max, 300)
        assert not report.passed
        # analytic oracle: r * p*' = -chi nu1 r / (r + nu2)^(chi + 1) falls until r = nu2 / chi
        lo, hi = report.violation
        assert hi <= nu2 / chi
        q = lambda r: -chi * 0.7 * r / (r + nu2) ** (chi + 1)
        assert q(hi) < q(lo)

    def test_shifted_power_law_fails_when_shift_large(self):
        report = assumption4_report(lambda r: 1.0 / (r + 100.0) ** 0.5, 1.0, 1e3, 300)
        assert not report.passed
        lo, hi = report.violation
        assert 1.0 <= lo < hi <= 1e3

    def test_tabulated_counterexample_located(self):
        # p = 1.8 - 0.8 sqrt(1 + a) is convex and decreasing, but -1/p' is
        # concave, so p''/p'^2 falls and r * dp*/dr is not increasing
        knots = np.linspace(0.0, 3.0, 31)
        curve = InfectionCurve.tabulated(knots, 1.8 - 0.8 * np.sqrt(1 + knots))
        brc = BestResponseCurve.build(ThreatModel(0.7, 1.0, 10.0, 0.0, 3.0), curve)
        report = check_assumption4(brc, grid_size=100)
        assert not report.passed
        lo, hi = report.violation
        assert brc.r_min < lo < hi < brc.r_max
        assert bool(report) is False

    def test_grid_size_and_degenerate_range(self):
        with pytest.raises(ValueError):
            assumption4_report(lambda r: 1 / r, 1.0, 2.0, grid_size=2)
        with pytest.raises(AssumptionViolation):
            assumption4_report(lambda r: 1 / r, 2.0, 2.0)

    def test_pstar_derivative_power(self):
        brc = power_brc(1.0)
        r = np.geomspace(1.0, 1e4, 20)
        # p* = eps^g (r L eps^g)^(-g/(g+1)) with g = 1: 0.1 * (r)^(-1/2)
        exact = -0.5 * 0.1 * r ** -1.5
        np.testing.assert_allclose(brc.pstar_derivative(r), exact, rtol=1e-8)

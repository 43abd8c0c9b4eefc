import numpy as np
import pytest
from scipy import stats

from idsmix.errors import ModelError
from idsmix.model import (
    InfectionCurve,
    PopulationProfile,
    StrategyProfile,
    ThreatModel,
    make_power_law_population,
)
from idsmix.validation_sim import first_hop_expectation, sample_network, simulate_first_hop

THREAT = ThreatModel(0.7, 1.0, 10.0, 1e-3, 1e3)
CURVE = InfectionCurve.power(0.1, 1.0)


@pytest.fixture(scope="module")
def pop():
    return make_power_law_population(20, 2)


@pytest.fixture(scope="module")
def net(pop):
    return sample_network(pop, 5000, seed=3)


def _profile(size, a=0.5):
    return StrategyProfile(np.full(size, a))


class TestSampleNetwork:
    def test_single_degree_is_perfect_matching(self):
        one = PopulationProfile.from_sizes([1.0])
        net = sample_network(one, 10, seed=0)
        assert net.edges.shape == (5, 2)
        assert np.all(net.degrees == 1)
        assert np.array_equal(np.sort(net.edges.ravel()), np.arange(10))

    def test_too_few_agents(self):
        with pytest.raises(ModelError):
            sample_network(PopulationProfile.from_sizes([1.0, 1.0, 1.0]), 3, seed=0)

    def test_unknown_sampling(self, pop):
        with pytest.raises(ValueError):
            sample_network(pop, 100, seed=0, degree_sampling="poisson")

    def test_simple_graph_with_declared_degrees(self, net):
        u, v = net.edges[:, 0], net.edges[:, 1]
        assert np.all(u < v)
        assert len({(a, b) for a, b in net.edges.tolist()}) == len(net.edges)
        realized = np.bincount(net.edges.ravel(), minlength=net.n)
        np.testing.assert_array_equal(realized, net.degrees)

    def test_stratified_histogram_matches_quotas(self, pop, net):
        hist = net.degree_histogram
        expected = 5000 * pop.fractions
        # rounding plus at most one parity bump
        assert np.all(np.abs(hist - expected[:hist.size]) <= 2)

    def test_multinomial_histogram_chi_square(self, pop):
        net = sample_network(pop, 20000, seed=4, degree_sampling="multinomial")
        hist = np.bincount(net.degrees, minlength=21)[1:].astype(float)
        expected = 20000 * pop.fractions
        # pool the sparse tail so every cell expects at least 5
        cut = int(np.nonzero(np.cumsum(expected[::-1]) >= 5)[0][0])
        k = 20 - cut
        obs = np.append(hist[:k - 1], hist[k - 1:].sum())
        exp = np.append(expected[:k - 1], expected[k - 1:].sum())
        assert stats.chisquare(obs, exp).pvalue > 0.001

    def test_deterministic(self, pop):
        a = sample_network(pop, 500, seed=9)
        b = sample_network(pop, 500, seed=9)
        np.testing.assert_array_equal(a.edges, b.edges)
        np.testing.assert_array_equal(a.degrees, b.degrees)


class TestSimulateFirstHop:
    def test_certain_infection_counts_every_edge(self, net):
        threat = ThreatModel(1.0, 1.0, 10.0, 0.0, 1.0)
        out = simulate_first_hop(net, threat, InfectionCurve.constant(1.0), _profile(20), 5, seed=0)
        assert out.first_hop_attacks_per_agent == pytest.approx(net.degrees.mean(), rel=1e-15)
        assert out.realized_expected == pytest.approx(net.degrees.mean(), rel=1e-15)
        assert out.std_error == 0.0

    def test_no_infections(self, net):
        out = simulate_first_hop(net, THREAT, InfectionCurve.constant(0.0), _profile(20), 5, seed=0)
        assert out.first_hop_attacks_per_agent == 0.0

    def test_expectation_formula(self, pop):
        prof = StrategyProfile(np.linspace(0.1, 2.0, 20))
        p = CURVE(prof.investments)
        by_hand = sum(THREAT.tau_a * THREAT.beta_ia * (d + 1) * pop.fractions[d] * p[d] for d in range(20))
        assert first_hop_expectation(pop, THREAT, CURVE, prof) == pytest.approx(by_hand, rel=1e-13)

    def test_within_three_standard_errors(self, pop, net):
        out = simulate_first_hop(net, THREAT, CURVE, _profile(20), 200, seed=1, pop=pop)
        assert abs(out.first_hop_attacks_per_agent - out.realized_expected) <= 3 * out.std_error
        assert abs(out.z_score) <= 3

    def test_direct_infection_rate(self, net):
        out = simulate_first_hop(net, THREAT, CURVE, _profile(20), 200, seed=2)
        seen = net.degree_histogram > 200
        target = THREAT.tau_a * float(CURVE(0.5))
        assert np.all(np.abs(out.per_degree_direct_infection[:seen.size][seen] - target) < 0.01)

    def test_reproducible(self, net):
        a = simulate_first_hop(net, THREAT, CURVE, _profile(20), 20, seed=8)
        b = simulate_first_hop(net, THREAT, CURVE, _profile(20), 20, seed=8)
        assert a.first_hop_attacks_per_agent == b.first_hop_attacks_per_agent

    def test_standard_error_scales(self, net):
        se = [simulate_first_hop(net, THREAT, CURVE, _profile(20), reps, seed=5).std_error
              for reps in (50, 200, 800)]
        # SE halves when reps quadruple, within sampling noise of the SD estimate
        assert se[0] / se[1] == pytest.approx(2.0, rel=0.25)
        assert se[1] / se[2] == pytest.approx(2.0, rel=0.25)

    def test_rejects_bad_inputs(self, net):
        with pytest.raises(ValueError):
            simulate_first_hop(net, THREAT, CURVE, _profile(20), 0, seed=0)
        with pytest.raises(ModelError):
            simulate_first_hop(net, THREAT, CURVE, _profile(3), 5, seed=0)

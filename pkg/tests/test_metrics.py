import math

import numpy as np
import pytest

from epiwalk import metrics, simulate
from epiwalk.errors import ValidationError
from epiwalk.graph import degree_distribution, from_edges, generate_synthetic
from conftest import complete_graph, cycle_graph, path_graph, star_graph


class TestTransmissionPotential:
    def test_uniform_is_one(self):
        assert metrics.transmission_potential(np.full(1024, 1 / 1024), 1024) == pytest.approx(1.0, abs=1e-12)

    def test_point_mass_is_zero(self):
        beta = np.zeros(16)
        beta[3] = 1.0
        assert metrics.transmission_potential(beta, 16) == 0.0

    def test_half_half(self):
        assert metrics.transmission_potential([0.5, 0.5, 0.0, 0.0], 4) == pytest.approx(0.5, abs=1e-12)

    def test_all_ones_is_zero(self):
        # each entry certain: no uncertainty left in the vector as given
        assert metrics.transmission_potential(np.ones(8), 8) == 0.0

    def test_bounds_property(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 50))
            beta = rng.random(n)
            val = metrics.transmission_potential(beta, n)
            assert -1e-12 <= val
            # entropy is maximized by the uniform distribution for vectors
            # summing to 1; unnormalized vectors can exceed 1 only via mass
            if abs(beta.sum() - 1.0) < 1e-9:
                assert val <= 1.0 + 1e-12

    def test_rejects_small_n(self):
        with pytest.raises(ValidationError):
            metrics.transmission_potential([1.0], 1)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            metrics.transmission_potential([1.5, 0.0], 2)


class TestPowerIterate:
    def test_zero_steps_identity(self):
        p = metrics.transition_matrix(complete_graph(4))
        q0 = np.array([1.0, 0.0, 0.0, 0.0])
        assert np.array_equal(metrics.power_iterate(q0, p, 0), q0)

    def test_k4_one_step(self):
        p = metrics.transition_matrix(complete_graph(4))
        q = metrics.power_iterate(np.array([1.0, 0, 0, 0]), p, 1)
        assert np.allclose(q, [0, 1 / 3, 1 / 3, 1 / 3], atol=1e-15)

    def test_cycle4_two_steps(self):
        p = metrics.transition_matrix(cycle_graph(4))
        q = metrics.power_iterate(np.array([1.0, 0, 0, 0]), p, 2)
        assert np.allclose(q, [0.5, 0, 0.5, 0], atol=1e-15)

    def test_mass_preserved(self, rng):
        g = generate_synthetic("erdos-renyi", {"n": 40, "p": 0.2}, rng)
        p = metrics.transition_matrix(g)
        q0 = rng.random(40)
        q0 /= q0.sum()
        for t in (1, 5, 20):
            assert abs(metrics.power_iterate(q0, p, t).sum() - 1.0) < 1e-9

    def test_dimension_mismatch(self):
        p = metrics.transition_matrix(complete_graph(4))
        with pytest.raises(ValidationError):
            metrics.power_iterate(np.array([0.5, 0.5]), p, 1)


class TestStationaryDistribution:
    def test_standard_equals_degree_distribution(self, rng):
        for _ in range(4):
            g = generate_synthetic("erdos-renyi", {"n": 80, "p": 0.1}, rng)
            p = metrics.transition_matrix(g, "standard", lazy=True)
            pi = metrics.stationary_distribution(p)
            assert np.abs(pi - degree_distribution(g).probabilities).max() < 1e-8

    def test_metropolis_k4_uniform(self):
        p = metrics.transition_matrix(complete_graph(4), "metropolis")
        pi = metrics.stationary_distribution(p)
        assert np.allclose(pi, 0.25, atol=1e-10)

    def test_bipartite_star_via_lazy_iteration(self):
        p = metrics.transition_matrix(star_graph(4), "standard")
        pi = metrics.stationary_distribution(p)
        assert pi[0] == pytest.approx(0.5, abs=1e-9)
        assert np.allclose(pi[1:], 0.125, atol=1e-9)

    def test_rows_stochastic(self, rng):
        g = generate_synthetic("preferential-attachment", {"n": 60, "m": 2}, rng)
        for variant in ("standard", "metropolis"):
            p = metrics.transition_matrix(g, variant)
            rows = np.asarray(p.matrix.sum(axis=1)).ravel()
            assert np.abs(rows - 1.0).max() < 1e-12


class TestRelativePointwiseDistance:
    def test_zero_at_stationary(self):
        pi = np.array([0.25, 0.25, 0.5])
        assert metrics.relative_pointwise_distance(pi, pi) == 0.0

    def test_k5_one_step(self):
        p = metrics.transition_matrix(complete_graph(5))
        q = metrics.power_iterate(np.array([1.0, 0, 0, 0, 0]), p, 1)
        pi = np.full(5, 0.2)
        # the vacated start entry dominates: |0 - 1/5| / (1/5) = 1
        assert metrics.relative_pointwise_distance(q, pi) == pytest.approx(1.0)

    def test_point_mass_vs_uniform(self):
        n = 64
        q = np.zeros(n)
        q[0] = 1.0
        assert metrics.relative_pointwise_distance(q, np.full(n, 1 / n)) == pytest.approx(n - 1)

    def test_zero_pi_rejected(self):
        with pytest.raises(ValidationError):
            metrics.relative_pointwise_distance(np.array([1.0, 0.0]), np.array([1.0, 0.0]))

    def test_eventually_nonincreasing_on_nonbipartite(self, rng):
        g = generate_synthetic("erdos-renyi", {"n": 30, "p": 0.3}, rng)
        p = metrics.transition_matrix(g, "standard", lazy=True)
        pi = metrics.stationary_distribution(p)
        q = np.zeros(30)
        q[0] = 1.0
        deltas = []
        for _ in range(60):
            q = metrics.power_iterate(q, p, 1)
            deltas.append(metrics.relative_pointwise_distance(q, pi))
        for t in range(10, 50):
            assert deltas[t + 10] <= deltas[t] + 1e-9


class TestNetworkMaxPotential:
    def test_regular_graph_is_one(self):
        assert metrics.network_max_potential(cycle_graph(12)) == pytest.approx(1.0, abs=1e-9)

    def test_star(self):
        expected = 2.0 / math.log2(5)
        assert metrics.network_max_potential(star_graph(4)) == pytest.approx(expected, abs=1e-9)

    def test_disconnected_rejected(self):
        g = from_edges([(0, 1), (2, 3)], node_count=4)
        with pytest.raises(ValidationError):
            metrics.network_max_potential(g)


class TestContainmentRecursion:
    def test_empty_tour(self):
        assert metrics.chain_containment_probability(0.5, 0) == 1.0

    def test_fifteen_steps(self):
        assert metrics.chain_containment_probability(0.5, 15) == pytest.approx(3.0517578125e-5, rel=1e-12)

    def test_twenty_steps(self):
        assert metrics.chain_containment_probability(0.5, 20) == pytest.approx(9.5367431640625e-7, rel=1e-12)

    def test_equals_power(self, rng):
        for _ in range(300):
            p = float(rng.uniform(0.01, 0.99))
            m = int(rng.integers(0, 60))
            got = metrics.chain_containment_probability(p, m)
            assert got == pytest.approx(p**m, rel=1e-15)

    def test_domain(self):
        with pytest.raises(ValidationError):
            metrics.chain_containment_probability(1.0, 3)
        with pytest.raises(ValidationError):
            metrics.chain_containment_probability(0.5, -1)


class TestFullVisibilityBound:
    def test_t_zero(self):
        assert metrics.full_visibility_bound(0.3, 0.2, 0) == pytest.approx(1 + 0.7 * 0.2 / 10)

    def test_direct_evaluation(self):
        expected = (1 + 0.5 * 0.1 / 10) * math.exp(-100 * 0.25 * 0.1 / 20)
        assert metrics.full_visibility_bound(0.5, 0.1, 100) == pytest.approx(expected, rel=1e-12)

    def test_decreasing_in_t(self):
        vals = [metrics.full_visibility_bound(0.4, 0.3, t) for t in range(0, 50, 5)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValidationError):
            metrics.full_visibility_bound(1.2, 0.5, 1)
        with pytest.raises(ValidationError):
            metrics.full_visibility_bound(0.5, 0.0, 1)


def _dense_lambda2(p):
    vals = np.abs(np.linalg.eigvals(p.matrix.toarray()))
    vals.sort()
    return vals[-2]


class TestEigenvalueGap:
    def test_k4_lazy_matches_dense_oracle(self):
        p = metrics.transition_matrix(complete_graph(4), "standard", lazy=True)
        gap = metrics.eigenvalue_gap(p)
        assert gap.lambda2 == pytest.approx(_dense_lambda2(p), abs=1e-6)
        assert gap.value == pytest.approx(1 - 1 / 3, abs=1e-6)
        assert gap.tolerance == 1e-8

    def test_two_cliques_mix_slower_than_one(self, rng):
        from conftest import two_cliques_bridged

        single = metrics.transition_matrix(complete_graph(8), "standard", lazy=True)
        joined = metrics.transition_matrix(two_cliques_bridged(8), "standard", lazy=True)
        g1 = metrics.eigenvalue_gap(single)
        g2 = metrics.eigenvalue_gap(joined)
        assert g2.value < g1.value
        assert g2.lambda2 == pytest.approx(_dense_lambda2(joined), abs=1e-6)

    def test_rewiring_widens_gap(self, rng):
        ring = generate_synthetic("small-world", {"n": 50, "k": 6, "beta": 0.0}, rng)
        rewired = generate_synthetic("small-world", {"n": 50, "k": 6, "beta": 0.3}, rng)
        p_ring = metrics.transition_matrix(ring, "standard", lazy=True)
        p_rew = metrics.transition_matrix(rewired, "standard", lazy=True)
        gap_ring = metrics.eigenvalue_gap(p_ring)
        gap_rew = metrics.eigenvalue_gap(p_rew)
        assert gap_rew.value > gap_ring.value
        assert gap_ring.lambda2 == pytest.approx(_dense_lambda2(p_ring), abs=1e-5)
        assert gap_rew.lambda2 == pytest.approx(_dense_lambda2(p_rew), abs=1e-5)


class TestInfectionProbabilities:
    def test_path_seeded_at_end(self, rng):
        g = path_graph(3)
        trials = [
            simulate.run_trial(g, "null", None, 0.0, 1, np.random.default_rng(s), seeds=np.array([0]))
            for s in range(20)
        ]
        beta = metrics.infection_probabilities(trials, 1)
        assert beta[0] == 1.0
        assert beta[1] == 1.0  # only possible event sequence: 0 infects 1
        assert beta[2] == 0.0

    def test_monte_carlo_matches_enumeration(self):
        # path 0-1-2 seeded at 0 for two rounds: P(2 infected) = 1/2 exactly
        g = path_graph(3)
        trials = [
            simulate.run_trial(g, "null", None, 0.0, 2, np.random.default_rng(s), seeds=np.array([0]))
            for s in range(20_000)
        ]
        beta = metrics.infection_probabilities(trials, 2)
        sigma = math.sqrt(0.25 / len(trials))
        assert abs(beta[2] - 0.5) < 3 * sigma
        assert beta[1] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            metrics.infection_probabilities([], 1)


class TestPotentialSeries:
    def test_distribution_mode_hand_values(self):
        counts = np.array([[1, 2, 4]])
        s = metrics.series_from_counts(counts, 4, mode="distribution")
        assert np.allclose(s.mean, [0.0, 0.5, 1.0])
        assert np.array_equal(s.minimum, s.maximum)

    def test_min_le_mean_le_max(self, rng):
        counts = rng.integers(1, 100, size=(50, 8))
        s = metrics.series_from_counts(counts, 100, mode="distribution")
        assert np.all(s.minimum <= s.mean + 1e-15)
        assert np.all(s.mean <= s.maximum + 1e-15)
        assert np.all((0 <= s.minimum) & (s.maximum <= 1.0 + 1e-12))

    def test_bernoulli_mode(self):
        counts = np.array([[1, 2], [1, 2]])
        hits = np.array([[1, 0, 1, 0], [2, 1, 1, 0]])  # rounds x nodes
        s = metrics.series_from_counts(counts, 4, mode="bernoulli", node_hits_by_round=hits)
        # round 1 frequencies: (1, 0.5, 0.5, 0); mean binary entropy = 0.5
        assert s.mean[1] == pytest.approx(0.5)
        assert s.mean[0] == pytest.approx((0.0 + 1.0 + 1.0 + 0.0) / 4)

    def test_from_trials(self, rng):
        g = complete_graph(10)
        trials = [
            simulate.run_trial(g, "null", None, 0.0, 5, np.random.default_rng(s), seeds=1)
            for s in range(10)
        ]
        s = metrics.potential_series(trials, 10, 5, mode="distribution")
        assert s.trial_count == 10
        assert s.mean.shape == (6,)
        s2 = metrics.potential_series(trials, 10, 5, mode="bernoulli")
        assert s2.mean.shape == (6,)

import math

import numpy as np
import pytest

from epiwalk import simulate
from epiwalk.errors import ValidationError
from epiwalk.graph import from_edges, generate_synthetic, sample_visibility
from epiwalk.simulate import Status, measure_r0, replay_events, run_trial, seed_infection, spread_round
from conftest import complete_graph, path_graph, star_graph, two_cliques_bridged


class TestSeedInfection:
    def test_fraction_ceiling(self, rng):
        g = complete_graph(150)
        st = seed_infection(g, 0.01, rng)
        assert int((st.status == Status.INFECTED).sum()) == 2  # ceil(1.5)

    def test_count(self, rng):
        st = seed_infection(complete_graph(30), 5, rng)
        assert int((st.status == Status.INFECTED).sum()) == 5

    def test_everyone(self, rng):
        st = seed_infection(complete_graph(12), 1.0, rng)
        assert int((st.status == Status.INFECTED).sum()) == 12

    def test_explicit_nodes(self, rng):
        st = seed_infection(complete_graph(8), np.array([2, 5]), rng)
        assert sorted(np.flatnonzero(st.status == Status.INFECTED)) == [2, 5]

    def test_rejects_zero_and_excess(self, rng):
        with pytest.raises(ValidationError):
            seed_infection(complete_graph(4), 0, rng)
        with pytest.raises(ValidationError):
            seed_infection(complete_graph(4), 5, rng)


class TestSpreadRound:
    def test_path_one_round_deterministic(self, rng):
        g = path_graph(3)
        st = seed_infection(g, np.array([0]), rng)
        nxt = spread_round(g, st, rng)
        assert nxt.status[1] == Status.INFECTED  # only neighbor
        assert nxt.status[2] == Status.SUSCEPTIBLE
        assert nxt.round == 1
        assert st.status[1] == Status.SUSCEPTIBLE  # input untouched

    def test_isolated_index_case_spreads_nothing(self, rng):
        g = star_graph(4)
        st = seed_infection(g, np.array([0]), rng)
        st.status[0] = Status.ISOLATED_INFECTED
        nxt = spread_round(g, st, rng)
        assert nxt.round == st.round + 1
        assert np.array_equal(nxt.status, st.status)
        assert not nxt.events

    def test_star_coupon_collector(self):
        # hub infects a uniform leaf per round: E[rounds to all 4] = 4*H4
        g = star_graph(4)
        total = 0
        trials = 20_000
        for s in range(trials):
            tr = run_trial(g, "null", None, 0.0, 60, np.random.default_rng(s), seeds=np.array([0]))
            assert tr.infection_round.min() >= 0
            total += int(tr.infection_round.max())
        expected = 4 * (1 + 1 / 2 + 1 / 3 + 1 / 4)
        assert abs(total / trials - expected) / expected < 0.02

    def test_one_new_infection_per_source_per_round(self, rng):
        g = star_graph(6)
        st = seed_infection(g, np.array([0]), rng)
        nxt = spread_round(g, st, rng)
        assert int((nxt.status == Status.INFECTED).sum()) == 2


class TestRunTrial:
    def test_null_complete_graph_saturates(self):
        tr = run_trial(complete_graph(10), "null", None, 0.0, 20, np.random.default_rng(3), seeds=1)
        assert tr.infected_count_by_round[-1] == 10

    def test_unknown_strategy(self, rng):
        with pytest.raises(ValidationError):
            run_trial(complete_graph(4), "mystery", None, 0.0, 5, rng)

    @pytest.mark.parametrize("strategy", ["spreader-central", "spreader-walk", "superlink"])
    def test_full_budget_full_visibility_stops_everything(self, strategy, rng):
        g = generate_synthetic("erdos-renyi", {"n": 40, "p": 0.3}, rng)
        view = sample_visibility(g, 1.0, rng)
        tr = run_trial(g, strategy, view, 1.0, 10, rng, seeds=2)
        assert np.all(tr.new_infections_by_round[1:] == 0)

    def test_ct_full_budget_stops_after_first_round(self, rng):
        g = generate_synthetic("erdos-renyi", {"n": 40, "p": 0.3}, rng)
        view = sample_visibility(g, 1.0, rng)
        tr = run_trial(g, "ct", view, 1.0, 10, rng, seeds=2)
        # tracing alternates with spreading, so round 1 may infect; never after
        assert np.all(tr.new_infections_by_round[2:] == 0)

    def test_ct_confines_to_seeded_cluster(self):
        # two 6-node clusters, one bridge; full visibility, ample budget
        g = two_cliques_bridged(6)
        for s in range(200):
            tr = run_trial(
                g, "ct", sample_visibility(g, 1.0, np.random.default_rng(s)), 1.0, 20,
                np.random.default_rng(s), seeds=np.array([2]),  # not a bridge endpoint
            )
            infected = np.flatnonzero(tr.infection_round >= 0)
            assert infected.max() < 6, f"seed {s} leaked across the bridge"

    def test_monotone_infected_and_isolated(self, rng):
        g = generate_synthetic("small-world", {"n": 100, "k": 6, "beta": 0.2}, rng)
        view = sample_visibility(g, 0.5, rng)
        tr = run_trial(g, "ct", view, 0.2, 15, rng, seeds=0.05)
        assert np.all(np.diff(tr.infected_count_by_round) >= 0)
        assert np.all(np.diff(tr.isolated_count_by_round) >= 0)

    def test_budget_safety(self, rng):
        g = generate_synthetic("erdos-renyi", {"n": 60, "p": 0.15}, rng)
        for q in (0.0, 0.1, 0.37):
            cap = math.ceil(q * 60)
            for strategy in ("ct", "spreader-central", "superlink"):
                view = sample_visibility(g, 0.6, rng)
                tr = run_trial(g, strategy, view, q, 10, rng, seeds=3)
                assert tr.isolated_count_by_round.max() <= cap

    def test_null_results_independent_of_visibility(self):
        g = generate_synthetic("small-world", {"n": 80, "k": 6, "beta": 0.1},
                               np.random.default_rng(1))
        views = [
            sample_visibility(g, v, np.random.default_rng(99)) for v in (0.0, 0.5, 1.0)
        ]
        results = [
            run_trial(g, "null", view, 0.3, 12, np.random.default_rng(5), seeds=2)
            for view in views
        ]
        for tr in results[1:]:
            assert np.array_equal(tr.infection_round, results[0].infection_round)
            assert np.array_equal(tr.infected_count_by_round, results[0].infected_count_by_round)

    def test_determinism(self, rng):
        g = generate_synthetic("erdos-renyi", {"n": 70, "p": 0.1}, rng)
        def one(seed):
            r = np.random.default_rng(seed)
            view = sample_visibility(g, 0.4, r)
            return run_trial(g, "superlink", view, 0.25, 12, r, seeds=0.02)
        a, b = one(42), one(42)
        assert np.array_equal(a.infection_round, b.infection_round)
        assert np.array_equal(a.events, b.events)
        assert np.array_equal(a.isolated_count_by_round, b.isolated_count_by_round)

    def test_event_log_replays_to_final_state(self, rng):
        g = generate_synthetic("small-world", {"n": 60, "k": 4, "beta": 0.3}, rng)
        view = sample_visibility(g, 0.7, rng)
        tr = run_trial(g, "ct", view, 0.3, 15, rng, seeds=2)
        isolated = (tr.final_status == Status.ISOLATED_SUSCEPTIBLE) | (
            tr.final_status == Status.ISOLATED_INFECTED
        )
        rebuilt = replay_events(60, tr.index_cases, tr.events, isolated)
        assert np.array_equal(rebuilt, tr.final_status)

    def test_events_reference_graph_edges(self, rng):
        g = generate_synthetic("erdos-renyi", {"n": 40, "p": 0.15}, rng)
        tr = run_trial(g, "null", None, 0.0, 10, rng, seeds=2)
        edges = {tuple(e) for e in g.edges()}
        for _, src, dst in tr.events:
            assert (min(src, dst), max(src, dst)) in edges


class TestMeasureR0:
    def test_path_index_case_infects_one(self):
        g = path_graph(3)
        trials = [
            run_trial(g, "null", None, 0.0, 30, np.random.default_rng(s), seeds=np.array([0]))
            for s in range(50)
        ]
        assert measure_r0(trials) == pytest.approx(1.0)

    def test_isolated_index_case_zero(self, rng):
        g = star_graph(4)
        view = sample_visibility(g, 1.0, rng)
        # budget for exactly one node: the hub (max degree) gets isolated
        trials = [
            run_trial(g, "spreader-central", view, 0.2, 10,
                      np.random.default_rng(s), seeds=np.array([0]))
            for s in range(10)
        ]
        assert measure_r0(trials) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            measure_r0([])

"""Engine behavior: initialization, critical-arm selection, round mechanics,
elimination, termination, and serialization."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from coarserank import bernoulli as bn
from coarserank import engine as eng

MEANS_B = (
    0.5, 0.45, 0.425, 0.4, 0.375, 0.35, 0.325, 0.3,
    0.275, 0.25, 0.225, 0.2, 0.175, 0.15, 0.125,
)


def schedule_for(spec: eng.ClusterSpec, delta: float = 0.1) -> bn.ExplorationSchedule:
    return bn.ExplorationSchedule.default_for(delta, spec.num_arms, spec.num_clusters)


def bernoulli_sampler(means, seed):
    rng = random.Random(seed)
    return lambda arm: 1.0 if rng.random() < means[arm] else 0.0


def constant_sampler(values):
    return lambda arm: values[arm]


class TestClusterSpec:
    def test_valid(self):
        spec = eng.ClusterSpec(boundaries=(3, 12, 15), num_arms=15)
        assert spec.num_clusters == 3
        assert spec.cluster_sizes == (3, 9, 3)
        assert list(spec.interior_boundaries()) == [1, 2]
        assert spec.kappa(1) == 3 and spec.kappa(3) == 15

    def test_invalid(self):
        with pytest.raises(ValueError):
            eng.ClusterSpec(boundaries=(15,), num_arms=15)  # single cluster
        with pytest.raises(ValueError):
            eng.ClusterSpec(boundaries=(0, 15), num_arms=15)
        with pytest.raises(ValueError):
            eng.ClusterSpec(boundaries=(5, 5, 15), num_arms=15)
        with pytest.raises(ValueError):
            eng.ClusterSpec(boundaries=(3, 12), num_arms=15)  # last != K


class TestInit:
    def test_two_arms_boundary_stays_active(self):
        spec = eng.ClusterSpec(boundaries=(1, 2), num_arms=2)
        state = eng.init(spec, 0.0, schedule_for(spec), [1.0, 0.0])
        assert [a.mean_hat for a in state.arms] == [1.0, 0.0]
        assert [a.pulls for a in state.arms] == [1, 1]
        # one sample each can never separate at this confidence level
        assert state.active == frozenset({1})

    def test_huge_epsilon_finishes_immediately(self):
        spec = eng.ClusterSpec(boundaries=(1, 3), num_arms=3)
        state = eng.init(spec, 2.0, schedule_for(spec), [1.0, 0.0, 1.0])
        assert state.active == frozenset()
        assert state.finished

    def test_identical_rewards_tie_break_by_id(self):
        spec = eng.ClusterSpec(boundaries=(1, 3), num_arms=3)
        state = eng.init(spec, 0.0, schedule_for(spec), [1.0, 1.0, 1.0])
        ranking = eng.result(state)
        assert ranking.sigma == (1, 2, 3)
        assert eng.critical_arms(state, 1) == (0, 1)

    def test_reward_validation(self):
        spec = eng.ClusterSpec(boundaries=(1, 2), num_arms=2)
        with pytest.raises(ValueError):
            eng.init(spec, 0.0, schedule_for(spec), [1.5, 0.0])
        with pytest.raises(ValueError):
            eng.init(spec, 0.0, schedule_for(spec), [1.0])


class TestCriticalArms:
    def make_state(self, stats, boundaries):
        spec = eng.ClusterSpec(boundaries=boundaries, num_arms=len(stats))
        sched = schedule_for(spec)
        arms = tuple(
            eng.ArmStats(pulls=1, reward_sum=m, mean_hat=m, lower=lo, upper=up)
            for m, lo, up in stats
        )
        return eng.EngineState(
            t=1,
            arms=arms,
            active=frozenset(spec.interior_boundaries()),
            epsilon=0.0,
            schedule=sched,
            spec=spec,
        )

    def test_textbook_selection(self):
        state = self.make_state(
            [(0.8, 0.6, 0.9), (0.5, 0.3, 0.7), (0.4, 0.2, 0.6)],
            boundaries=(1, 3),
        )
        # top set is {arm 0}; arm 1 holds the larger upper bound outside
        assert eng.critical_arms(state, 1) == (0, 1)

    def test_singleton_complement(self):
        state = self.make_state(
            [(0.8, 0.6, 0.9), (0.5, 0.3, 0.7), (0.4, 0.2, 0.6)],
            boundaries=(2, 3),
        )
        l, u = eng.critical_arms(state, 1)
        assert u == 2  # only arm outside the top-2 set
        assert l == 1  # smaller lower bound inside

    def test_all_ties_pick_lowest_ids(self):
        state = self.make_state(
            [(0.5, 0.2, 0.8)] * 4,
            boundaries=(2, 4),
        )
        assert eng.critical_arms(state, 1) == (0, 2)

    def test_inactive_boundary_rejected(self):
        state = self.make_state(
            [(0.8, 0.6, 0.9), (0.5, 0.3, 0.7)],
            boundaries=(1, 2),
        )
        with pytest.raises(ValueError):
            eng.critical_arms(state, 2)


class TestStep:
    def test_two_samples_per_active_boundary(self):
        spec = eng.ClusterSpec(boundaries=(1, 2), num_arms=2)
        calls = []

        def sampler(arm):
            calls.append(arm)
            return 0.5

        state = eng.init(spec, 0.0, schedule_for(spec), [0.6, 0.4])
        state = eng.step(state, sampler)
        assert len(calls) == 2
        assert state.t == 2

    def test_six_samples_with_three_boundaries(self):
        spec = eng.ClusterSpec(boundaries=(1, 2, 3, 4), num_arms=4)
        calls = []

        def sampler(arm):
            calls.append(arm)
            return 0.5

        state = eng.init(spec, 0.0, schedule_for(spec), [0.9, 0.7, 0.5, 0.3])
        assert state.active == frozenset({1, 2, 3})
        eng.step(state, sampler)
        assert len(calls) == 6

    def test_sampler_error_leaves_state_usable(self):
        spec = eng.ClusterSpec(boundaries=(1, 2), num_arms=2)
        state = eng.init(spec, 0.0, schedule_for(spec), [1.0, 0.0])

        def broken(arm):
            raise RuntimeError("oracle offline")

        with pytest.raises(RuntimeError):
            eng.step(state, broken)
        # the original state is a value; it must still step fine afterwards
        after = eng.step(state, lambda arm: 1.0)
        assert after.t == 2

    def test_reward_range_enforced(self):
        spec = eng.ClusterSpec(boundaries=(1, 2), num_arms=2)
        state = eng.init(spec, 0.0, schedule_for(spec), [1.0, 0.0])
        with pytest.raises(ValueError):
            eng.step(state, lambda arm: 1.0001)


class TestResult:
    def test_sorting_and_clusters(self):
        spec = eng.ClusterSpec(boundaries=(1, 3), num_arms=3)
        sched = schedule_for(spec)
        state = eng.init(spec, 0.0, sched, [0.0, 1.0, 1.0])
        # means (0, 1, 1): arm 1 first by mean, arm 2 next (tie with arm 1
        # impossible: different means), arm 0 last
        ranking = eng.result(state)
        assert ranking.sigma == (3, 1, 2)
        assert ranking.clusters == (frozenset({1}), frozenset({0, 2}))
        assert ranking.order == (1, 2, 0)

    def test_last_cluster_singleton(self):
        spec = eng.ClusterSpec(boundaries=(3, 4), num_arms=4)
        state = eng.init(spec, 0.0, schedule_for(spec), [0.2, 0.9, 0.5, 0.1])
        ranking = eng.result(state)
        assert ranking.clusters[-1] == frozenset({3})


class TestRunToCompletion:
    def test_huge_epsilon_costs_only_initialization(self):
        spec = eng.ClusterSpec(boundaries=(2, 5), num_arms=5)
        out = eng.run_to_completion(
            spec, 2.0, schedule_for(spec), bernoulli_sampler([0.5] * 5, 1)
        )
        assert out.total_samples == 5
        assert out.natural
        assert out.pulls == (1, 1, 1, 1, 1)

    def test_deterministic_constants_sort_correctly(self):
        values = (0.9, 0.7, 0.5, 0.3, 0.1)
        spec = eng.ClusterSpec(boundaries=(2, 5), num_arms=5)
        out = eng.run_to_completion(spec, 0.0, schedule_for(spec), constant_sampler(values))
        assert out.natural
        assert out.ranking.clusters == (frozenset({0, 1}), frozenset({2, 3, 4}))
        assert out.ranking.order == (0, 1, 2, 3, 4)

    def test_sample_accounting(self):
        spec = eng.ClusterSpec(boundaries=(1, 2, 4), num_arms=4)
        sched = schedule_for(spec)
        sampler = bernoulli_sampler([0.9, 0.6, 0.4, 0.1], 7)
        state = eng.init(spec, 0.0, sched, [sampler(a) for a in range(4)])
        expected = 4
        seen_active = [state.active]
        for _ in range(200):
            if not state.active:
                break
            expected += 2 * len(state.active)
            state = eng.step(state, sampler)
            seen_active.append(state.active)
        assert state.total_pulls == expected
        # removed boundaries never come back
        for before, after in zip(seen_active, seen_active[1:]):
            assert after <= before

    def test_budget_cap_flags_unnatural_stop(self):
        spec = eng.ClusterSpec(boundaries=(1, 2), num_arms=2)
        out = eng.run_to_completion(
            spec, 0.0, schedule_for(spec),
            bernoulli_sampler([0.52, 0.48], 3), budget_cap=50,
        )
        assert not out.natural
        assert out.total_samples <= 50
        assert len(out.ranking.sigma) == 2  # partial result still delivered

    def test_budget_cap_must_cover_initialization(self):
        spec = eng.ClusterSpec(boundaries=(1, 2), num_arms=2)
        with pytest.raises(ValueError):
            eng.run_to_completion(
                spec, 0.0, schedule_for(spec), lambda a: 0.0, budget_cap=1
            )

    @settings(max_examples=15)
    @given(st.integers(0, 10_000))
    def test_ranking_is_always_a_valid_partition(self, seed):
        rng = random.Random(seed)
        k = rng.randint(3, 7)
        cut = rng.randint(1, k - 1)
        spec = eng.ClusterSpec(boundaries=(cut, k), num_arms=k)
        means = [rng.random() for _ in range(k)]
        out = eng.run_to_completion(
            spec, 0.2, schedule_for(spec),
            bernoulli_sampler(means, seed), budget_cap=4000,
        )
        assert sorted(out.ranking.sigma) == list(range(1, k + 1))
        sizes = tuple(len(c) for c in out.ranking.clusters)
        assert sizes == spec.cluster_sizes
        assert frozenset().union(*out.ranking.clusters) == frozenset(range(k))

    def test_containment_under_bound_coverage(self):
        """Whenever every true mean stayed inside its confidence interval
        for the whole run, the final clusters must sit inside the true
        epsilon-inflated clusters."""
        means = (0.85, 0.6, 0.55, 0.3)
        spec = eng.ClusterSpec(boundaries=(2, 4), num_arms=4)
        sched = schedule_for(spec)
        epsilon = 0.1
        checked = 0
        for seed in range(30):
            sampler = bernoulli_sampler(means, seed)
            state = eng.init(spec, epsilon, sched, [sampler(a) for a in range(4)])
            covered = all(
                a.lower <= m <= a.upper for a, m in zip(state.arms, means)
            )
            for _ in range(6000):
                if not state.active:
                    break
                state = eng.step(state, sampler)
                covered = covered and all(
                    a.lower <= m <= a.upper for a, m in zip(state.arms, means)
                )
            if not (covered and state.finished):
                continue
            checked += 1
            ranking = eng.result(state)
            # true clusters: {0,1} and {2,3}; inflate by epsilon on means
            m_sorted = sorted(means, reverse=True)
            star_eps = [
                {a for a in range(4) if m_sorted[2] - epsilon <= means[a] <= m_sorted[0] + epsilon},
                {a for a in range(4) if m_sorted[3] - epsilon <= means[a] <= m_sorted[2] + epsilon},
            ]
            assert set(ranking.clusters[0]) <= star_eps[0]
            assert set(ranking.clusters[1]) <= star_eps[1]
        assert checked >= 25  # coverage failures should be rare at delta=0.1


class TestSerialization:
    def test_round_trip_is_exact(self):
        import json

        spec = eng.ClusterSpec(boundaries=(2, 5), num_arms=5)
        sched = schedule_for(spec)
        sampler = bernoulli_sampler([0.8, 0.6, 0.5, 0.4, 0.2], 11)
        state = eng.init(spec, 0.0, sched, [sampler(a) for a in range(5)])
        for _ in range(17):
            if not state.active:
                break
            state = eng.step(state, sampler)
        blob = json.dumps(eng.state_to_dict(state))
        restored = eng.state_from_dict(json.loads(blob))
        assert restored == state

    def test_rejects_foreign_payload(self):
        with pytest.raises(ValueError):
            eng.state_from_dict({"kind": "something_else"})

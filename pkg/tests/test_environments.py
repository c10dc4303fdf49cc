from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from coarserank.environments import (
    BernoulliInstance,
    BTLInstance,
    PreferenceMatrix,
    borda_pull,
    borda_scores,
    draw_direct,
    duel,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
    trial_rng,
)


def matrix_3() -> PreferenceMatrix:
    """P12=0.9, P13=0.8, P23=0.6 — Borda scores (0.85, 0.35, 0.30)."""
    return PreferenceMatrix(
        np.array(
            [
                [0.5, 0.9, 0.8],
                [0.1, 0.5, 0.6],
                [0.2, 0.4, 0.5],
            ]
        )
    )


class TestBernoulliInstance:
    def test_rejects_out_of_range_mean(self):
        with pytest.raises(ValueError):
            BernoulliInstance(means=(0.5, 1.2))
        with pytest.raises(ValueError):
            BernoulliInstance(means=(-0.1,))

    def test_sorted_view_orders_desc_with_stable_ids(self):
        inst = BernoulliInstance(means=(0.3, 0.9, 0.3, 0.5))
        means, order = inst.sorted_view()
        assert means == (0.9, 0.5, 0.3, 0.3)
        assert order == (1, 3, 0, 2)


class TestDrawDirect:
    def test_deterministic_endpoints(self):
        rng = trial_rng(7, 0)
        ones = BernoulliInstance(means=(1.0,))
        zeros = BernoulliInstance(means=(0.0,))
        assert all(draw_direct(ones, 0, rng) == 1.0 for _ in range(200))
        assert all(draw_direct(zeros, 0, rng) == 0.0 for _ in range(200))

    def test_sample_mean_tracks_probability(self):
        inst = BernoulliInstance(means=(0.3,))
        rng = trial_rng(11, 0)
        n = 100_000
        total = sum(draw_direct(inst, 0, rng) for _ in range(n))
        assert abs(total / n - 0.3) < 0.01

    def test_bad_arm_rejected(self):
        inst = BernoulliInstance(means=(0.5, 0.5))
        with pytest.raises(ValueError):
            draw_direct(inst, 2, trial_rng(0, 0))


class TestPreferenceMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            PreferenceMatrix(np.ones((2, 3)) * 0.5)

    def test_rejects_asymmetric_probabilities(self):
        bad = np.array([[0.5, 0.9], [0.2, 0.5]])  # 0.9 + 0.2 != 1
        with pytest.raises(ValueError):
            PreferenceMatrix(bad)

    def test_rejects_out_of_range(self):
        bad = np.array([[0.5, 1.4], [-0.4, 0.5]])
        with pytest.raises(ValueError):
            PreferenceMatrix(bad)

    def test_diagonal_pinned_and_matrix_frozen(self):
        p = np.array([[0.0, 0.7], [0.3, 1.0]])  # odd diagonal is overwritten
        mat = PreferenceMatrix(p)
        assert mat[0, 0] == 0.5 and mat[1, 1] == 0.5
        with pytest.raises(ValueError):
            mat.matrix[0, 1] = 0.2


class TestDuel:
    def test_certain_winner(self):
        mat = PreferenceMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]))
        rng = trial_rng(3, 0)
        # item 0 wins with probability 1 regardless of argument order
        assert all(duel(mat, 0, 1, rng) == 0 for _ in range(200))
        assert all(duel(mat, 1, 0, rng) == 0 for _ in range(200))

    def test_self_duel_rejected(self):
        with pytest.raises(ValueError):
            duel(matrix_3(), 1, 1, trial_rng(0, 0))

    def test_even_matchup_is_a_coin_flip(self):
        mat = PreferenceMatrix(np.full((2, 2), 0.5))
        rng = trial_rng(5, 0)
        n = 100_000
        wins = sum(duel(mat, 0, 1, rng) == 0 for _ in range(n))
        assert abs(wins / n - 0.5) < 0.01

    def test_equal_btl_scores_give_even_duels(self):
        mat = BTLInstance(scores=(1.3, 1.3)).preference_matrix()
        assert mat[0, 1] == pytest.approx(0.5)
        assert mat[1, 0] == pytest.approx(0.5)


class TestBordaScores:
    def test_three_item_example_exact(self):
        assert borda_scores(matrix_3()) == pytest.approx((0.85, 0.35, 0.30))

    def test_flat_matrix_gives_half(self):
        mat = PreferenceMatrix(np.full((4, 4), 0.5))
        assert borda_scores(mat) == pytest.approx((0.5, 0.5, 0.5, 0.5))

    def test_two_items_score_is_the_win_probability(self):
        mat = PreferenceMatrix(np.array([[0.5, 0.7], [0.3, 0.5]]))
        assert borda_scores(mat) == pytest.approx((0.7, 0.3))


class TestBordaPull:
    def test_opponent_never_equals_arm_and_is_uniform(self):
        mat = matrix_3()
        rng = trial_rng(13, 0)
        counts = {0: 0, 2: 0}
        for _ in range(20_000):
            _, j = borda_pull(mat, 1, rng)
            assert j != 1
            counts[j] += 1
        for j, c in counts.items():
            assert abs(c / 20_000 - 0.5) < 0.02, (j, c)

    def test_pull_mean_matches_borda_score(self):
        mat = matrix_3()
        rng = trial_rng(17, 0)
        n = 100_000
        total = sum(borda_pull(mat, 0, rng)[0] for _ in range(n))
        assert abs(total / n - 0.85) < 0.01

    def test_two_arm_pull_mean_is_p12(self):
        mat = PreferenceMatrix(np.array([[0.5, 0.7], [0.3, 0.5]]))
        rng = trial_rng(19, 0)
        n = 50_000
        total = 0.0
        for _ in range(n):
            r, j = borda_pull(mat, 0, rng)
            assert j == 1
            total += r
        assert abs(total / n - 0.7) < 0.012

    def test_replayed_event_log_reproduces_stats(self):
        """Rebuilding (pulls, reward_sum) from the recorded (arm, opponent,
        reward) stream matches the live accounting exactly."""
        mat = matrix_3()
        rng = trial_rng(23, 0)
        pulls = [0, 0, 0]
        rewards = [0.0, 0.0, 0.0]
        log: list[tuple[int, int, float]] = []
        arm_cycle = [0, 1, 2, 1, 0, 2, 2, 1, 0, 0] * 50
        for arm in arm_cycle:
            r, j = borda_pull(mat, arm, rng)
            pulls[arm] += 1
            rewards[arm] += r
            log.append((arm, j, r))

        replay_pulls = [0, 0, 0]
        replay_rewards = [0.0, 0.0, 0.0]
        for arm, j, r in log:
            assert j != arm
            replay_pulls[arm] += 1
            replay_rewards[arm] += r
        assert replay_pulls == pulls
        assert replay_rewards == rewards


class TestBTL:
    def test_induced_matrix_values(self):
        inst = BTLInstance(scores=(0.0, 1.0))
        mat = inst.preference_matrix()
        expect = 1.0 / (1.0 + math.e)
        assert mat[0, 1] == pytest.approx(expect, rel=1e-12)
        assert mat[1, 0] == pytest.approx(1.0 - expect, rel=1e-12)

    def test_rejects_non_finite_scores(self):
        with pytest.raises(ValueError):
            BTLInstance(scores=(0.0, math.inf))

    def test_extreme_scores_do_not_overflow(self):
        mat = BTLInstance(scores=(-800.0, 800.0)).preference_matrix()
        assert mat[1, 0] == pytest.approx(1.0)
        assert mat[0, 1] == pytest.approx(0.0)

    @given(
        st.lists(
            st.floats(min_value=-20, max_value=20),
            min_size=2,
            max_size=12,
            unique=True,
        )
    )
    def test_borda_scores_order_isomorphic_to_theta(self, theta: list[float]):
        gaps = sorted(theta)
        # score gaps below float resolution make the order unrecoverable
        assume(min(b - a for a, b in zip(gaps, gaps[1:])) > 1e-6)
        scores = borda_scores(BTLInstance(scores=tuple(theta)).preference_matrix())
        by_theta = sorted(range(len(theta)), key=lambda a: theta[a])
        by_borda = sorted(range(len(theta)), key=lambda a: scores[a])
        assert by_theta == by_borda


class TestInstanceFiles:
    def test_direct_round_trip(self, tmp_path):
        inst = BernoulliInstance(means=(0.5, 0.25, 0.75), seed=42)
        path = tmp_path / "direct.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        assert isinstance(loaded, BernoulliInstance)
        assert loaded == inst

    def test_matrix_round_trip(self, tmp_path):
        mat = matrix_3()
        path = tmp_path / "matrix.json"
        save_instance(mat, path)
        loaded = load_instance(path)
        assert isinstance(loaded, PreferenceMatrix)
        assert np.array_equal(loaded.matrix, mat.matrix)

    def test_btl_round_trip(self, tmp_path):
        inst = BTLInstance(scores=(0.0, 1.2567, 2.5133, 3.77), seed=9)
        path = tmp_path / "btl.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        assert isinstance(loaded, BTLInstance)
        assert loaded == inst

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            instance_from_dict({"kind": "mystery", "means": [0.5]})

    def test_dict_form_is_self_describing(self):
        data = instance_to_dict(BernoulliInstance(means=(0.5,), seed=1))
        assert data == {"kind": "direct", "means": [0.5], "seed": 1}


class TestTrialRng:
    def test_same_coordinates_reproduce_stream(self):
        a = trial_rng(99, 4).random(8)
        b = trial_rng(99, 4).random(8)
        assert np.array_equal(a, b)

    def test_different_trials_diverge(self):
        a = trial_rng(99, 4).random(8)
        b = trial_rng(99, 5).random(8)
        assert not np.array_equal(a, b)

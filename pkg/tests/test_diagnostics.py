"""Post-processing diagnostics: R-hat, error curves, transitions, bursts."""

import numpy as np
import pytest
import scipy.special
import scipy.stats

from dikin_sampler.diagnostics import (ChainMatrix, acceptance_stats, aggregate_error_curves,
                                       count_well_transitions, rank_normalize,
                                       rolling_mean_error, split_rhat_rank_normalized)
from dikin_sampler.errors import ZeroVariance


class TestChainMatrix:
    def test_shape_properties(self):
        cm = ChainMatrix(np.zeros((4, 100, 3)), iteration_offset=50)
        assert (cm.chains, cm.iterations, cm.dimensions) == (4, 100, 3)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            ChainMatrix(np.zeros((4, 100)))

    def test_rejects_negative_offset(self):
        with pytest.raises(ValueError):
            ChainMatrix(np.zeros((2, 10, 1)), iteration_offset=-1)


class TestRankNormalize:
    def test_matches_direct_formula(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((3, 40))
        ranks = scipy.stats.rankdata(x.ravel(), method="average")
        expected = scipy.special.ndtri((ranks - 0.375) / (x.size + 0.25)).reshape(x.shape)
        np.testing.assert_allclose(rank_normalize(x), expected, atol=1e-12)

    def test_ties_share_scores(self):
        z = rank_normalize(np.array([1.0, 2.0, 2.0, 3.0]))
        assert z[1] == z[2]

    def test_monotone(self):
        x = np.array([0.5, -1.0, 3.0, 0.0])
        z = rank_normalize(x)
        assert np.all(np.argsort(z) == np.argsort(x))


class TestSplitRhat:
    def test_well_mixed_chains_near_one(self):
        rng = np.random.default_rng(6)
        draws = rng.standard_normal((4, 2000))
        r = split_rhat_rank_normalized(draws)
        assert 0.99 < r < 1.01

    def test_shifted_chain_is_flagged(self):
        rng = np.random.default_rng(7)
        draws = rng.standard_normal((4, 500))
        draws[0] += 3.0
        assert split_rhat_rank_normalized(draws) > 1.2

    def test_within_chain_trend_is_flagged(self):
        # a strong trend makes the two halves of each chain disagree
        rng = np.random.default_rng(8)
        trend = np.linspace(0.0, 4.0, 600)
        draws = rng.standard_normal((3, 600)) + trend
        assert split_rhat_rank_normalized(draws) > 1.2

    def test_odd_length_drops_last(self):
        rng = np.random.default_rng(9)
        draws = rng.standard_normal((2, 101))
        a = split_rhat_rank_normalized(draws)
        b = split_rhat_rank_normalized(draws[:, :100])
        assert a == pytest.approx(b)

    def test_constant_chains_raise(self):
        with pytest.raises(ZeroVariance):
            split_rhat_rank_normalized(np.ones((2, 20)))

    def test_needs_two_chains_four_draws(self):
        with pytest.raises(ValueError):
            split_rhat_rank_normalized(np.zeros((1, 10)))
        with pytest.raises(ValueError):
            split_rhat_rank_normalized(np.zeros((2, 3)))


class TestRollingError:
    def test_hand_computed_scalar_case(self):
        # draws 1, 3 with mu* = 1.5: running means 1, 2 -> errors 0.5, 0.5
        draws = np.array([[1.0], [3.0]])
        curve = rolling_mean_error(draws, 1.5, functional="norm")
        np.testing.assert_allclose(curve, [0.5, 0.5])

    def test_norm_sq_functional(self):
        draws = np.array([[1.0, 0.0], [0.0, 2.0]])
        # norm_sq values 1, 4; running means 1, 2.5; mu* = 2
        curve = rolling_mean_error(draws, 2.0, functional="norm_sq")
        np.testing.assert_allclose(curve, [1.0, 0.5])

    def test_converges_for_iid_draws(self):
        rng = np.random.default_rng(10)
        draws = rng.standard_normal((20000, 4))
        curve = rolling_mean_error(draws, 4.0, functional="norm_sq")
        assert curve[-1] < 0.1
        assert curve[-1] < curve[10]

    def test_unknown_functional_rejected(self):
        with pytest.raises(ValueError):
            rolling_mean_error(np.ones((5, 1)), 1.0, functional="median")


class TestAggregateCurves:
    def test_percentile_bands(self):
        curves = np.arange(20, dtype=float)[:, None] * np.ones((20, 7))
        agg = aggregate_error_curves(curves)
        np.testing.assert_allclose(agg["mean"], np.full(7, 9.5))
        np.testing.assert_allclose(agg["median"], np.full(7, 9.5))
        np.testing.assert_allclose(agg["p10"], np.full(7, 1.9))
        np.testing.assert_allclose(agg["p90"], np.full(7, 17.1))


class TestTransitions:
    def test_all_plus_counts_zero(self):
        draws = np.full((10, 3), 0.4)
        tc = count_well_transitions(draws)
        assert tc.per_chain_counts.tolist() == [0]

    def test_gap_sequence_counts_two(self):
        # PLUS, NEITHER, MINUS, NEITHER, PLUS -> two transitions
        draws = np.array([[0.4], [0.0], [-0.4], [0.0], [0.4]])
        tc = count_well_transitions(draws)
        assert tc.per_chain_counts.tolist() == [2]

    def test_initial_definite_well_sets_baseline(self):
        # NEITHER, MINUS, PLUS -> one transition, not two
        draws = np.array([[0.0], [-0.4], [0.4]])
        assert count_well_transitions(draws).per_chain_counts.tolist() == [1]

    def test_all_coordinates_must_agree(self):
        # mixed signs are NEITHER even though each coordinate is large
        draws = np.array([[0.4, -0.4], [0.4, 0.4], [-0.4, -0.4]])
        assert count_well_transitions(draws).per_chain_counts.tolist() == [1]

    def test_threshold_band_is_neither(self):
        draws = np.array([[5e-4], [-5e-4], [5e-4]])
        assert count_well_transitions(draws).per_chain_counts.tolist() == [0]

    def test_multi_chain_shape(self):
        plus, minus = np.full((1, 2), 0.4), np.full((1, 2), -0.4)
        chain_a = np.concatenate([plus, minus, plus, minus])  # 3 transitions
        chain_b = np.concatenate([plus, plus, plus, plus])    # 0 transitions
        draws = np.stack([chain_a, chain_b])
        tc = count_well_transitions(draws)
        assert tc.per_chain_counts.tolist() == [3, 0]

    def test_keep_states_returns_sequence(self):
        draws = np.array([[0.4], [0.0], [-0.4]])
        tc = count_well_transitions(draws, keep_states=True)
        assert tc.well_state_sequence.tolist() == [1, 0, -1]


class TestAcceptanceStats:
    def test_rate_and_bursts(self):
        flags = [True, True, False, True, False, False, True]
        st = acceptance_stats(flags)
        assert st.rate == pytest.approx(4 / 7)
        assert st.accept_bursts == {2: 1, 1: 2}
        assert st.reject_bursts == {1: 1, 2: 1}

    def test_accepts_step_records(self):
        class R:
            def __init__(self, a):
                self.accepted = a

        st = acceptance_stats([R(True), R(False), R(True)])
        assert st.rate == pytest.approx(2 / 3)

"""Dense linear algebra, Gaussian proposal density, inverse CDF, rng streams."""

import hashlib

import numpy as np
import pytest
import scipy.special
import scipy.stats

from dikin_sampler.errors import DomainError, FactorizationFailure
from dikin_sampler.linalg import (GaussianProposalParams, chain_seed_sequence, cholesky_spd,
                                  experiment_stream_key, inverse_normal_cdf, log_gaussian_density,
                                  make_chain_rng, sample_gaussian, solve_lower_triangular)
from dikin_sampler.geometry import MetricState


def _metric_from_cov(cov: np.ndarray) -> MetricState:
    cov = np.asarray(cov, dtype=float)
    hess = np.linalg.inv(cov)
    chol = cholesky_spd(cov)
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    return MetricState(point=np.zeros(cov.shape[0]), hessian=hess, covariance=cov,
                       chol_factor=chol, log_det_cov=float(logdet))


class TestCholesky:
    def test_matches_numpy_on_random_spd(self):
        rng = np.random.default_rng(1)
        for d in (1, 3, 7):
            a = rng.standard_normal((d, d))
            spd = a @ a.T + d * np.eye(d)
            np.testing.assert_allclose(cholesky_spd(spd), np.linalg.cholesky(spd), rtol=1e-12)

    def test_rejects_asymmetric(self):
        m = np.array([[2.0, 0.5], [0.4, 2.0]])
        with pytest.raises(ValueError):
            cholesky_spd(m)

    def test_rejects_indefinite(self):
        with pytest.raises(FactorizationFailure):
            cholesky_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestTriangularSolve:
    def test_matches_dense_solve(self):
        rng = np.random.default_rng(2)
        lower = np.tril(rng.standard_normal((5, 5))) + 5 * np.eye(5)
        b = rng.standard_normal(5)
        np.testing.assert_allclose(solve_lower_triangular(lower, b),
                                   np.linalg.solve(lower, b), rtol=1e-12)


class TestGaussianProposal:
    def test_log_density_matches_scipy(self):
        rng = np.random.default_rng(3)
        for d in (1, 4):
            a = rng.standard_normal((d, d))
            cov = a @ a.T + d * np.eye(d)
            mean = rng.standard_normal(d)
            scale = 0.37
            params = GaussianProposalParams(mean, scale, _metric_from_cov(cov))
            for _ in range(5):
                x = mean + rng.standard_normal(d)
                expected = scipy.stats.multivariate_normal(mean, scale * cov).logpdf(x)
                assert log_gaussian_density(x, params) == pytest.approx(expected, rel=1e-10)

    def test_sampling_moments(self):
        cov = np.array([[2.0, 0.6], [0.6, 1.0]])
        mean = np.array([0.5, -1.0])
        params = GaussianProposalParams(mean, 0.5, _metric_from_cov(cov))
        rng = np.random.default_rng(4)
        draws = np.array([sample_gaussian(params, rng) for _ in range(20000)])
        np.testing.assert_allclose(draws.mean(axis=0), mean, atol=0.02)
        np.testing.assert_allclose(np.cov(draws.T), 0.5 * cov, atol=0.03)

    def test_sampling_reproducible(self):
        params = GaussianProposalParams(np.zeros(3), 1.0, _metric_from_cov(np.eye(3)))
        a = sample_gaussian(params, np.random.default_rng(9))
        b = sample_gaussian(params, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_rejects_nonpositive_scale(self):
        metric = _metric_from_cov(np.eye(2))
        with pytest.raises(ValueError):
            GaussianProposalParams(np.zeros(2), 0.0, metric)


class TestInverseNormalCdf:
    def test_matches_independent_route(self):
        # scipy's ndtri is a separate implementation; agreement to 1e-13
        # over the bulk and the tails validates the rational-plus-Halley form
        p = np.concatenate([
            np.array([1e-15, 1e-12, 1e-8, 1e-4]),
            np.linspace(0.001, 0.999, 997),
            1.0 - np.array([1e-15, 1e-12, 1e-8, 1e-4]),
        ])
        ours = inverse_normal_cdf(p)
        theirs = scipy.special.ndtri(p)
        assert np.max(np.abs(ours - theirs)) < 1e-13

    def test_round_trip_through_cdf(self):
        p = np.linspace(1e-6, 1 - 1e-6, 201)
        back = scipy.special.ndtr(inverse_normal_cdf(p))
        assert np.max(np.abs(back - p)) < 1e-14

    def test_symmetry(self):
        assert inverse_normal_cdf(0.5) == 0.0
        assert inverse_normal_cdf(0.975) == pytest.approx(-inverse_normal_cdf(0.025), abs=1e-15)

    def test_scalar_returns_float(self):
        assert isinstance(inverse_normal_cdf(0.3), float)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.1])
    def test_rejects_outside_open_interval(self, bad):
        with pytest.raises(DomainError):
            inverse_normal_cdf(bad)


class TestSeedStreams:
    def test_stream_key_is_sha256_prefix(self):
        expected = int.from_bytes(hashlib.sha256(b"box_rhat/mdl").digest()[:8], "big")
        assert experiment_stream_key("box_rhat/mdl") == expected

    def test_chains_get_distinct_streams(self):
        a = make_chain_rng(7, "exp", 0).standard_normal(4)
        b = make_chain_rng(7, "exp", 1).standard_normal(4)
        assert not np.allclose(a, b)

    def test_streams_reproducible(self):
        a = make_chain_rng(7, "exp", 3).standard_normal(4)
        b = make_chain_rng(7, "exp", 3).standard_normal(4)
        np.testing.assert_array_equal(a, b)

    def test_experiment_id_separates_streams(self):
        a = make_chain_rng(7, "exp_a", 0).standard_normal(4)
        b = make_chain_rng(7, "exp_b", 0).standard_normal(4)
        assert not np.allclose(a, b)

    def test_rejects_negative_chain(self):
        with pytest.raises(ValueError):
            chain_seed_sequence(7, "exp", -1)

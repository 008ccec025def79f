"""Barrier functions, regularized metric, and divergence of the covariance."""

import numpy as np
import pytest

from dikin_sampler.errors import NotInterior
from dikin_sampler.geometry import (BallBarrier, PolytopeBarrier, divergence_of_covariance,
                                    metric_state)


def _fd_gradient(fn, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def _fd_hessian(grad_fn, x, h=1e-6):
    d = x.size
    out = np.zeros((d, d))
    for i in range(d):
        e = np.zeros_like(x)
        e[i] = h
        out[:, i] = (grad_fn(x + e) - grad_fn(x - e)) / (2 * h)
    return 0.5 * (out + out.T)


def _random_interior_ball(rng, barrier, count):
    pts = []
    while len(pts) < count:
        x = rng.uniform(-barrier.radius, barrier.radius, barrier.dimension)
        if np.dot(x, x) < 0.9 * barrier.radius**2:
            pts.append(x)
    return pts


def _random_interior_box(rng, bounds, count):
    return [rng.uniform(-0.95, 0.95, bounds.size) * bounds for _ in range(count)]


class TestPolytopeBarrier:
    def test_from_box_rows(self):
        b = PolytopeBarrier.from_box(np.array([2.0, 0.5]))
        expected = np.array([[0.5, 0.0], [-0.5, 0.0], [0.0, 2.0], [0.0, -2.0]])
        got = np.array(sorted(b.rows.tolist()))
        np.testing.assert_allclose(got, np.array(sorted(expected.tolist())))

    def test_value_hand_computed(self):
        b = PolytopeBarrier.from_box(np.array([1.0]))
        x = np.array([0.25])
        assert b.value(x) == pytest.approx(-(np.log(0.75) + np.log(1.25)))

    def test_gradient_hessian_match_finite_differences(self):
        rng = np.random.default_rng(11)
        bounds = np.logspace(0, -1, 4)
        b = PolytopeBarrier.from_box(bounds)
        for x in _random_interior_box(rng, bounds, 20):
            np.testing.assert_allclose(b.gradient(x), _fd_gradient(b.value, x),
                                       rtol=1e-5, atol=1e-7)
            np.testing.assert_allclose(b.hessian(x), _fd_hessian(b.gradient, x),
                                       rtol=1e-5, atol=1e-6)

    def test_outside_raises(self):
        b = PolytopeBarrier.from_box(np.array([1.0, 1.0]))
        with pytest.raises(NotInterior):
            b.value(np.array([1.0, 0.0]))
        with pytest.raises(NotInterior):
            b.gradient(np.array([1.5, 0.0]))

    def test_is_interior_and_distance(self):
        b = PolytopeBarrier.from_box(np.array([1.0, 2.0]))
        assert b.is_interior(np.array([0.9, -1.9]))
        assert not b.is_interior(np.array([1.0, 0.0]))
        # nearest face of the box [-1,1]x[-2,2] from (0.5, 0) is x_1 = 1
        assert b.distance_to_boundary(np.array([0.5, 0.0])) == pytest.approx(0.5)

    def test_hessian_eigenvalue_grows_as_inverse_slack_squared(self):
        # metric eigenvalue along a tightening face decays like slack^2,
        # so the hessian's grows like slack^-2: halving slack quadruples it
        b = PolytopeBarrier.from_box(np.ones(3))
        prev = None
        for s in (1e-2, 5e-3, 2.5e-3):
            x = np.array([1.0 - s, 0.0, 0.0])
            top = np.linalg.eigvalsh(b.hessian(x))[-1]
            if prev is not None:
                assert top / prev == pytest.approx(4.0, rel=0.1)
            prev = top


class TestBallBarrier:
    def test_value_hand_computed(self):
        b = BallBarrier(2, 2.0)
        x = np.array([1.0, 0.0])
        assert b.value(x) == pytest.approx(-np.log(1.0 - 0.25))

    def test_gradient_hessian_match_finite_differences(self):
        rng = np.random.default_rng(12)
        b = BallBarrier(3, 1.5)
        for x in _random_interior_ball(rng, b, 20):
            np.testing.assert_allclose(b.gradient(x), _fd_gradient(b.value, x),
                                       rtol=1e-5, atol=1e-7)
            np.testing.assert_allclose(b.hessian(x), _fd_hessian(b.gradient, x),
                                       rtol=1e-4, atol=1e-6)

    def test_outside_raises(self):
        b = BallBarrier(2, 1.0)
        with pytest.raises(NotInterior):
            b.value(np.array([1.0, 0.0]))

    def test_matches_box_barrier_in_one_dimension(self):
        # -log(1 - x^2) = -log(1-x) - log(1+x); derivatives agree too
        ball = BallBarrier(1, 1.0)
        box = PolytopeBarrier.from_box(np.array([1.0]))
        for v in (-0.9, -0.3, 0.0, 0.55, 0.99):
            x = np.array([v])
            assert ball.value(x) == pytest.approx(box.value(x), rel=1e-12)
            assert ball.gradient(x)[0] == pytest.approx(box.gradient(x)[0], rel=1e-12)
            assert ball.hessian(x)[0, 0] == pytest.approx(box.hessian(x)[0, 0], rel=1e-12)


class TestMetricState:
    @pytest.mark.parametrize("epsilon", [0.0, 1e-5, 0.3])
    def test_polytope_inverse_residual(self, epsilon):
        rng = np.random.default_rng(13)
        bounds = np.logspace(0, -2, 5)
        b = PolytopeBarrier.from_box(bounds)
        for x in _random_interior_box(rng, bounds, 10):
            ms = metric_state(b, x, epsilon)
            reg = b.hessian(x) + epsilon * np.eye(5)
            residual = np.max(np.abs(reg @ ms.covariance - np.eye(5)))
            assert residual <= 1e-8  # spec tolerance; in practice ~1e-15

    @pytest.mark.parametrize("epsilon", [0.0, 1e-5, 0.3])
    def test_ball_covariance_matches_direct_inverse(self, epsilon):
        rng = np.random.default_rng(14)
        b = BallBarrier(4, 2.5)
        for x in _random_interior_ball(rng, b, 10):
            ms = metric_state(b, x, epsilon)
            direct = np.linalg.inv(b.hessian(x) + epsilon * np.eye(4))
            np.testing.assert_allclose(ms.covariance, direct, rtol=1e-10, atol=1e-12)

    def test_log_det_matches_slogdet(self):
        b = BallBarrier(3, 1.0)
        x = np.array([0.2, -0.1, 0.4])
        ms = metric_state(b, x, 1e-5)
        sign, logdet = np.linalg.slogdet(ms.covariance)
        assert sign > 0
        assert ms.log_det_cov == pytest.approx(logdet, rel=1e-10)

    def test_chol_factor_reconstructs_covariance(self):
        b = PolytopeBarrier.from_box(np.array([1.0, 0.5, 0.1]))
        ms = metric_state(b, np.array([0.3, -0.2, 0.05]), 0.0)
        np.testing.assert_allclose(ms.chol_factor @ ms.chol_factor.T, ms.covariance,
                                   rtol=1e-12, atol=1e-14)

    def test_metric_eigen_decay_toward_face(self):
        # covariance eigenvalue along the tight direction quarters when the
        # slack halves: the walk automatically shortens steps near faces
        b = PolytopeBarrier.from_box(np.ones(3))
        prev = None
        for s in (1e-2, 5e-3, 2.5e-3):
            x = np.array([1.0 - s, 0.0, 0.0])
            low = np.linalg.eigvalsh(metric_state(b, x, 0.0).covariance)[0]
            if prev is not None:
                assert prev / low == pytest.approx(4.0, rel=0.1)
            prev = low

    def test_rejects_negative_epsilon(self):
        b = BallBarrier(2, 1.0)
        with pytest.raises(ValueError):
            metric_state(b, np.zeros(2), -1e-3)


class TestDivergence:
    @pytest.mark.parametrize("epsilon", [0.0, 1e-5, 0.3])
    def test_ball_analytic_matches_finite_difference(self, epsilon):
        rng = np.random.default_rng(15)
        b = BallBarrier(3, 2.5)
        for x in _random_interior_ball(rng, b, 8):
            analytic = divergence_of_covariance(b, x, epsilon, mode="analytic")
            fd = divergence_of_covariance(b, x, epsilon, mode="finite_difference")
            np.testing.assert_allclose(analytic, fd, rtol=1e-4, atol=1e-6)

    def test_polytope_finite_difference_available(self):
        b = PolytopeBarrier.from_box(np.array([1.0, 1.0]))
        out = divergence_of_covariance(b, np.array([0.1, -0.4]), 1e-5, mode="auto")
        assert out.shape == (2,)
        assert np.all(np.isfinite(out))

    def test_divergence_near_boundary_stays_finite(self):
        b = BallBarrier(2, 1.0)
        x = np.array([0.999, 0.0])
        fd = divergence_of_covariance(b, x, 0.0, mode="finite_difference")
        an = divergence_of_covariance(b, x, 0.0, mode="analytic")
        np.testing.assert_allclose(an, fd, rtol=1e-3, atol=1e-8)

    def test_divergence_points_inward_near_face(self):
        # near the boundary the covariance shrinks, so its divergence pushes
        # the diffusion back toward the interior
        b = BallBarrier(2, 1.0)
        x = np.array([0.95, 0.0])
        div = divergence_of_covariance(b, x, 0.0, mode="analytic")
        assert div[0] < 0

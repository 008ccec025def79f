"""Barrier-defined convex domains and the ellipsoidal metric they induce.

A domain is the strict interior of either a polytope {x : a_i . x <= 1} or a
Euclidean ball. Its log barrier supplies a position-dependent Hessian H(x);
the regularized inverse C_eps(x) = (H(x) + eps I)^-1 is the proposal
covariance used by every sampler in this package. The ball case additionally
has a closed-form divergence of C_eps, needed by the unadjusted Langevin
kernel; polytopes fall back to finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import FactorizationFailure, NotInterior, StepTooLarge
from .linalg import cholesky_spd

# Finite-difference displacement cap for divergence probes. The probe step is
# min(_FD_STEP_CAP, distance_to_boundary / 4), which keeps probes strictly
# interior whenever the base point is.
_FD_STEP_CAP = 1e-5


@dataclass(frozen=True)
class MetricState:
    """Barrier metric quantities at one interior point, computed once.

    covariance is C_eps = (hessian + eps I)^-1, chol_factor its lower
    Cholesky factor, and log_det_cov = log det(covariance). Instances are
    immutable; samplers cache and share them freely.
    """

    point: np.ndarray
    hessian: np.ndarray
    covariance: np.ndarray
    chol_factor: np.ndarray
    log_det_cov: float

    @property
    def dimension(self) -> int:
        return self.point.shape[0]


class PolytopeBarrier:
    """Log barrier -sum_i log(1 - a_i . x) on the polytope {a_i . x <= 1}.

    Rows are stored in the normalization with unit right-hand side, so the
    origin is always strictly interior (every slack is 1 there). Boundedness
    of the polytope is the caller's responsibility.
    """

    def __init__(self, rows: np.ndarray, interior_point: np.ndarray | None = None) -> None:
        rows = np.array(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ValueError(f"rows must be a non-empty 2-D array, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("constraint rows must be finite")
        norms = np.linalg.norm(rows, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("constraint rows must be non-zero")
        self._rows = rows
        self._row_norms = norms
        check = np.zeros(rows.shape[1]) if interior_point is None else np.asarray(interior_point, float)
        if not self.is_interior(check):
            raise NotInterior("reference point is not strictly interior")

    @classmethod
    def from_box(cls, bounds: np.ndarray) -> "PolytopeBarrier":
        """Axis-aligned box |x_i| <= b_i as 2d rows (+e_i / b_i and -e_i / b_i)."""
        b = np.asarray(bounds, dtype=float)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("bounds must be a non-empty 1-D array")
        if not np.all(np.isfinite(b)) or np.any(b <= 0.0):
            raise ValueError("box half-widths must be positive and finite")
        scale = np.diag(1.0 / b)
        return cls(np.vstack([scale, -scale]))

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def dimension(self) -> int:
        return self._rows.shape[1]

    @property
    def constraint_count(self) -> int:
        return self._rows.shape[0]

    def _slacks(self, x: np.ndarray) -> np.ndarray:
        return 1.0 - self._rows @ x

    def is_interior(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected point of shape ({self.dimension},), got {x.shape}")
        return bool(np.all(self._slacks(x) > 0.0))

    def distance_to_boundary(self, x: np.ndarray) -> float:
        """Euclidean distance to the nearest constraint plane, clamped at 0."""
        x = np.asarray(x, dtype=float)
        return max(0.0, float(np.min(self._slacks(x) / self._row_norms)))

    def _interior_slacks(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected point of shape ({self.dimension},), got {x.shape}")
        slacks = self._slacks(x)
        if not np.all(slacks > 0.0):
            raise NotInterior("point is not strictly interior to the polytope")
        return slacks

    def value(self, x: np.ndarray) -> float:
        """Barrier value -sum_i log(slack_i)."""
        return float(-np.sum(np.log(self._interior_slacks(x))))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Barrier gradient sum_i a_i / slack_i."""
        slacks = self._interior_slacks(x)
        return self._rows.T @ (1.0 / slacks)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        """Barrier Hessian sum_i a_i a_i^T / slack_i^2 (positive semidefinite)."""
        slacks = self._interior_slacks(x)
        scaled = self._rows / slacks[:, None]
        return scaled.T @ scaled


class BallBarrier:
    """Log barrier -log(1 - |x|^2 / r^2) on the open ball of radius r."""

    def __init__(self, dimension: int, radius: float = 1.0) -> None:
        if dimension < 1:
            raise ValueError(f"dimension must be at least 1, got {dimension}")
        if not (radius > 0.0 and np.isfinite(radius)):
            raise ValueError(f"radius must be positive and finite, got {radius}")
        self._dimension = int(dimension)
        self._radius = float(radius)

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def radius(self) -> float:
        return self._radius

    def is_interior(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self._dimension,):
            raise ValueError(f"expected point of shape ({self._dimension},), got {x.shape}")
        return bool(x @ x < self._radius * self._radius)

    def distance_to_boundary(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return max(0.0, self._radius - float(np.linalg.norm(x)))

    def _interior_gap(self, x: np.ndarray) -> float:
        """1 - |x|^2 / r^2, raising if not strictly positive."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self._dimension,):
            raise ValueError(f"expected point of shape ({self._dimension},), got {x.shape}")
        gap = 1.0 - (x @ x) / (self._radius * self._radius)
        if not gap > 0.0:
            raise NotInterior("point is not strictly inside the ball")
        return float(gap)

    def value(self, x: np.ndarray) -> float:
        return float(-np.log(self._interior_gap(x)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        gap = self._interior_gap(x)
        return (2.0 / (self._radius**2 * gap)) * np.asarray(x, dtype=float)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        """alpha I + beta x x^T with alpha = 2 / (r^2 gap), beta = 4 / (r^4 gap^2)."""
        x = np.asarray(x, dtype=float)
        gap = self._interior_gap(x)
        r2 = self._radius * self._radius
        alpha = 2.0 / (r2 * gap)
        beta = 4.0 / (r2 * r2 * gap * gap)
        return alpha * np.eye(self._dimension) + beta * np.outer(x, x)

    def _inverse_coefficients(self, x: np.ndarray, epsilon: float) -> tuple[float, float, float, float]:
        """(alpha, beta, A, s) with C_eps = (1/A)(I - beta/(A + beta s) x x^T), s = |x|^2."""
        gap = self._interior_gap(x)
        r2 = self._radius * self._radius
        alpha = 2.0 / (r2 * gap)
        beta = 4.0 / (r2 * r2 * gap * gap)
        s = float(np.asarray(x, float) @ np.asarray(x, float))
        return alpha, beta, alpha + epsilon, s


Barrier = PolytopeBarrier | BallBarrier


def metric_state(barrier: Barrier, x: np.ndarray, epsilon: float) -> MetricState:
    """Evaluate the regularized metric C_eps = (H(x) + eps I)^-1 at x.

    Args:
        barrier: the domain whose log-barrier Hessian defines the metric.
        x: strictly interior point.
        epsilon: regularization, >= 0. With eps = 0 the Hessian itself must
            be positive definite (always true for the ball; for a polytope
            the rows must span the space).

    Raises:
        NotInterior: x is not strictly inside the domain.
        FactorizationFailure: H + eps I is not positive definite.
    """
    if epsilon < 0.0 or not np.isfinite(epsilon):
        raise ValueError(f"epsilon must be finite and non-negative, got {epsilon}")
    x = np.asarray(x, dtype=float)

    if isinstance(barrier, BallBarrier):
        # Sherman-Morrison gives the inverse of alpha I + beta x x^T + eps I
        # directly; no general factorization needed.
        alpha, beta, a_coef, s = barrier._inverse_coefficients(x, epsilon)
        d = barrier.dimension
        hessian = alpha * np.eye(d) + beta * np.outer(x, x)
        covariance = (np.eye(d) - (beta / (a_coef + beta * s)) * np.outer(x, x)) / a_coef
        chol = cholesky_spd(covariance)
        log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return MetricState(point=x.copy(), hessian=hessian, covariance=covariance,
                           chol_factor=chol, log_det_cov=log_det)

    hessian = barrier.hessian(x)
    regularized = hessian + epsilon * np.eye(barrier.dimension)
    factor = cholesky_spd(regularized)
    inv_tri, info = lapack.dpotri(factor, lower=1)
    if info != 0:
        raise FactorizationFailure(f"inverse from Cholesky factor failed (info={info})")
    covariance = np.tril(inv_tri) + np.tril(inv_tri, -1).T
    chol = cholesky_spd(covariance)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return MetricState(point=x.copy(), hessian=hessian, covariance=covariance,
                       chol_factor=chol, log_det_cov=log_det)


def _ball_divergence(barrier: BallBarrier, x: np.ndarray, epsilon: float) -> np.ndarray:
    """Closed-form divergence of C_eps for the ball barrier.

    Writing C = G(s) I + M(s) x x^T with s = |x|^2 gives
    (div C)_i = (2 G' + 2 s M' + (d + 1) M) x_i, and G, M follow from the
    Sherman-Morrison inverse of alpha I + beta x x^T + eps I.
    """
    x = np.asarray(x, dtype=float)
    gap = barrier._interior_gap(x)
    r2 = barrier.radius * barrier.radius
    s = float(x @ x)
    d = barrier.dimension

    alpha = 2.0 / (r2 * gap)
    beta = 4.0 / (r2 * r2 * gap * gap)
    # derivatives with respect to s (note d(gap)/ds = -1/r^2)
    alpha_p = 2.0 / (r2 * r2 * gap * gap)
    beta_p = 8.0 / (r2 * r2 * r2 * gap * gap * gap)

    a_coef = alpha + epsilon
    g_p = -alpha_p / (a_coef * a_coef)
    denom = a_coef * (a_coef + beta * s)
    denom_p = alpha_p * (2.0 * a_coef + beta * s) + a_coef * (beta_p * s + beta)
    m_coef = -beta / denom
    m_p = (beta * denom_p - beta_p * denom) / (denom * denom)

    scalar = 2.0 * g_p + 2.0 * s * m_p + (d + 1) * m_coef
    return scalar * x


def _finite_difference_divergence(barrier: Barrier, x: np.ndarray, epsilon: float) -> np.ndarray:
    """Central-difference divergence of C_eps, one coordinate at a time."""
    x = np.asarray(x, dtype=float)
    dist = barrier.distance_to_boundary(x)
    if dist <= 0.0 or not barrier.is_interior(x):
        raise NotInterior("divergence probe requires a strictly interior point")
    h = min(_FD_STEP_CAP, dist / 4.0)
    div = np.zeros(barrier.dimension)
    for j in range(barrier.dimension):
        plus = x.copy()
        plus[j] += h
        minus = x.copy()
        minus[j] -= h
        try:
            c_plus = metric_state(barrier, plus, epsilon).covariance
            c_minus = metric_state(barrier, minus, epsilon).covariance
        except NotInterior as exc:
            raise StepTooLarge(f"finite-difference probe left the domain (h={h})") from exc
        div += (c_plus[:, j] - c_minus[:, j]) / (2.0 * h)
    return div


def divergence_of_covariance(barrier: Barrier, x: np.ndarray, epsilon: float,
                             mode: str = "auto") -> np.ndarray:
    """Divergence vector (div C_eps)_i = sum_j d C_ij / d x_j at x.

    mode selects the evaluation path: "analytic" (ball only), or
    "finite_difference" (any barrier). "auto" picks analytic for a ball and
    finite differences otherwise.
    """
    if mode == "auto":
        mode = "analytic" if isinstance(barrier, BallBarrier) else "finite_difference"
    if mode == "analytic":
        if not isinstance(barrier, BallBarrier):
            raise ValueError("analytic divergence is only available for ball domains")
        return _ball_divergence(barrier, x, epsilon)
    if mode == "finite_difference":
        return _finite_difference_divergence(barrier, x, epsilon)
    raise ValueError(f"unknown divergence mode {mode!r}")

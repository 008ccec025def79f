"""Dense SPD linear algebra, Gaussian proposal machinery, and RNG plumbing.

Everything here is small and dimension-generic: factor an SPD matrix once,
then reuse its triangular factor for sampling and density evaluation. The
inverse normal CDF is implemented directly (rational approximation plus one
Halley refinement) so the package does not depend on a stats library for it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import lapack
from scipy.special import erfc

from .errors import DomainError, FactorizationFailure

if TYPE_CHECKING:
    from .geometry import MetricState

LOG_TWO_PI = float(np.log(2.0 * np.pi))

# Symmetry tolerance for matrices that are SPD by construction; anything
# worse than this indicates a bug upstream, not roundoff.
_SYMMETRY_RTOL = 1e-12


def cholesky_spd(matrix: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric positive definite matrix.

    Args:
        matrix: square 2-D array, symmetric to relative tolerance 1e-12.

    Returns:
        Lower triangular L with L @ L.T == matrix.

    Raises:
        ValueError: non-square, non-finite, or asymmetric input.
        FactorizationFailure: symmetric input that is not positive definite.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    if float(np.max(np.abs(m - m.T), initial=0.0)) > _SYMMETRY_RTOL * max(1.0, scale):
        raise ValueError("matrix is not symmetric")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure("matrix is not positive definite") from exc


def solve_lower_triangular(lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve L w = rhs for lower-triangular L."""
    w, info = lapack.dtrtrs(lower, rhs, lower=1)
    if info != 0:
        raise FactorizationFailure(f"triangular solve failed (info={info})")
    return w


@dataclass(frozen=True)
class GaussianProposalParams:
    """Parameters of a Gaussian N(mean, covariance_scale * C).

    The covariance shape C is carried by ``metric`` (its ``covariance`` and
    ``chol_factor`` fields); ``covariance_scale`` is the scalar multiplier,
    e.g. 2h for a Langevin proposal with step h.
    """

    mean: np.ndarray
    covariance_scale: float
    metric: "MetricState"

    def __post_init__(self) -> None:
        if not (self.covariance_scale > 0.0 and np.isfinite(self.covariance_scale)):
            raise ValueError(f"covariance_scale must be positive, got {self.covariance_scale}")


def sample_gaussian(params: GaussianProposalParams, rng: np.random.Generator) -> np.ndarray:
    """Draw one vector from N(mean, covariance_scale * C).

    Consumes exactly len(mean) standard normals from ``rng``, in one call.
    """
    z = rng.standard_normal(params.mean.shape[0])
    return params.mean + np.sqrt(params.covariance_scale) * (params.metric.chol_factor @ z)


def log_gaussian_density(point: np.ndarray, params: GaussianProposalParams) -> float:
    """Log density of N(mean, covariance_scale * C) at ``point``."""
    d = params.mean.shape[0]
    delta = point - params.mean
    w = solve_lower_triangular(params.metric.chol_factor, delta)
    quad = float(w @ w) / params.covariance_scale
    log_det = d * np.log(params.covariance_scale) + params.metric.log_det_cov
    return -0.5 * (d * LOG_TWO_PI + log_det + quad)


def standard_normal(rng: np.random.Generator) -> float:
    """One N(0, 1) draw as a float."""
    return float(rng.standard_normal())


# Rational approximation coefficients for the inverse normal CDF
# (Acklam's minimax fit; max relative error about 1.15e-9 before refinement).
_ICDF_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ICDF_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ICDF_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ICDF_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)
_ICDF_P_LOW = 0.02425


def _icdf_half(p: np.ndarray) -> np.ndarray:
    """Inverse normal CDF for p in (0, 0.5]; result is <= 0."""
    a0, a1, a2, a3, a4, a5 = _ICDF_A
    b0, b1, b2, b3, b4 = _ICDF_B
    c0, c1, c2, c3, c4, c5 = _ICDF_C
    d0, d1, d2, d3 = _ICDF_D

    x = np.empty_like(p)
    low = p < _ICDF_P_LOW

    if np.any(low):
        q = np.sqrt(-2.0 * np.log(p[low]))
        num = ((((c0 * q + c1) * q + c2) * q + c3) * q + c4) * q + c5
        den = (((d0 * q + d1) * q + d2) * q + d3) * q + 1.0
        x[low] = num / den

    mid = ~low
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((a0 * r + a1) * r + a2) * r + a3) * r + a4) * r + a5
        den = ((((b0 * r + b1) * r + b2) * r + b3) * r + b4) * r + 1.0
        x[mid] = q * num / den

    # One Halley step against the true CDF, evaluated through erfc so the
    # tail retains full relative precision. Skipped where exp would overflow
    # (far beyond the advertised accuracy window).
    refine = x * x < 1400.0
    if np.any(refine):
        xr = x[refine]
        err = 0.5 * erfc(-xr / np.sqrt(2.0)) - p[refine]
        u = err * np.sqrt(2.0 * np.pi) * np.exp(0.5 * xr * xr)
        x[refine] = xr - u / (1.0 + 0.5 * xr * u)
    return x


def inverse_normal_cdf(p):
    """Quantile function of the standard normal distribution.

    Accepts a scalar or array; returns the matching shape (scalar in,
    float out). Absolute error is at most 1e-8 for p in
    [1e-15, 1 - 1e-15].

    Raises:
        DomainError: any entry of p outside the open interval (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if arr.size == 0:
        return arr.copy()
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("inverse_normal_cdf requires p strictly inside (0, 1)")
    flat = np.atleast_1d(arr).ravel()
    upper = flat > 0.5
    folded = np.where(upper, 1.0 - flat, flat)
    x = _icdf_half(folded)
    x[upper] = -x[upper]
    if np.isscalar(p) or arr.ndim == 0:
        return float(x[0])
    return x.reshape(arr.shape)


def experiment_stream_key(experiment_id: str) -> int:
    """Stable 64-bit integer derived from an experiment identifier."""
    digest = hashlib.sha256(experiment_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def chain_seed_sequence(master_seed: int, experiment_id: str, chain_index: int) -> np.random.SeedSequence:
    """Seed material for one chain: (master seed, hashed experiment id, chain index).

    Distinct experiment ids or chain indices give independent streams under
    the same master seed; repeating all three reproduces the stream exactly.
    """
    if master_seed < 0 or chain_index < 0:
        raise ValueError("master_seed and chain_index must be non-negative")
    return np.random.SeedSequence([master_seed, experiment_stream_key(experiment_id), chain_index])


def make_chain_rng(master_seed: int, experiment_id: str, chain_index: int) -> np.random.Generator:
    """PCG64 generator for one chain of one experiment."""
    return np.random.default_rng(chain_seed_sequence(master_seed, experiment_id, chain_index))

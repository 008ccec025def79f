"""Target potentials and ground-truth oracles for the bundled experiments.

A target is the potential f in the density proportional to exp(-f(x) / beta)
restricted to a domain. Ground truths are computed by numerical quadrature,
with independent closed-form routes (incomplete gamma, truncated-normal
moments) available as cross-checks; the two routes share no code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError


@dataclass(frozen=True)
class Target:
    """Potential f and its gradient for a density exp(-f(x) / beta).

    potential and gradient are the raw (untempered) functions; beta is the
    temperature applied by the samplers.
    """

    potential: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    dimension: int
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError(f"dimension must be at least 1, got {self.dimension}")
        if not (self.beta > 0.0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")

    def tempered_potential(self, x: np.ndarray) -> float:
        return self.potential(x) / self.beta

    def tempered_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.gradient(x) / self.beta

    def with_beta(self, beta: float) -> "Target":
        return replace(self, beta=beta)


def standard_gaussian_target(dimension: int, beta: float = 1.0) -> Target:
    """f(x) = |x|^2 / 2, the standard normal potential."""

    def potential(x: np.ndarray) -> float:
        return 0.5 * float(x @ x)

    def gradient(x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)

    return Target(potential=potential, gradient=gradient, dimension=dimension, beta=beta)


def log_spaced_bounds(first: float = 1.0, last: float = 0.01, count: int = 10) -> np.ndarray:
    """Box half-widths spaced logarithmically from first down to last."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if not (first > 0.0 and last > 0.0):
        raise ValueError("bounds must be positive")
    return np.logspace(np.log10(first), np.log10(last), count)


def gaussian_box_target(bounds: np.ndarray, beta: float = 1.0) -> Target:
    """Independent Gaussians tied to box half-widths b: mean b/2, sd b^1.5 / 2.

    The i-th coordinate has mean mu_i = 0.5 b_i and standard deviation
    sigma_i = 0.5 b_i^(3/2), so narrow coordinates are much stiffer than
    wide ones. Intended for the matching axis-aligned box domain |x_i| <= b_i.
    """
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 1 or b.size == 0 or np.any(b <= 0.0) or not np.all(np.isfinite(b)):
        raise ValueError("bounds must be a 1-D array of positive finite half-widths")
    mu = 0.5 * b
    inv_var = 1.0 / (0.5 * b**1.5) ** 2

    def potential(x: np.ndarray) -> float:
        delta = x - mu
        return 0.5 * float(delta @ (inv_var * delta))

    def gradient(x: np.ndarray) -> np.ndarray:
        return inv_var * (x - mu)

    return Target(potential=potential, gradient=gradient, dimension=b.size, beta=beta)


def bimodal_target(dimension: int, offset: float = 0.5, stiffness: float = 3.0,
                   beta: float = 1.0) -> Target:
    """Two-well potential f = -log(exp(-k|x - c|^2) + exp(-k|x + c|^2)).

    The wells sit at +-offset * (1, ..., 1) with stiffness k. Evaluated in
    log-sum-exp form so deep wells do not underflow.
    """
    if not (offset > 0.0 and np.isfinite(offset)):
        raise ValueError(f"offset must be positive and finite, got {offset}")
    if not (stiffness > 0.0 and np.isfinite(stiffness)):
        raise ValueError(f"stiffness must be positive and finite, got {stiffness}")
    center = offset * np.ones(dimension)
    k = stiffness

    def _well_exponents(x: np.ndarray) -> tuple[float, float]:
        d_plus = x - center
        d_minus = x + center
        return -k * float(d_plus @ d_plus), -k * float(d_minus @ d_minus)

    def potential(x: np.ndarray) -> float:
        e_plus, e_minus = _well_exponents(x)
        top = max(e_plus, e_minus)
        return -(top + math.log(math.exp(e_plus - top) + math.exp(e_minus - top)))

    def gradient(x: np.ndarray) -> np.ndarray:
        e_plus, e_minus = _well_exponents(x)
        top = max(e_plus, e_minus)
        w_plus = math.exp(e_plus - top)
        w_minus = math.exp(e_minus - top)
        total = w_plus + w_minus
        return (2.0 * k / total) * (w_plus * (x - center) + w_minus * (x + center))

    return Target(potential=potential, gradient=gradient, dimension=dimension, beta=beta)


@dataclass(frozen=True)
class GroundTruth:
    """A reference expectation with the method that produced it."""

    functional_name: str
    value: float
    method: str


def regularized_lower_incomplete_gamma(s: float, x: float) -> float:
    """P(s, x), the regularized lower incomplete gamma function.

    Series expansion for x < s + 1, continued fraction (Lentz) for the
    complement otherwise. Relative accuracy near machine precision for
    moderate s; implemented here to serve as an oracle independent of any
    quadrature routine.
    """
    if s <= 0.0 or x < 0.0:
        raise DomainError(f"requires s > 0 and x >= 0, got s={s}, x={x}")
    if x == 0.0:
        return 0.0
    log_prefactor = -x + s * math.log(x) - math.lgamma(s)
    if x < s + 1.0:
        ap = s
        term = 1.0 / s
        total = term
        for _ in range(500):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return total * math.exp(log_prefactor)
    # Lentz continued fraction for Q(s, x)
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 - math.exp(log_prefactor) * h


def truncated_gaussian_ball_norm_expectation(dimension: int, radius: float = 1.0) -> GroundTruth:
    """E|X| for X ~ N(0, I_d) conditioned on |X| <= radius, by quadrature.

    Reduces to one-dimensional radial integrals
    int_0^r t^d e^(-t^2/2) dt / int_0^r t^(d-1) e^(-t^2/2) dt.
    """
    if dimension < 1:
        raise ValueError(f"dimension must be at least 1, got {dimension}")
    if not (radius > 0.0 and np.isfinite(radius)):
        raise ValueError(f"radius must be positive and finite, got {radius}")
    num = integrate.quad(lambda t: t**dimension * math.exp(-0.5 * t * t),
                         0.0, radius, epsabs=0.0, epsrel=1e-12)[0]
    den = integrate.quad(lambda t: t ** (dimension - 1) * math.exp(-0.5 * t * t),
                         0.0, radius, epsabs=0.0, epsrel=1e-12)[0]
    return GroundTruth(functional_name="E_norm", value=num / den, method="quadrature")


def ball_norm_expectation_gamma(dimension: int, radius: float = 1.0) -> GroundTruth:
    """Same expectation via incomplete gamma functions; cross-check route.

    Substituting t = r^2 / 2 turns each radial integral into a lower
    incomplete gamma, giving
    sqrt(2) * igamma((d+1)/2, r^2/2) / igamma(d/2, r^2/2).
    """
    if dimension < 1:
        raise ValueError(f"dimension must be at least 1, got {dimension}")
    half = 0.5 * radius * radius
    s_hi = 0.5 * (dimension + 1)
    s_lo = 0.5 * dimension
    log_num = math.log(regularized_lower_incomplete_gamma(s_hi, half)) + math.lgamma(s_hi)
    log_den = math.log(regularized_lower_incomplete_gamma(s_lo, half)) + math.lgamma(s_lo)
    value = math.sqrt(2.0) * math.exp(log_num - log_den)
    return GroundTruth(functional_name="E_norm", value=value, method="incomplete_gamma")


def box_gaussian_norm_sq_expectation(bounds: np.ndarray, mu: np.ndarray | None = None,
                                     sigma: np.ndarray | None = None) -> GroundTruth:
    """E|X|^2 for independent truncated normals on [-b_i, b_i], by quadrature.

    Defaults mu_i = 0.5 b_i and sigma_i = 0.5 b_i^(3/2) match
    gaussian_box_target. Each coordinate contributes a one-dimensional
    moment integral over the part of [-b_i, b_i] carrying mass.
    """
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 1 or b.size == 0 or np.any(b <= 0.0):
        raise ValueError("bounds must be a 1-D array of positive half-widths")
    mu = 0.5 * b if mu is None else np.asarray(mu, dtype=float)
    sigma = 0.5 * b**1.5 if sigma is None else np.asarray(sigma, dtype=float)
    if mu.shape != b.shape or sigma.shape != b.shape or np.any(sigma <= 0.0):
        raise ValueError("mu and sigma must match bounds in shape, sigma positive")

    total = 0.0
    for b_i, m_i, s_i in zip(b, mu, sigma):
        lo = max(-b_i, m_i - 15.0 * s_i)
        hi = min(b_i, m_i + 15.0 * s_i)

        def weight(t: float, m: float = m_i, s: float = s_i) -> float:
            z = (t - m) / s
            return math.exp(-0.5 * z * z)

        num = integrate.quad(lambda t: t * t * weight(t), lo, hi, epsabs=0.0, epsrel=1e-12)[0]
        den = integrate.quad(weight, lo, hi, epsabs=0.0, epsrel=1e-12)[0]
        total += num / den
    return GroundTruth(functional_name="E_norm_sq", value=total, method="quadrature")


def truncated_normal_second_moment(lo: float, hi: float, mu: float, sigma: float) -> float:
    """E[X^2] for X ~ N(mu, sigma^2) conditioned on lo <= X <= hi, closed form.

    Standard truncated-normal moment identities written with erf; serves as
    the quadrature-free cross-check route.
    """
    if not lo < hi:
        raise ValueError("requires lo < hi")
    if not sigma > 0.0:
        raise ValueError("requires sigma > 0")
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma

    def pdf(z: float) -> float:
        return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    def cdf(z: float) -> float:
        return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))

    mass = cdf(b) - cdf(a)
    if mass <= 0.0:
        raise ValueError("truncation interval carries no mass")
    m1 = (pdf(a) - pdf(b)) / mass
    m2 = (a * pdf(a) - b * pdf(b)) / mass
    return mu * mu + sigma * sigma * (1.0 + m2) + 2.0 * mu * sigma * m1


def box_gaussian_norm_sq_closed_form(bounds: np.ndarray, mu: np.ndarray | None = None,
                                     sigma: np.ndarray | None = None) -> GroundTruth:
    """E|X|^2 for the box target summed from closed-form coordinate moments."""
    b = np.asarray(bounds, dtype=float)
    mu = 0.5 * b if mu is None else np.asarray(mu, dtype=float)
    sigma = 0.5 * b**1.5 if sigma is None else np.asarray(sigma, dtype=float)
    total = sum(truncated_normal_second_moment(-b_i, b_i, m_i, s_i)
                for b_i, m_i, s_i in zip(b, mu, sigma))
    return GroundTruth(functional_name="E_norm_sq", value=total, method="truncated_moments")

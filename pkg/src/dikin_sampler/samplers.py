"""Step kernels for sampling on barrier-defined domains.

Four kernels share one proposal/acceptance core:

* ``step_unadjusted_dl``: Euler-Maruyama discretization of the barrier
  Langevin diffusion, with a divergence correction term and no
  Metropolis filter (biased at finite step size).
* ``step_mdl``: Metropolis-adjusted kernel whose proposal is a drifted
  Gaussian in the barrier metric, with a randomized step size.
* ``step_drw``: the same kernel with the drift removed (random walk in the
  barrier metric).
* ``step_mala``: the same kernel with the metric frozen to the identity,
  i.e. classic MALA restricted to the domain by rejection.

The three Metropolis kernels consume random draws in an identical order
(optional step-size uniform, then the noise vector, then one acceptance
uniform if and only if the candidate is feasible), so the documented
reductions between them hold bitwise on shared streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Protocol

import numpy as np

from .errors import NotInterior, TuningFailed
from .geometry import Barrier, MetricState, divergence_of_covariance, metric_state
from .linalg import GaussianProposalParams, log_gaussian_density, sample_gaussian
from .targets import Target

KERNEL_NAMES = ("unadjusted_dl", "mdl", "drw", "mala")
DIVERGENCE_MODES = ("analytic", "finite_difference", "none")

# Robbins-Monro tuning runs in batches of this many steps; the learning rate
# decays as 0.5 / (batch index).
_TUNE_BATCH = 50
_TUNE_SAFE_BAND = (0.3, 0.9)


class Domain(Protocol):
    """Anything with a strict-interior membership test."""

    def is_interior(self, x: np.ndarray) -> bool: ...


@dataclass(slots=True)
class ChainState:
    """Position of a chain plus everything the kernels reuse at that point.

    The cached metric, potential, and gradient always describe ``position``;
    steps return fresh instances rather than mutating. The potential and
    gradient are stored untempered (the kernels divide by beta where the
    algorithm calls for it).
    """

    position: np.ndarray
    cached_metric: MetricState
    cached_potential: float
    cached_gradient: np.ndarray


@dataclass(slots=True)
class StepRecord:
    """What one step attempted and how it ended."""

    proposed: np.ndarray
    accepted: bool
    step_size_used: float
    log_accept_ratio: float
    kernel_name: str
    boundary_clip: bool = False


@dataclass(frozen=True)
class KernelConfig:
    """Static settings for one kernel run.

    h_max is the proposal step-size ceiling for the Metropolis kernels and
    the Euler step dt for unadjusted_dl. beta is the temperature applied to
    the target for this run. divergence_mode is consulted only by
    unadjusted_dl; the Metropolis kernels never need the divergence.
    """

    kernel_name: str
    h_max: float
    epsilon: float = 0.0
    beta: float = 1.0
    randomize_step: bool = True
    divergence_mode: str = "none"

    def __post_init__(self) -> None:
        if self.kernel_name not in KERNEL_NAMES:
            raise ValueError(f"kernel_name must be one of {KERNEL_NAMES}, got {self.kernel_name!r}")
        if not (self.h_max > 0.0 and np.isfinite(self.h_max)):
            raise ValueError(f"h_max must be positive and finite, got {self.h_max}")
        if self.epsilon < 0.0 or not np.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be non-negative and finite, got {self.epsilon}")
        if not (self.beta > 0.0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if self.divergence_mode not in DIVERGENCE_MODES:
            raise ValueError(f"divergence_mode must be one of {DIVERGENCE_MODES}")
        if self.kernel_name == "unadjusted_dl":
            if self.divergence_mode == "none":
                raise ValueError("unadjusted_dl requires a divergence mode")
            if self.randomize_step:
                raise ValueError("unadjusted_dl uses a fixed Euler step; set randomize_step=False")


@lru_cache(maxsize=16)
def _identity_matrix(dimension: int) -> np.ndarray:
    eye = np.eye(dimension)
    eye.flags.writeable = False
    return eye


def identity_metric(x: np.ndarray) -> MetricState:
    """MetricState with covariance fixed to the identity (flat geometry)."""
    x = np.asarray(x, dtype=float)
    eye = _identity_matrix(x.shape[0])
    return MetricState(point=x, hessian=eye, covariance=eye, chol_factor=eye, log_det_cov=0.0)


def init_chain_state(barrier: Domain, target: Target, position: np.ndarray, epsilon: float,
                     *, flat_metric: bool = False) -> ChainState:
    """Build a fully cached chain state at a strictly interior position.

    flat_metric=True caches the identity metric instead of the barrier
    metric; that is how MALA chains are initialized.
    """
    x = np.asarray(position, dtype=float)
    if not barrier.is_interior(x):
        raise NotInterior("initial position is not strictly interior")
    metric = identity_metric(x.copy()) if flat_metric else metric_state(barrier, x, epsilon)
    return ChainState(position=metric.point, cached_metric=metric,
                      cached_potential=target.potential(metric.point),
                      cached_gradient=target.gradient(metric.point))


def _proposal_mean(state: ChainState, h: float, beta: float, use_drift: bool) -> np.ndarray:
    if not use_drift:
        return state.position
    return state.position - h * (state.cached_metric.covariance @ (state.cached_gradient / beta))


def log_acceptance_ratio(state: ChainState, candidate: ChainState, h: float, target: Target,
                         *, use_drift: bool = True) -> float:
    """Unclamped log Metropolis ratio between two fully cached states.

    log [exp(-f(y)/beta) q_h(x|y)] - log [exp(-f(x)/beta) q_h(y|x)] where
    q_h is the (possibly drifted) Gaussian proposal with covariance
    2h C at its own center.
    """
    beta = target.beta
    forward = GaussianProposalParams(_proposal_mean(state, h, beta, use_drift),
                                     2.0 * h, state.cached_metric)
    reverse = GaussianProposalParams(_proposal_mean(candidate, h, beta, use_drift),
                                     2.0 * h, candidate.cached_metric)
    return ((state.cached_potential - candidate.cached_potential) / beta
            + log_gaussian_density(state.position, reverse)
            - log_gaussian_density(candidate.position, forward))


def _metropolis_accept(state: ChainState, candidate: np.ndarray, h: float, target: Target,
                       metric_fn: Callable[[np.ndarray], MetricState],
                       member_fn: Callable[[np.ndarray], bool],
                       rng: np.random.Generator, use_drift: bool,
                       kernel_name: str) -> tuple[ChainState, StepRecord]:
    """Shared accept/reject tail of every Metropolis kernel.

    An infeasible candidate is rejected before any acceptance draw (the
    target density is zero there and the reverse metric does not exist), so
    the rng stream advances identically across kernels that share proposals.
    """
    if not member_fn(candidate):
        record = StepRecord(proposed=candidate, accepted=False, step_size_used=h,
                            log_accept_ratio=float("-inf"), kernel_name=kernel_name)
        return state, record
    metric = metric_fn(candidate)
    cand_state = ChainState(position=metric.point, cached_metric=metric,
                            cached_potential=target.potential(metric.point),
                            cached_gradient=target.gradient(metric.point))
    log_alpha = min(0.0, log_acceptance_ratio(state, cand_state, h, target, use_drift=use_drift))
    u = rng.random()
    accepted = u <= 0.0 or math.log(u) < log_alpha
    record = StepRecord(proposed=candidate, accepted=accepted, step_size_used=h,
                        log_accept_ratio=log_alpha, kernel_name=kernel_name)
    return (cand_state if accepted else state), record


def _draw_step_size(h_max: float, randomize: bool, rng: np.random.Generator) -> float:
    """h ~ Unif(0, h_max] when randomized, else h_max. Never exactly zero."""
    if not randomize:
        return h_max
    return h_max * (1.0 - rng.random())


def _barrier_metric_fn(barrier: Barrier, epsilon: float) -> Callable[[np.ndarray], MetricState]:
    return lambda y: metric_state(barrier, y, epsilon)


def propose_mdl(state: ChainState, barrier: Barrier, target: Target, h: float, epsilon: float,
                rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Draw a drifted-Gaussian candidate and return its forward log density.

    The proposal is N(x - h C grad(f)(x) / beta, 2h C) with C the metric
    cached on ``state``. barrier and epsilon are part of the call contract
    but the cached metric already encodes them.
    """
    del barrier, epsilon
    params = GaussianProposalParams(_proposal_mean(state, h, target.beta, True),
                                    2.0 * h, state.cached_metric)
    candidate = sample_gaussian(params, rng)
    return candidate, log_gaussian_density(candidate, params)


def accept_mdl(state: ChainState, candidate: np.ndarray, h: float, barrier: Barrier,
               target: Target, epsilon: float,
               rng: np.random.Generator) -> tuple[ChainState, StepRecord]:
    """Metropolis accept/reject for a drifted candidate at shared step h."""
    return _metropolis_accept(state, candidate, h, target,
                              _barrier_metric_fn(barrier, epsilon), barrier.is_interior,
                              rng, use_drift=True, kernel_name="mdl")


def step_mdl(state: ChainState, barrier: Barrier, target: Target, h_max: float, epsilon: float,
             rng: np.random.Generator, *, randomize_step: bool = True) -> tuple[ChainState, StepRecord]:
    """One adjusted Langevin step in the barrier metric, randomized step size."""
    h = _draw_step_size(h_max, randomize_step, rng)
    candidate, _ = propose_mdl(state, barrier, target, h, epsilon, rng)
    return accept_mdl(state, candidate, h, barrier, target, epsilon, rng)


def step_drw(state: ChainState, barrier: Barrier, target: Target, h: float, epsilon: float,
             rng: np.random.Generator, *, randomize_step: bool = True) -> tuple[ChainState, StepRecord]:
    """Random-walk step in the barrier metric: the drifted kernel minus drift."""
    h_used = _draw_step_size(h, randomize_step, rng)
    params = GaussianProposalParams(state.position, 2.0 * h_used, state.cached_metric)
    candidate = sample_gaussian(params, rng)
    return _metropolis_accept(state, candidate, h_used, target,
                              _barrier_metric_fn(barrier, epsilon), barrier.is_interior,
                              rng, use_drift=False, kernel_name="drw")


def step_mala(state: ChainState, target: Target, domain: Domain, h: float,
              rng: np.random.Generator, *, randomize_step: bool = True) -> tuple[ChainState, StepRecord]:
    """Classic MALA restricted to the domain: flat metric, indicator rejection.

    ``state`` must carry the identity metric (see init_chain_state with
    flat_metric=True).
    """
    h_used = _draw_step_size(h, randomize_step, rng)
    params = GaussianProposalParams(_proposal_mean(state, h_used, target.beta, True),
                                    2.0 * h_used, state.cached_metric)
    candidate = sample_gaussian(params, rng)
    return _metropolis_accept(state, candidate, h_used, target,
                              identity_metric, domain.is_interior,
                              rng, use_drift=True, kernel_name="mala")


def step_unadjusted_dl(state: ChainState, barrier: Barrier, target: Target, dt: float,
                       rng: np.random.Generator, *, epsilon: float = 0.0,
                       divergence_mode: str = "auto") -> tuple[ChainState, StepRecord]:
    """Euler-Maruyama step of the barrier Langevin diffusion, no adjustment.

    x' = x - C grad(f) dt + beta (div C) dt + sqrt(2 beta dt) L z. A candidate
    that lands outside the open domain is discarded and the state repeats;
    the record flags this as a boundary clip. Note the drift uses the raw
    gradient: temperature scales the divergence and noise terms instead, so
    lowering beta freezes the dynamics rather than blowing up the drift.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    metric = state.cached_metric
    div = divergence_of_covariance(barrier, state.position, epsilon, mode=divergence_mode)
    beta = target.beta
    z = rng.standard_normal(state.position.shape[0])
    drift = -metric.covariance @ state.cached_gradient + beta * div
    candidate = state.position + dt * drift + math.sqrt(2.0 * beta * dt) * (metric.chol_factor @ z)
    if not barrier.is_interior(candidate):
        record = StepRecord(proposed=candidate, accepted=False, step_size_used=dt,
                            log_accept_ratio=0.0, kernel_name="unadjusted_dl", boundary_clip=True)
        return state, record
    new_metric = metric_state(barrier, candidate, epsilon)
    new_state = ChainState(position=new_metric.point, cached_metric=new_metric,
                           cached_potential=target.potential(new_metric.point),
                           cached_gradient=target.gradient(new_metric.point))
    record = StepRecord(proposed=candidate, accepted=True, step_size_used=dt,
                        log_accept_ratio=0.0, kernel_name="unadjusted_dl")
    return new_state, record


StepFn = Callable[[ChainState, np.random.Generator], tuple[ChainState, StepRecord]]
TunableStepFn = Callable[[ChainState, float, np.random.Generator], tuple[ChainState, StepRecord]]


def make_stepper(config: KernelConfig, barrier: Barrier, target: Target) -> StepFn:
    """Bind a kernel config to a (state, rng) -> (state, record) closure."""
    tunable = make_tunable_stepper(config, barrier, target)

    def step(state: ChainState, rng: np.random.Generator) -> tuple[ChainState, StepRecord]:
        return tunable(state, config.h_max, rng)

    return step


def make_tunable_stepper(config: KernelConfig, barrier: Barrier, target: Target) -> TunableStepFn:
    """Like make_stepper but with the step-size ceiling as a call argument.

    This is the form the autotuner drives; the configured h_max is ignored
    in favor of the argument.
    """
    run_target = target.with_beta(config.beta)
    name = config.kernel_name

    if name == "unadjusted_dl":
        def step(state: ChainState, h: float, rng: np.random.Generator):
            return step_unadjusted_dl(state, barrier, run_target, h, rng,
                                      epsilon=config.epsilon,
                                      divergence_mode=config.divergence_mode)
    elif name == "mdl":
        def step(state: ChainState, h: float, rng: np.random.Generator):
            return step_mdl(state, barrier, run_target, h, config.epsilon, rng,
                            randomize_step=config.randomize_step)
    elif name == "drw":
        def step(state: ChainState, h: float, rng: np.random.Generator):
            return step_drw(state, barrier, run_target, h, config.epsilon, rng,
                            randomize_step=config.randomize_step)
    elif name == "mala":
        def step(state: ChainState, h: float, rng: np.random.Generator):
            return step_mala(state, run_target, barrier, h, rng,
                             randomize_step=config.randomize_step)
    else:  # unreachable; KernelConfig validates
        raise ValueError(f"unknown kernel {name!r}")
    return step


def initial_state_for(config: KernelConfig, barrier: Domain, target: Target,
                      position: np.ndarray) -> ChainState:
    """Initial ChainState appropriate for the configured kernel."""
    return init_chain_state(barrier, target.with_beta(config.beta), position, config.epsilon,
                            flat_metric=(config.kernel_name == "mala"))


def tune_step_size(kernel: TunableStepFn, initial_state: ChainState, *,
                   target_acceptance: float = 0.6, warmup_iters: int = 2000,
                   h_init: float = 0.1, rng: np.random.Generator) -> float:
    """Robbins-Monro search for the step ceiling hitting a target acceptance.

    Runs ``warmup_iters`` steps in batches of 50; after batch k the log step
    size moves by (0.5 / k) times the batch acceptance-rate error. The
    returned value is meant to be frozen for the measurement phase, and all
    draws made here discarded.

    Raises:
        ValueError: warmup_iters below 1000 (too short to trust).
        TuningFailed: acceptance over the final 200 steps is outside
            [0.3, 0.9].
    """
    if warmup_iters < 1000:
        raise ValueError(f"warmup_iters must be at least 1000, got {warmup_iters}")
    if not (0.0 < target_acceptance <= 1.0):
        raise ValueError(f"target_acceptance must be in (0, 1], got {target_acceptance}")
    if not (h_init > 0.0 and np.isfinite(h_init)):
        raise ValueError(f"h_init must be positive and finite, got {h_init}")

    log_h = math.log(h_init)
    state = initial_state
    batches = warmup_iters // _TUNE_BATCH
    tail: list[float] = []
    for k in range(1, batches + 1):
        h = math.exp(log_h)
        accepted = 0
        for _ in range(_TUNE_BATCH):
            state, record = kernel(state, h, rng)
            accepted += record.accepted
        rate = accepted / _TUNE_BATCH
        log_h += (0.5 / k) * (rate - target_acceptance)
        tail.append(rate)

    final_rate = float(np.mean(tail[-4:]))
    lo, hi = _TUNE_SAFE_BAND
    if not (lo <= final_rate <= hi):
        raise TuningFailed(
            f"acceptance {final_rate:.3f} outside [{lo}, {hi}] after {warmup_iters} tuning steps")
    return math.exp(log_h)

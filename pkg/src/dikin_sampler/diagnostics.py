"""Convergence and mixing diagnostics over completed chain traces.

Everything here is pure post-processing: rank-normalized split R-hat,
rolling-mean error curves against a known expectation, inter-well transition
counts for the two-well target, and acceptance-burst statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby

import numpy as np
from scipy.stats import rankdata

from .errors import ZeroVariance
from .linalg import inverse_normal_cdf


@dataclass(frozen=True)
class ChainMatrix:
    """Draws arranged chains x iterations x dimensions, after warmup discard.

    iteration_offset records how many leading iterations were discarded
    before these draws, so downstream reports can state absolute positions.
    """

    draws: np.ndarray
    iteration_offset: int = 0

    def __post_init__(self) -> None:
        if self.draws.ndim != 3:
            raise ValueError(f"draws must be 3-D (chains, iterations, dims), got {self.draws.shape}")
        if self.iteration_offset < 0:
            raise ValueError("iteration_offset must be non-negative")

    @property
    def chains(self) -> int:
        return self.draws.shape[0]

    @property
    def iterations(self) -> int:
        return self.draws.shape[1]

    @property
    def dimensions(self) -> int:
        return self.draws.shape[2]


@dataclass(frozen=True)
class TransitionCount:
    """Inter-well transition counts, one entry per chain."""

    per_chain_counts: np.ndarray
    threshold: float
    well_state_sequence: np.ndarray | None = None


def _split_halves(draws: np.ndarray) -> np.ndarray:
    """(m, n) -> (2m, n//2), dropping one trailing draw per chain if n is odd."""
    m, n = draws.shape
    half = n // 2
    trimmed = draws[:, : 2 * half]
    return trimmed.reshape(m * 2, half)


def rank_normalize(values: np.ndarray) -> np.ndarray:
    """Map values to normal scores by joint ranking with average ties.

    z = Phi^-1((rank - 3/8) / (N + 1/4)) over all entries pooled; the shape
    is preserved.
    """
    flat = np.asarray(values, dtype=float).ravel()
    ranks = rankdata(flat, method="average")
    z = inverse_normal_cdf((ranks - 0.375) / (flat.size + 0.25))
    return np.asarray(z, dtype=float).reshape(np.shape(values))


def split_rhat_rank_normalized(draws: np.ndarray) -> float:
    """Rank-normalized split R-hat of one scalar quantity across chains.

    Chains are split in half, all values are jointly rank-normalized, and
    the classic R-hat is computed on the normal scores:
    sqrt((((n'-1)/n') W + B/n') / W) with n' the half-length, W the mean
    within-chain variance, and B = n' times the variance of chain means.

    Args:
        draws: array (m, n) with m >= 2 chains of n >= 4 scalar draws.

    Raises:
        ZeroVariance: all split chains are internally constant (W = 0).
    """
    a = np.asarray(draws, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"draws must be 2-D (chains, iterations), got shape {a.shape}")
    m, n = a.shape
    if m < 2:
        raise ValueError(f"need at least 2 chains, got {m}")
    if n < 4:
        raise ValueError(f"need at least 4 draws per chain, got {n}")

    z = rank_normalize(_split_halves(a))
    half = z.shape[1]
    within = float(np.mean(np.var(z, axis=1, ddof=1)))
    if within == 0.0:
        raise ZeroVariance("all split chains are constant; R-hat undefined")
    between = half * float(np.var(np.mean(z, axis=1), ddof=1))
    pooled = (half - 1) / half * within + between / half
    return float(np.sqrt(pooled / within))


def _scalar_series(draws: np.ndarray, functional: str) -> np.ndarray:
    a = np.asarray(draws, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"draws must be 1-D or 2-D, got shape {a.shape}")
    if functional == "norm_sq":
        return np.einsum("ij,ij->i", a, a)
    if functional == "norm":
        return np.linalg.norm(a, axis=1)
    raise ValueError(f"unknown functional {functional!r}")


def rolling_mean_error(draws: np.ndarray, mu_star: float, *,
                       functional: str = "norm_sq") -> np.ndarray:
    """|running mean of a scalar functional - mu_star| at every prefix length.

    The default functional is the squared norm of each draw; "norm" selects
    the plain norm. One cumulative pass, no per-t recomputation.
    """
    scalars = _scalar_series(draws, functional)
    running = np.cumsum(scalars) / np.arange(1, scalars.size + 1)
    return np.abs(running - mu_star)


def aggregate_error_curves(curves: np.ndarray) -> dict[str, np.ndarray]:
    """Pointwise mean, median, and interdecile band across repeated runs.

    Args:
        curves: array (runs, t) of per-run error curves.
    """
    a = np.asarray(curves, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"curves must be 2-D (runs, t), got shape {a.shape}")
    return {
        "mean": np.mean(a, axis=0),
        "median": np.median(a, axis=0),
        "p10": np.percentile(a, 10, axis=0),
        "p90": np.percentile(a, 90, axis=0),
    }


def _well_states(draws: np.ndarray, threshold: float) -> np.ndarray:
    """Per-draw well classification: +1, -1, or 0 for the in-between band."""
    plus = np.all(draws > threshold, axis=-1)
    minus = np.all(draws < -threshold, axis=-1)
    return plus.astype(np.int8) - minus.astype(np.int8)


def _count_flips(states: np.ndarray) -> int:
    definite = states[states != 0]
    if definite.size < 2:
        return 0
    return int(np.sum(definite[1:] != definite[:-1]))


def count_well_transitions(draws: np.ndarray, threshold: float = 1e-3,
                           *, keep_states: bool = False) -> TransitionCount:
    """Count flips between the all-positive and all-negative wells.

    A draw is in the plus well when every coordinate exceeds +threshold, in
    the minus well when every coordinate is below -threshold, and in neither
    otherwise. A transition is a change of the most recent definite well;
    stretches of neither-state draws are skipped, not reset. The first
    definite well only sets the baseline.

    Accepts one chain (n, d) or a stack of chains (m, n, d); counting must
    run on unthinned traces, since thinning can erase well visits.
    """
    a = np.asarray(draws, dtype=float)
    single = a.ndim == 2
    if single:
        a = a[None, :, :]
    if a.ndim != 3:
        raise ValueError(f"draws must be (n, d) or (m, n, d), got shape {a.shape}")
    states = _well_states(a, threshold)
    counts = np.array([_count_flips(states[c]) for c in range(a.shape[0])], dtype=int)
    kept = None
    if keep_states:
        kept = states[0] if single else states
    return TransitionCount(per_chain_counts=counts, threshold=threshold,
                           well_state_sequence=kept)


@dataclass(frozen=True)
class AcceptanceStats:
    """Overall acceptance rate plus run-length histograms of accept bursts."""

    rate: float
    accept_bursts: dict[int, int]
    reject_bursts: dict[int, int]


def acceptance_stats(flags) -> AcceptanceStats:
    """Summarize a sequence of accept/reject outcomes.

    Args:
        flags: iterable of booleans, or of step records exposing .accepted.
    """
    seq = [bool(getattr(f, "accepted", f)) for f in flags]
    if not seq:
        raise ValueError("no step outcomes given")
    accept_bursts: dict[int, int] = {}
    reject_bursts: dict[int, int] = {}
    for value, group in groupby(seq):
        length = sum(1 for _ in group)
        hist = accept_bursts if value else reject_bursts
        hist[length] = hist.get(length, 0) + 1
    return AcceptanceStats(rate=float(np.mean(seq)), accept_bursts=accept_bursts,
                           reject_bursts=reject_bursts)

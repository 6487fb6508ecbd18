"""Monte Carlo play of the hide-and-seek games on a chain.

These estimators exist to verify the exact pipeline in
:mod:`kemeny_lab.invariants` against the games themselves: hitting and
return times, game durations, and excess-visit counts.  Episodes are
embarrassingly parallel; each uses the counter-based stream
``(seed, episode_index)``, and means are reduced with numpy's pairwise
summation over the stored per-episode array, so a fixed seed yields the same
``McEstimate`` bit-for-bit regardless of threading or implementation path.

Game conventions match the hitting-time matrix: durations count steps, and a
coincident draw (hider on the seeker's state) ends the game at 0, which is
exactly the ``m_ii = 0`` term of ``sum_j m_ij w_j``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import RngStream
from .chain import Chain
from .errors import HorizonTooShort, Truncated
from .invariants import stationary_measure

#: per-episode step cap; acceptance runs must report horizon_hits == 0
def step_cap(n: int) -> int:
    return max(10**6, 10**4 * n)


@dataclass(frozen=True)
class McEstimate:
    """A simulation result that carries its own uncertainty.

    ``horizon_hits`` counts episodes truncated by the safety cap; they are
    excluded from mean/stderr and must be reported, never dropped silently.
    """

    mean: float
    stderr: float
    episodes: int
    seed: int
    horizon_hits: int = 0


@dataclass(frozen=True)
class GameI:
    """Seeker fixed at ``start``; hider drawn stationary each episode."""

    start: int


@dataclass(frozen=True)
class GameII:
    """Hider fixed at ``target``; seeker drawn stationary each episode."""

    target: int


def _reduce(samples: np.ndarray, seed: int) -> McEstimate:
    """Mean and stderr of trajectory samples; -1 marks a truncated episode."""
    finished = samples[samples >= 0.0]
    hits = int(samples.size - finished.size)
    if finished.size == 0:
        return McEstimate(math.nan, math.nan, int(samples.size), seed, hits)
    mean = float(np.mean(finished))
    if finished.size > 1:
        stderr = float(np.std(finished, ddof=1) / math.sqrt(finished.size))
    else:
        stderr = 0.0
    return McEstimate(mean, stderr, int(samples.size), seed, hits)


def _reduce_signed(samples: np.ndarray, seed: int) -> McEstimate:
    """Reduction for estimators whose samples may be negative (no cap)."""
    mean = float(np.mean(samples))
    if samples.size > 1:
        stderr = float(np.std(samples, ddof=1) / math.sqrt(samples.size))
    else:
        stderr = 0.0
    return McEstimate(mean, stderr, int(samples.size), seed, 0)


def _tables(chain: Chain):
    w = stationary_measure(chain)
    cols, probs = _kernels.build_row_aliases(chain.P)
    wcols, wprobs = _kernels.build_alias(w)
    return cols, probs, wcols, wprobs


def sample_first_hitting(chain: Chain, start: int, target: int,
                         rng: RngStream) -> int:
    """One sample of T = inf{n >= 1 : X_n = target} given X_0 = start.

    With ``start == target`` this samples the first return time.  Raises
    :class:`Truncated` when the trajectory exceeds the safety cap; callers
    that aggregate convert that into ``horizon_hits``.
    """
    n = chain.n
    if not (0 <= start < n and 0 <= target < n):
        raise ValueError(f"states must lie in [0, {n})")
    cols, probs = _kernels.build_row_aliases(chain.P)
    cap = step_cap(n)
    cur = start
    for steps in range(1, cap + 1):
        u1 = rng.draw()
        u2 = rng.draw()
        slot = min(int(u1 * n), n - 1)
        cur = slot if u2 < probs[cur, slot] else cols[cur, slot]
        if cur == target:
            return steps
    raise Truncated(cap)


def play_game(chain: Chain, mode, episodes: int, seed: int) -> McEstimate:
    """Expected duration of hide-and-seek Game I or Game II.

    Game I durations estimate the start-independent constant
    ``sum_j m_ij w_j``; Game II durations estimate the density ``G_jj`` of
    the fixed hider state.
    """
    if episodes < 1:
        raise ValueError("episodes must be positive")
    n = chain.n
    if isinstance(mode, GameI):
        start, target = mode.start, -1
    elif isinstance(mode, GameII):
        start, target = -1, mode.target
    else:
        raise TypeError(f"unsupported game mode: {mode!r}")
    fixed = start if target < 0 else target
    if not 0 <= fixed < n:
        raise ValueError(f"state {fixed} out of range [0, {n})")
    cols, probs, wcols, wprobs = _tables(chain)
    samples = _kernels.chain_episodes(cols, probs, wcols, wprobs, start,
                                      target, True, step_cap(n), episodes,
                                      seed)
    return _reduce(samples, seed)


def estimate_return_time(chain: Chain, state: int, episodes: int,
                         seed: int) -> McEstimate:
    """Mean first return time to ``state``; expectation is 1 / w_state."""
    if not 0 <= state < chain.n:
        raise ValueError(f"state {state} out of range [0, {chain.n})")
    cols, probs, wcols, wprobs = _tables(chain)
    samples = _kernels.chain_episodes(cols, probs, wcols, wprobs, state,
                                      state, False, step_cap(chain.n),
                                      episodes, seed)
    return _reduce(samples, seed)


def estimate_hitting_time(chain: Chain, start: int, target: int,
                          episodes: int, seed: int) -> McEstimate:
    """Mean first hitting time from ``start`` to ``target``."""
    n = chain.n
    if not (0 <= start < n and 0 <= target < n):
        raise ValueError(f"states must lie in [0, {n})")
    cols, probs, wcols, wprobs = _tables(chain)
    samples = _kernels.chain_episodes(cols, probs, wcols, wprobs, start,
                                      target, False, step_cap(n), episodes,
                                      seed)
    return _reduce(samples, seed)


def mixing_horizon_norm(chain: Chain, horizon: int) -> float:
    """max-norm distance ||P^N - W||_inf, computed, not assumed."""
    w = stationary_measure(chain)
    PN = np.linalg.matrix_power(chain.P, horizon)
    return float(np.max(np.abs(PN - np.tile(w, (chain.n, 1)))))


def estimate_excess_visits(chain: Chain, i: int, j: int, horizon: int,
                           episodes: int, seed: int) -> McEstimate:
    """Paired-difference estimator of the fundamental-matrix entry Z_ij.

    Each episode simulates one trajectory from state i and one from a
    stationary draw, counts visits to j over steps 0..horizon inclusive
    (the initial state counts as a visit), and records the difference.

    The horizon must already mix the chain: requires
    ``||P^horizon - W||_inf <= 1e-3`` and raises :class:`HorizonTooShort`
    otherwise.
    """
    n = chain.n
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"states must lie in [0, {n})")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    achieved = mixing_horizon_norm(chain, horizon)
    if achieved > 1e-3:
        raise HorizonTooShort(horizon, achieved)
    cols, probs, wcols, wprobs = _tables(chain)
    samples = _kernels.excess_visits(cols, probs, wcols, wprobs, i, j,
                                     horizon, episodes, seed)
    return _reduce_signed(samples, seed)

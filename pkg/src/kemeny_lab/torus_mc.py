"""Wrapped Brownian motion on a flat torus: hitting times and the games.

Generator convention
--------------------
Increments are ``sqrt(2 h) N(0, I2)`` per step of size h, wrapped modulo the
lattice.  This scales standard Brownian motion so the generator is the full
(analyst's) Laplacian; equivalently, the expected hitting time then solves
``Delta H = 1`` with the positive geometer's Laplacian and zero boundary
values on the target ball.  With the standard 1/2-generator convention every
mean below would double.  This one choice feeds every torus acceptance
number, and the epsilon-halving slope check is deliberately sensitive to it.

Hitting is detected at the discrete step times only; the walk overshoots the
ball between checks, giving an O(sqrt(h)) positive bias that the mandated
step size keeps inside the Monte Carlo error budgets.  Episodes use the same
counter-based streams as the chain kernels, so estimates are reproducible
bit-for-bit for a fixed seed and independent of thread schedule.
"""

import math
from dataclasses import dataclass

from . import _kernels
from ._rng import RngStream
from .chain_mc import McEstimate, _reduce
from .errors import EpsilonTooLarge, Truncated
from .torus import FlatTorus, robins_mass

#: truncation horizon as a multiple of the analytic duration prediction
_CAP_FACTOR = 1e3


@dataclass(frozen=True)
class BmConfig:
    """Discretization and sampling plan for the Brownian seeker.

    ``step`` is the Euler time step h, required to satisfy
    ``h <= (epsilon / 10)^2`` so the per-step displacement stays well under
    the detection radius.
    """

    step: float
    epsilon: float
    episodes: int
    seed: int

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.step <= (self.epsilon / 10.0) ** 2:
            raise ValueError(
                f"step {self.step} violates h <= (epsilon/10)^2 = "
                f"{(self.epsilon / 10.0) ** 2}")
        if self.episodes < 1:
            raise ValueError("episodes must be positive")


@dataclass(frozen=True)
class TorusGameI:
    """Seeker starts at ``x``; hider placed uniformly each episode."""

    x: tuple


@dataclass(frozen=True)
class TorusGameII:
    """Hider fixed at ``y``; seeker placed uniformly each episode."""

    y: tuple


def _check_epsilon(torus: FlatTorus, epsilon: float):
    if epsilon >= torus.L2 / 4.0:
        raise EpsilonTooLarge(
            f"epsilon {epsilon} >= L2/4 = {torus.L2 / 4.0}")


def time_cap(torus: FlatTorus, epsilon: float) -> float:
    """Truncation time T_MAX, a large multiple of the analytic prediction."""
    predicted = (-torus.volume * math.log(epsilon) / (2.0 * math.pi)
                 + torus.volume * robins_mass(torus))
    return _CAP_FACTOR * predicted


def max_episode_steps(torus: FlatTorus, cfg: BmConfig) -> int:
    """Safety cap in steps, derived from :func:`time_cap`."""
    return int(math.ceil(time_cap(torus, cfg.epsilon) / cfg.step))


def simulate_bm_hitting(torus: FlatTorus, x, y, cfg: BmConfig,
                        rng: RngStream) -> float:
    """One sample of the time for the walk from x to enter the ball at y.

    Starting inside the ball returns 0.  Raises :class:`Truncated` at the
    safety cap; batch estimators convert that into ``horizon_hits``.
    """
    _check_epsilon(torus, cfg.epsilon)
    max_steps = max_episode_steps(torus, cfg)
    sq2h = math.sqrt(2.0 * cfg.step)
    eps2 = cfg.epsilon * cfg.epsilon
    two_pi = 2.0 * math.pi
    L1, L2 = torus.L1, torus.L2
    x1, x2 = torus.reduce(x)
    y1, y2 = torus.reduce(y)
    steps = 0
    while steps <= max_steps:
        d1 = x1 - y1
        d1 -= L1 * math.floor(d1 / L1 + 0.5)
        d2 = x2 - y2
        d2 -= L2 * math.floor(d2 / L2 + 0.5)
        if d1 * d1 + d2 * d2 <= eps2:
            return steps * cfg.step
        u1 = rng.draw()
        u2 = rng.draw()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        x1 += sq2h * r * math.cos(two_pi * u2)
        x2 += sq2h * r * math.sin(two_pi * u2)
        x1 -= L1 * math.floor(x1 / L1)
        x2 -= L2 * math.floor(x2 / L2)
        steps += 1
    raise Truncated(time_cap(torus, cfg.epsilon))


def estimate_bm_hitting(torus: FlatTorus, x, y, cfg: BmConfig) -> McEstimate:
    """Mean hitting time for fixed endpoints over ``cfg.episodes`` walks."""
    _check_epsilon(torus, cfg.epsilon)
    x1, x2 = torus.reduce(x)
    y1, y2 = torus.reduce(y)
    samples = _kernels.bm_episodes(
        torus.L1, torus.L2, x1, x2, y1, y2, cfg.epsilon, cfg.step, 0,
        max_episode_steps(torus, cfg), cfg.episodes, cfg.seed)
    return _reduce(samples, cfg.seed)


def play_torus_game(torus: FlatTorus, mode, cfg: BmConfig) -> McEstimate:
    """Expected duration of hide-and-seek Game I or Game II on the torus.

    Game I draws the hider uniformly (exactly dV/V on a flat torus) and is
    declared found immediately when the draw lands within epsilon of the
    seeker, matching the analytic average over the complement of the ball.
    """
    _check_epsilon(torus, cfg.epsilon)
    if isinstance(mode, TorusGameI):
        a1, a2 = torus.reduce(mode.x)
        b1, b2 = 0.0, 0.0
        kernel_mode = 1
    elif isinstance(mode, TorusGameII):
        b1, b2 = torus.reduce(mode.y)
        a1, a2 = 0.0, 0.0
        kernel_mode = 2
    else:
        raise TypeError(f"unsupported game mode: {mode!r}")
    samples = _kernels.bm_episodes(
        torus.L1, torus.L2, a1, a2, b1, b2, cfg.epsilon, cfg.step,
        kernel_mode, max_episode_steps(torus, cfg), cfg.episodes, cfg.seed)
    return _reduce(samples, cfg.seed)

"""Hot Monte Carlo inner loops.

Each kernel exists twice: a numba ``@njit(parallel=True)`` version and a pure
Python reference (``*_py``).  Both consume the counter-based streams defined
in ``_rng`` with one stream per episode, so a fixed seed gives bit-identical
per-episode outputs regardless of implementation or thread schedule.  The
active implementation is chosen per call: set ``KEMENY_LAB_NO_NUMBA=1`` to
force the reference path, and ``KEMENY_LAB_THREADS`` to cap the number of
threads used by the compiled path.

``benchmarks/benchmark_kernels.py`` times the two paths against each other.
"""

import math
import os

import numpy as np

from ._rng import GOLDEN, STREAM_SALT, U53_INV, mix64, stream_base, uniform

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap

    prange = range

_ENV_DISABLE = "KEMENY_LAB_NO_NUMBA"
_ENV_THREADS = "KEMENY_LAB_THREADS"

_U = np.uint64
_G64 = _U(GOLDEN)
_SALT = _U(STREAM_SALT)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)


def numba_enabled() -> bool:
    """True when the compiled kernels are selected for this call."""
    if not HAVE_NUMBA:
        return False
    return os.environ.get(_ENV_DISABLE, "").lower() not in ("1", "true", "yes")


def apply_thread_cap():
    """Honor KEMENY_LAB_THREADS before entering a parallel kernel."""
    if not HAVE_NUMBA:
        return
    raw = os.environ.get(_ENV_THREADS)
    if not raw:
        return
    cap = max(1, int(raw))
    numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# alias tables (built once per chain; O(1) draws inside the kernels)
# ---------------------------------------------------------------------------

def build_alias(p):
    """Vose alias table for one discrete distribution.

    Returns (cols, probs): draw u1, u2 uniform, take slot = floor(u1 * n),
    then slot itself if u2 < probs[slot] else cols[slot].
    """
    p = np.asarray(p, dtype=np.float64)
    n = p.size
    probs = np.zeros(n)
    cols = np.arange(n, dtype=np.int64)
    scaled = p * n
    small = [k for k in range(n) if scaled[k] < 1.0]
    large = [k for k in range(n) if scaled[k] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        probs[s] = scaled[s]
        cols[s] = g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    for k in large:
        probs[k] = 1.0
    for k in small:  # only reachable through rounding; treat as certain
        probs[k] = 1.0
    return cols, probs


def build_row_aliases(P):
    """Alias tables for every row of a transition matrix."""
    n = P.shape[0]
    cols = np.empty((n, n), dtype=np.int64)
    probs = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        cols[i], probs[i] = build_alias(P[i])
    return cols, probs


# ---------------------------------------------------------------------------
# compiled stream primitives (uint64 twins of _rng)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _nb_mix64(z):
    z = z + _G64
    z = (z ^ (z >> _U(30))) * _M1
    z = (z ^ (z >> _U(27))) * _M2
    return z ^ (z >> _U(31))


@njit(cache=True)
def _nb_stream_base(seed, stream_index):
    return _nb_mix64(_nb_mix64(seed) ^ _nb_mix64(stream_index ^ _SALT))


@njit(cache=True)
def _nb_uniform(base, counter):
    z = _nb_mix64(base + counter * _G64)
    return (z >> _U(11)) * U53_INV


# ---------------------------------------------------------------------------
# chain episodes: hide-and-seek games, hitting times, return times
# ---------------------------------------------------------------------------
# start/target < 0 means "draw from the stationary alias table each episode".
# zero_on_match=True implements the game convention that a coincident draw
# ends immediately; False walks at least one step (hitting/return times).
# out[e] = step count, or -1.0 when the episode hit the cap.

@njit(cache=True, parallel=True)
def _chain_episodes_nb(cols, probs, wcols, wprobs, start, target,
                       zero_on_match, cap, episodes, seed, out):
    n = probs.shape[0]
    for e in prange(episodes):
        base = _nb_stream_base(_U(seed), _U(e))
        k = _U(0)
        i = start
        if i < 0:
            u1 = _nb_uniform(base, k)
            u2 = _nb_uniform(base, k + _U(1))
            k += _U(2)
            slot = int(u1 * n)
            if slot >= n:
                slot = n - 1
            i = slot if u2 < wprobs[slot] else wcols[slot]
        j = target
        if j < 0:
            u1 = _nb_uniform(base, k)
            u2 = _nb_uniform(base, k + _U(1))
            k += _U(2)
            slot = int(u1 * n)
            if slot >= n:
                slot = n - 1
            j = slot if u2 < wprobs[slot] else wcols[slot]
        if zero_on_match and i == j:
            out[e] = 0.0
            continue
        cur = i
        res = -1.0
        steps = 0
        while steps < cap:
            u1 = _nb_uniform(base, k)
            u2 = _nb_uniform(base, k + _U(1))
            k += _U(2)
            slot = int(u1 * n)
            if slot >= n:
                slot = n - 1
            cur = slot if u2 < probs[cur, slot] else cols[cur, slot]
            steps += 1
            if cur == j:
                res = float(steps)
                break
        out[e] = res


def _chain_episodes_py(cols, probs, wcols, wprobs, start, target,
                       zero_on_match, cap, episodes, seed, out):
    n = probs.shape[0]
    for e in range(episodes):
        base = stream_base(seed, e)
        k = 0
        i = start
        if i < 0:
            u1 = uniform(base, k)
            u2 = uniform(base, k + 1)
            k += 2
            slot = min(int(u1 * n), n - 1)
            i = slot if u2 < wprobs[slot] else wcols[slot]
        j = target
        if j < 0:
            u1 = uniform(base, k)
            u2 = uniform(base, k + 1)
            k += 2
            slot = min(int(u1 * n), n - 1)
            j = slot if u2 < wprobs[slot] else wcols[slot]
        if zero_on_match and i == j:
            out[e] = 0.0
            continue
        cur = i
        res = -1.0
        steps = 0
        while steps < cap:
            u1 = uniform(base, k)
            u2 = uniform(base, k + 1)
            k += 2
            slot = min(int(u1 * n), n - 1)
            cur = slot if u2 < probs[cur, slot] else cols[cur, slot]
            steps += 1
            if cur == j:
                res = float(steps)
                break
        out[e] = res


def chain_episodes(cols, probs, wcols, wprobs, start, target,
                   zero_on_match, cap, episodes, seed):
    """Run chain episodes on the active implementation; returns float64 array."""
    out = np.empty(episodes, dtype=np.float64)
    if numba_enabled():
        apply_thread_cap()
        _chain_episodes_nb(cols, probs, wcols, wprobs, start, target,
                           zero_on_match, cap, episodes, seed, out)
    else:
        _chain_episodes_py(cols, probs, wcols, wprobs, start, target,
                           zero_on_match, cap, episodes, seed, out)
    return out


# ---------------------------------------------------------------------------
# excess visits: paired trajectories from e_i and from the stationary draw
# ---------------------------------------------------------------------------
# Visits are counted at steps 0..horizon inclusive, the initial state included.

@njit(cache=True, parallel=True)
def _excess_visits_nb(cols, probs, wcols, wprobs, i, j, horizon,
                      episodes, seed, out):
    n = probs.shape[0]
    for e in prange(episodes):
        base = _nb_stream_base(_U(seed), _U(e))
        k = _U(0)
        cur = i
        count_i = 1 if cur == j else 0
        for _ in range(horizon):
            u1 = _nb_uniform(base, k)
            u2 = _nb_uniform(base, k + _U(1))
            k += _U(2)
            slot = int(u1 * n)
            if slot >= n:
                slot = n - 1
            cur = slot if u2 < probs[cur, slot] else cols[cur, slot]
            if cur == j:
                count_i += 1
        u1 = _nb_uniform(base, k)
        u2 = _nb_uniform(base, k + _U(1))
        k += _U(2)
        slot = int(u1 * n)
        if slot >= n:
            slot = n - 1
        cur = slot if u2 < wprobs[slot] else wcols[slot]
        count_w = 1 if cur == j else 0
        for _ in range(horizon):
            u1 = _nb_uniform(base, k)
            u2 = _nb_uniform(base, k + _U(1))
            k += _U(2)
            slot = int(u1 * n)
            if slot >= n:
                slot = n - 1
            cur = slot if u2 < probs[cur, slot] else cols[cur, slot]
            if cur == j:
                count_w += 1
        out[e] = float(count_i - count_w)


def _excess_visits_py(cols, probs, wcols, wprobs, i, j, horizon,
                      episodes, seed, out):
    n = probs.shape[0]
    for e in range(episodes):
        base = stream_base(seed, e)
        k = 0
        cur = i
        count_i = 1 if cur == j else 0
        for _ in range(horizon):
            u1 = uniform(base, k)
            u2 = uniform(base, k + 1)
            k += 2
            slot = min(int(u1 * n), n - 1)
            cur = slot if u2 < probs[cur, slot] else cols[cur, slot]
            if cur == j:
                count_i += 1
        u1 = uniform(base, k)
        u2 = uniform(base, k + 1)
        k += 2
        slot = min(int(u1 * n), n - 1)
        cur = slot if u2 < wprobs[slot] else wcols[slot]
        count_w = 1 if cur == j else 0
        for _ in range(horizon):
            u1 = uniform(base, k)
            u2 = uniform(base, k + 1)
            k += 2
            slot = min(int(u1 * n), n - 1)
            cur = slot if u2 < probs[cur, slot] else cols[cur, slot]
            if cur == j:
                count_w += 1
        out[e] = float(count_i - count_w)


def excess_visits(cols, probs, wcols, wprobs, i, j, horizon, episodes, seed):
    out = np.empty(episodes, dtype=np.float64)
    if numba_enabled():
        apply_thread_cap()
        _excess_visits_nb(cols, probs, wcols, wprobs, i, j, horizon,
                          episodes, seed, out)
    else:
        _excess_visits_py(cols, probs, wcols, wprobs, i, j, horizon,
                          episodes, seed, out)
    return out


# ---------------------------------------------------------------------------
# wrapped Brownian motion on a flat rectangular torus
# ---------------------------------------------------------------------------
# Increments are sqrt(2h) * N(0, I2) so the expected hitting time solves the
# positive-Laplacian equation with unit source; see torus_mc for the contract.
# mode 0: both endpoints fixed; 1: hider uniform per episode (Game I);
# 2: seeker uniform per episode (Game II).  out[e] = elapsed time or -1.0.

@njit(cache=True, parallel=True)
def _bm_episodes_nb(L1, L2, a1, a2, b1, b2, eps, h, mode, max_steps,
                    episodes, seed, out):
    sq2h = math.sqrt(2.0 * h)
    eps2 = eps * eps
    two_pi = 2.0 * math.pi
    for e in prange(episodes):
        base = _nb_stream_base(_U(seed), _U(e))
        k = _U(0)
        x1 = a1
        x2 = a2
        y1 = b1
        y2 = b2
        if mode == 1:
            y1 = _nb_uniform(base, k) * L1
            y2 = _nb_uniform(base, k + _U(1)) * L2
            k += _U(2)
        elif mode == 2:
            x1 = _nb_uniform(base, k) * L1
            x2 = _nb_uniform(base, k + _U(1)) * L2
            k += _U(2)
        steps = 0
        hit = -1
        while steps <= max_steps:
            d1 = x1 - y1
            d1 -= L1 * math.floor(d1 / L1 + 0.5)
            d2 = x2 - y2
            d2 -= L2 * math.floor(d2 / L2 + 0.5)
            if d1 * d1 + d2 * d2 <= eps2:
                hit = steps
                break
            u1 = _nb_uniform(base, k)
            u2 = _nb_uniform(base, k + _U(1))
            k += _U(2)
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            x1 += sq2h * r * math.cos(two_pi * u2)
            x2 += sq2h * r * math.sin(two_pi * u2)
            x1 -= L1 * math.floor(x1 / L1)
            x2 -= L2 * math.floor(x2 / L2)
            steps += 1
        out[e] = hit * h if hit >= 0 else -1.0


def _bm_episodes_py(L1, L2, a1, a2, b1, b2, eps, h, mode, max_steps,
                    episodes, seed, out):
    sq2h = math.sqrt(2.0 * h)
    eps2 = eps * eps
    two_pi = 2.0 * math.pi
    for e in range(episodes):
        base = stream_base(seed, e)
        k = 0
        x1, x2, y1, y2 = a1, a2, b1, b2
        if mode == 1:
            y1 = uniform(base, k) * L1
            y2 = uniform(base, k + 1) * L2
            k += 2
        elif mode == 2:
            x1 = uniform(base, k) * L1
            x2 = uniform(base, k + 1) * L2
            k += 2
        steps = 0
        hit = -1
        while steps <= max_steps:
            d1 = x1 - y1
            d1 -= L1 * math.floor(d1 / L1 + 0.5)
            d2 = x2 - y2
            d2 -= L2 * math.floor(d2 / L2 + 0.5)
            if d1 * d1 + d2 * d2 <= eps2:
                hit = steps
                break
            u1 = uniform(base, k)
            u2 = uniform(base, k + 1)
            k += 2
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            x1 += sq2h * r * math.cos(two_pi * u2)
            x2 += sq2h * r * math.sin(two_pi * u2)
            x1 -= L1 * math.floor(x1 / L1)
            x2 -= L2 * math.floor(x2 / L2)
            steps += 1
        out[e] = hit * h if hit >= 0 else -1.0


def bm_episodes(L1, L2, a1, a2, b1, b2, eps, h, mode, max_steps,
                episodes, seed):
    out = np.empty(episodes, dtype=np.float64)
    if numba_enabled():
        apply_thread_cap()
        _bm_episodes_nb(L1, L2, a1, a2, b1, b2, eps, h, mode, max_steps,
                        episodes, seed, out)
    else:
        _bm_episodes_py(L1, L2, a1, a2, b1, b2, eps, h, mode, max_steps,
                        episodes, seed, out)
    return out

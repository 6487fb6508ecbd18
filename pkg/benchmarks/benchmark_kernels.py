#!/usr/bin/env python3
"""Time the numba kernels against the pure-Python reference path.

Run directly::

    python3 benchmarks/benchmark_kernels.py

Both paths consume identical counter-based streams, so besides timing this
doubles as an end-to-end agreement check: every workload asserts the two
implementations return bit-identical per-episode arrays before reporting.
"""

import time

import numpy as np

from kemeny_lab import FlatTorus, stationary_measure, validate_chain
from kemeny_lab._kernels import (HAVE_NUMBA, _bm_episodes_nb, _bm_episodes_py,
                                 _chain_episodes_nb, _chain_episodes_py,
                                 _excess_visits_nb, _excess_visits_py,
                                 build_alias, build_row_aliases)

SEED = 20240817


def _timed(func, *args, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_chain_game():
    rng = np.random.default_rng(5)
    P = rng.uniform(0.05, 1.0, size=(16, 16))
    P /= P.sum(axis=1, keepdims=True)
    chain = validate_chain(P)
    w = stationary_measure(chain)
    cols, probs = build_row_aliases(chain.P)
    wcols, wprobs = build_alias(w)
    episodes = 40000
    out_nb = np.empty(episodes)
    out_py = np.empty(episodes)
    args = (cols, probs, wcols, wprobs, 0, -1, True, 10**6, episodes, SEED)
    if HAVE_NUMBA:
        _chain_episodes_nb(*args, out_nb)   # compile before timing
    t_nb = _timed(_chain_episodes_nb, *args, out_nb) if HAVE_NUMBA else None
    t_py = _timed(_chain_episodes_py, *args, out_py, repeats=1)
    if HAVE_NUMBA:
        assert np.array_equal(out_nb, out_py), "chain kernel paths diverged"
    return "chain game I (n=16, 40k episodes)", t_nb, t_py


def bench_excess_visits():
    chain = validate_chain([[0.5, 0.5], [0.5, 0.5]])
    w = stationary_measure(chain)
    cols, probs = build_row_aliases(chain.P)
    wcols, wprobs = build_alias(w)
    episodes = 20000
    out_nb = np.empty(episodes)
    out_py = np.empty(episodes)
    args = (cols, probs, wcols, wprobs, 0, 0, 50, episodes, SEED)
    if HAVE_NUMBA:
        _excess_visits_nb(*args, out_nb)
    t_nb = _timed(_excess_visits_nb, *args, out_nb) if HAVE_NUMBA else None
    t_py = _timed(_excess_visits_py, *args, out_py, repeats=1)
    if HAVE_NUMBA:
        assert np.array_equal(out_nb, out_py), "excess kernel paths diverged"
    return "excess visits (N=50, 20k episodes)", t_nb, t_py


def bench_bm():
    torus = FlatTorus(1.0, 1.0)
    eps = 0.1
    h = (eps / 10.0) ** 2
    episodes = 400
    out_nb = np.empty(episodes)
    out_py = np.empty(episodes)
    args = (torus.L1, torus.L2, 0.0, 0.0, 0.5, 0.5, eps, h, 0, 10**7,
            episodes, SEED)
    if HAVE_NUMBA:
        _bm_episodes_nb(*args, out_nb)
    t_nb = _timed(_bm_episodes_nb, *args, out_nb) if HAVE_NUMBA else None
    t_py = _timed(_bm_episodes_py, *args, out_py, repeats=1)
    if HAVE_NUMBA:
        assert np.array_equal(out_nb, out_py), "bm kernel paths diverged"
    return "brownian hitting (eps=0.1, 400 episodes)", t_nb, t_py


def main():
    print(f"numba available: {HAVE_NUMBA}")
    print(f"{'workload':44s} {'numba':>9s} {'python':>9s} {'speedup':>8s}")
    for bench in (bench_chain_game, bench_excess_visits, bench_bm):
        name, t_nb, t_py = bench()
        nb_txt = f"{t_nb:8.3f}s" if t_nb is not None else "     n/a"
        speed = f"{t_py / t_nb:7.1f}x" if t_nb else "     n/a"
        print(f"{name:44s} {nb_txt} {t_py:8.3f}s {speed}")


if __name__ == "__main__":
    main()

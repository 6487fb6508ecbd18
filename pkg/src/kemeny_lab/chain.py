"""Validated finite Markov chains.

A :class:`Chain` wraps a row-stochastic transition matrix that has been
checked for irreducibility and aperiodicity, the standing hypotheses behind
every quantity computed in :mod:`kemeny_lab.invariants`.  Validation fails
loudly: rows are never renormalized silently.
"""

from dataclasses import dataclass
from math import gcd

import numpy as np

from .errors import NegativeEntry, NotStochastic, Periodic, Reducible

#: row-sum tolerance for accepting a matrix as stochastic
TOL_STOCH = 1e-9

#: hard cap on dense chain size; everything here is O(n^3) dense linear algebra
MAX_STATES = 4096


@dataclass(frozen=True)
class Chain:
    """Immutable validated chain. Construct through :func:`validate_chain`."""

    P: np.ndarray
    labels: tuple = None

    @property
    def n(self) -> int:
        return self.P.shape[0]


def _adjacency(P):
    """Successor lists of the directed graph {(i, j): p_ij > 0}."""
    return [np.flatnonzero(P[i] > 0.0).tolist() for i in range(P.shape[0])]


def _strongly_connected_components(adj):
    """Tarjan's algorithm, iterative to survive deep graphs."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    components = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for next_pi in range(pi, len(adj[v])):
                w = adj[v][next_pi]
                if index[w] == -1:
                    work[-1] = (v, next_pi + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
    return components


def _period(adj):
    """Period of a strongly connected digraph.

    BFS from state 0 assigns levels; every edge (u, v) contributes
    level[u] + 1 - level[v] to the gcd.  Tree edges contribute 0 and are
    ignored, so the gcd runs over the non-tree (level-skipping) edges.
    """
    n = len(adj)
    level = [-1] * n
    level[0] = 0
    queue = [0]
    head = 0
    d = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for v in adj[u]:
            if level[v] == -1:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                d = gcd(d, level[u] + 1 - level[v])
    # remaining edges into already-visited nodes were folded in above;
    # d == 0 can only happen for n == 1 loops, which MAX/MIN state rules out
    return abs(d) if d != 0 else 1


def validate_chain(raw, labels=None) -> Chain:
    """Check all chain invariants and freeze the matrix.

    Parameters
    ----------
    raw : array_like, shape (n, n)
        Candidate transition matrix, row i to column j.
    labels : sequence of str, optional
        State names, length n.

    Raises
    ------
    ValueError
        Non-square input, n < 2, n > MAX_STATES, or label length mismatch.
    NegativeEntry, NotStochastic, Reducible, Periodic
        The corresponding invariant failed.
    """
    P = np.array(raw, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {P.shape}")
    n = P.shape[0]
    if n < 2:
        raise ValueError("chain needs at least 2 states")
    if n > MAX_STATES:
        raise ValueError(f"dense pipeline capped at {MAX_STATES} states, got {n}")
    if labels is not None:
        labels = tuple(str(s) for s in labels)
        if len(labels) != n:
            raise ValueError(f"{len(labels)} labels for {n} states")

    neg = np.argwhere(P < 0.0)
    if neg.size:
        i, j = neg[0]
        raise NegativeEntry(i, j, P[i, j])
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > TOL_STOCH)
    if bad.size:
        raise NotStochastic(bad[0], sums[bad[0]])

    adj = _adjacency(P)
    components = _strongly_connected_components(adj)
    if len(components) > 1:
        raise Reducible(components)
    d = _period(adj)
    if d > 1:
        raise Periodic(d)

    P.flags.writeable = False
    return Chain(P=P, labels=labels)

import numpy as np
import pytest

from kemeny_lab import (analyze_chain, fundamental_matrix, greens_matrix,
                        hitting_times, stationary_measure, validate_chain)

from conftest import make_ergodic_chain


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def power_iteration_measure(P, iterations=200000, tol=1e-15):
    """Left-eigenvector oracle for the stationary measure."""
    w = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(iterations):
        nxt = w @ P
        if np.max(np.abs(nxt - w)) < tol:
            return nxt
        w = nxt
    return w


def brute_force_hitting(P):
    """Solve the first-step system per target column, no Green's function."""
    n = P.shape[0]
    M = np.zeros((n, n))
    for j in range(n):
        A = np.eye(n) - P
        A[j, :] = 0.0
        A[j, j] = 1.0
        b = np.ones(n)
        b[j] = 0.0
        M[:, j] = np.linalg.solve(A, b)
    return M


def neumann_partial(P, w, terms):
    """Truncated series sum_{k=0}^{terms} (P - W)^k - W plus a tail bound.

    The bound uses submultiplicativity: once some power of A = P - W has
    infinity-norm c < 1, the dropped tail is at most
    ||A^{terms+1}|| * (sum of the first block of norms) / (1 - c).
    """
    n = P.shape[0]
    W = np.tile(w, (n, 1))
    A = P - W
    S = np.eye(n).copy()
    power = np.eye(n)
    for _ in range(terms):
        power = power @ A
        S += power
    power_next = power @ A

    block = np.eye(n)
    norms = []
    c = None
    for m in range(1, 65):
        block = block @ A
        norms.append(np.linalg.norm(block, np.inf))
        if norms[-1] < 1.0:
            c = norms[-1]
            break
    assert c is not None, "chain mixes too slowly for the tail bound"
    partial_norm_sum = 1.0 + sum(norms[:-1])
    tail = np.linalg.norm(power_next, np.inf) * partial_norm_sum / (1.0 - c)
    return S - W, tail


# ---------------------------------------------------------------------------
# stationary measure
# ---------------------------------------------------------------------------

def test_stationary_uniform2(uniform2):
    np.testing.assert_allclose(stationary_measure(uniform2), [0.5, 0.5],
                               atol=1e-14)


def test_stationary_two_state_closed_form(ab_chain):
    # closed form (b, a) / (a + b) with a = 0.3, b = 0.2
    w = stationary_measure(ab_chain)
    np.testing.assert_allclose(w, [0.4, 0.6], atol=1e-14)
    np.testing.assert_allclose(w, power_iteration_measure(ab_chain.P),
                               atol=1e-12)


def test_stationary_doubly_stochastic_is_uniform():
    row = np.array([0.1, 0.25, 0.3, 0.35])
    P = np.array([np.roll(row, k) for k in range(4)])  # circulant
    chain = validate_chain(P)
    np.testing.assert_allclose(stationary_measure(chain), np.full(4, 0.25),
                               atol=1e-13)


def test_stationary_invariants_on_battery(chain_battery):
    for chain in chain_battery:
        w = stationary_measure(chain)
        assert abs(w.sum() - 1.0) <= 1e-12
        assert np.max(np.abs(w @ chain.P - w)) <= 1e-10
        assert w.min() > 0


# ---------------------------------------------------------------------------
# fundamental matrix
# ---------------------------------------------------------------------------

def test_fundamental_matrix_uniform2(uniform2):
    w = stationary_measure(uniform2)
    Z = fundamental_matrix(uniform2, w)
    np.testing.assert_allclose(Z, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-14)


def test_fundamental_matrix_vs_neumann_series():
    rng = np.random.default_rng(3021)
    for _ in range(5):
        chain = make_ergodic_chain(rng, 3)
        w = stationary_measure(chain)
        Z = fundamental_matrix(chain, w)
        S, tail = neumann_partial(chain.P, w, terms=80)
        assert np.max(np.abs(Z - S)) <= tail + 1e-12


def test_power_identity_on_battery(chain_battery):
    # (P^k - W) = (P - W)^k, the rearrangement behind the visit counting
    for chain in chain_battery[:8]:
        w = stationary_measure(chain)
        n = chain.n
        W = np.tile(w, (n, 1))
        Pk = np.eye(n)
        Ak = np.eye(n)
        for _ in range(1, 11):
            Pk = Pk @ chain.P
            Ak = Ak @ (chain.P - W)
            assert np.max(np.abs((Pk - W) - Ak)) <= 1e-10


def test_mixing_decay_on_battery(chain_battery):
    # P^64 must be much closer to W than P^8, and within the
    # submultiplicative bound ||(P-W)^64|| <= ||(P-W)^8||^8
    for chain in chain_battery:
        w = stationary_measure(chain)
        W = np.tile(w, (chain.n, 1))
        A8 = np.linalg.matrix_power(chain.P, 8) - W
        A64 = np.linalg.matrix_power(chain.P, 64) - W
        n8 = np.linalg.norm(A8, np.inf)
        n64 = np.linalg.norm(A64, np.inf)
        # matrix powers accumulate rounding noise around 1e-15, which can
        # exceed the exact-arithmetic bound once the chain has fully mixed
        assert n64 <= max(n8**8 * (1.0 + 1e-9), 1e-13)
        if n8 > 1e-12:  # degenerate P == W chains have nothing to decay
            assert n64 < n8


# ---------------------------------------------------------------------------
# Green's matrix and hitting times
# ---------------------------------------------------------------------------

def test_green_uniform2(uniform2):
    # hand evaluation of the closed formula with D = diag(2, 2)
    w = stationary_measure(uniform2)
    G = greens_matrix(fundamental_matrix(uniform2, w), w)
    np.testing.assert_allclose(G, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-14)


def test_green_solves_source_equations(chain_battery):
    for chain in chain_battery:
        n = chain.n
        w = stationary_measure(chain)
        Z = fundamental_matrix(chain, w)
        G = greens_matrix(Z, w)
        I = np.eye(n)
        W = np.tile(w, (n, 1))
        D = np.diag(1.0 / w)
        # each column of (I - P) G is the unit-source density at that state
        S = (I - W) @ D
        assert np.max(np.abs((I - chain.P) @ G - S)) <= 1e-9
        assert np.max(np.abs(w @ G)) <= 1e-10
        for j in range(min(n, 4)):
            expected = np.full(n, -1.0)
            expected[j] += 1.0 / w[j]
            np.testing.assert_allclose(((I - chain.P) @ G)[:, j], expected,
                                       atol=1e-9)


def test_hitting_times_uniform2(uniform2):
    # from state 0 the first visit to 1 is geometric(1/2), mean 2
    inv = analyze_chain(uniform2)
    assert inv.M[0, 1] == pytest.approx(2.0, abs=1e-12)
    assert inv.M[0, 0] == 0.0 and inv.M[1, 1] == 0.0


def test_hitting_times_two_state_closed_form(ab_chain):
    inv = analyze_chain(ab_chain)
    assert inv.M[0, 1] == pytest.approx(1.0 / 0.3, abs=1e-12)
    assert inv.M[1, 0] == pytest.approx(5.0, abs=1e-12)
    np.testing.assert_allclose(inv.M, brute_force_hitting(ab_chain.P),
                               atol=1e-12)


def test_hitting_times_match_brute_force_small(chain_battery):
    for chain in chain_battery:
        if chain.n > 6:
            continue
        inv = analyze_chain(chain)
        np.testing.assert_allclose(inv.M, brute_force_hitting(chain.P),
                                   atol=1e-9)


def test_first_step_system_residual(chain_battery):
    for chain in chain_battery:
        inv = analyze_chain(chain)
        assert inv.diagnostics["hitting_residual"] <= 1e-9


def test_return_time_relation(chain_battery):
    # 1 + sum_k p_ik m_ki = 1 / w_i ties hitting times to return times
    for chain in chain_battery:
        inv = analyze_chain(chain)
        lhs = 1.0 + np.einsum("ik,ki->i", chain.P, inv.M)
        np.testing.assert_allclose(lhs, 1.0 / inv.w, atol=1e-8, rtol=1e-10)


# ---------------------------------------------------------------------------
# Kemeny bundle
# ---------------------------------------------------------------------------

def test_kemeny_uniform2(uniform2):
    inv = analyze_chain(uniform2)
    assert inv.kemeny == pytest.approx(1.0, abs=1e-13)
    assert inv.kemeny_spectral == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(inv.kemeny_by_start, [1.0, 1.0], atol=1e-13)
    np.testing.assert_allclose(sorted(inv.eigenvalues.real), [0.0], atol=1e-13)


def test_kemeny_lazy_three_cycle():
    # non-unit eigenvalues 1/2 + 1/2 e^{+-2 pi i / 3}; the sum of
    # 1 / (1 - nu) over the pair is exactly 2
    C = np.roll(np.eye(3), 1, axis=1)
    chain = validate_chain(0.5 * np.eye(3) + 0.5 * C)
    inv = analyze_chain(chain)
    assert inv.kemeny == pytest.approx(2.0, abs=1e-12)
    assert inv.kemeny_spectral == pytest.approx(2.0, abs=1e-10)
    assert np.max(np.abs(inv.eigenvalues.imag)) > 0.1  # genuine complex pair


def test_kemeny_two_state(ab_chain):
    # single non-unit eigenvalue 1 - a - b = 0.5, so K = 2
    inv = analyze_chain(ab_chain)
    assert inv.kemeny == pytest.approx(2.0, abs=1e-12)
    assert inv.kemeny_spectral == pytest.approx(2.0, abs=1e-12)
    assert inv.kemeny_by_start[0] == pytest.approx(
        inv.M[0, 1] * inv.w[1], abs=1e-12)


def test_kemeny_three_routes_on_battery(chain_battery):
    for chain in chain_battery:
        inv = analyze_chain(chain)
        K = inv.kemeny
        scale = max(1.0, K)
        assert inv.diagnostics["kemeny_spread"] <= 1e-9 * scale
        assert inv.kemeny_spectral is not None
        assert abs(K - inv.kemeny_spectral) <= 1e-7 * scale
        assert abs(K - inv.kemeny_by_start[0]) <= 1e-9 * scale


def test_density_consistency_on_battery(chain_battery):
    for chain in chain_battery:
        inv = analyze_chain(chain)
        np.testing.assert_allclose(inv.density, np.diag(inv.G), atol=0)
        np.testing.assert_allclose(inv.density, inv.w @ inv.M, atol=1e-9)
        assert abs(inv.w @ inv.density - inv.kemeny) <= 1e-9 * max(1.0, inv.kemeny)


def test_z_normalizations_on_battery(chain_battery):
    for chain in chain_battery:
        inv = analyze_chain(chain)
        assert inv.diagnostics["z_row_sum"] <= 1e-10
        assert inv.diagnostics["wz"] <= 1e-10
        assert inv.diagnostics["wg"] <= 1e-10
        assert inv.diagnostics["min_offdiag_hitting"] > 0.0
        assert inv.eigenvalues.shape == (chain.n - 1,)

"""Exact spectral and potential-theoretic quantities of an ergodic chain.

The pipeline runs stationary measure -> fundamental matrix -> Green's matrix
-> hitting times -> the Kemeny bundle.  Everything is dense 64-bit linear
algebra (LAPACK LU with partial pivoting, real Schur form for eigenvalues);
each step verifies its own residual contract and raises
:class:`~kemeny_lab.errors.SingularSystem` on numerical breakdown, which for
a validated chain indicates something has gone badly wrong.

Notation used throughout:

* ``w``   stationary row measure, ``w @ P == w``, positive, sums to 1
* ``W``   rank-one matrix with every row equal to ``w``
* ``D``   diagonal matrix of inverse stationary weights ``1 / w``
* ``Z``   fundamental matrix ``inv(I - (P - W)) - W``; entry (i, j) is the
          expected excess visits to j when starting at i versus stationary
* ``G``   Green's matrix ``Z @ D``, the potential solving
          ``(I - P) G = (I - W) D`` with ``W G = 0``
* ``M``   expected first hitting times ``m_ij = G_jj - G_ij``, ``m_ii = 0``
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .chain import Chain
from .errors import SingularSystem

#: residual contracts, all absolute and checked where they are cheapest
TOL_STATIONARY_SUM = 1e-12
TOL_STATIONARY_RESIDUAL = 1e-10
TOL_Z_ROWSUM = 1e-10
TOL_WZ = 1e-10
TOL_IMAG_SPECTRAL = 1e-8


@dataclass(frozen=True)
class ChainInvariants:
    """Everything the exact pipeline produces for one chain."""

    w: np.ndarray
    Z: np.ndarray
    G: np.ndarray
    M: np.ndarray
    kemeny_by_start: np.ndarray
    kemeny: float
    kemeny_spectral: float        # None when the eigen routine failed
    density: np.ndarray
    eigenvalues: np.ndarray       # n-1 complex values, unit eigenvalue removed
    diagnostics: dict


def stationary_measure(chain: Chain) -> np.ndarray:
    """Unique positive stationary measure by direct linear solve.

    Replaces the last equation of ``(I - P)^T w = 0`` with the normalization
    row of ones, RHS e_n.  Deterministic and exact to solver precision, unlike
    power iteration.
    """
    P = chain.P
    n = chain.n
    A = (np.eye(n) - P).T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        w = scipy.linalg.solve(A, b)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystem(f"stationary solve failed: {exc}") from exc
    if abs(w.sum() - 1.0) > TOL_STATIONARY_SUM:
        raise SingularSystem(f"stationary measure sums to {w.sum()!r}")
    residual = np.max(np.abs(w @ P - w))
    if residual > TOL_STATIONARY_RESIDUAL:
        raise SingularSystem(f"stationary residual {residual:g}")
    if w.min() <= 0.0:
        raise SingularSystem("stationary measure has a non-positive entry")
    return w


def fundamental_matrix(chain: Chain, w: np.ndarray) -> np.ndarray:
    """Z = inv(I - (P - W)) - W, via one LU-factored multi-RHS solve."""
    n = chain.n
    W = np.tile(w, (n, 1))
    A = np.eye(n) - chain.P + W
    try:
        Z = scipy.linalg.solve(A, np.eye(n)) - W
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystem(f"fundamental-matrix solve failed: {exc}") from exc
    row_sum = np.max(np.abs(Z.sum(axis=1)))
    if row_sum > TOL_Z_ROWSUM:
        raise SingularSystem(f"Z row sums reach {row_sum:g}")
    wz = np.max(np.abs(w @ Z))
    if wz > TOL_WZ:
        raise SingularSystem(f"W Z residual {wz:g}")
    return Z


def greens_matrix(Z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """G = Z D with D = diag(1 / w); scales column j by 1 / w_j."""
    return Z / w[np.newaxis, :]


def hitting_times(G: np.ndarray) -> np.ndarray:
    """Expected first hitting times m_ij = G_jj - G_ij, zero diagonal."""
    M = np.diag(G)[np.newaxis, :] - G
    np.fill_diagonal(M, 0.0)
    return M


def _schur_eigenvalues(T: np.ndarray) -> np.ndarray:
    """Eigenvalues off a real Schur form, conjugate pairs built explicitly."""
    n = T.shape[0]
    eigs = np.empty(n, dtype=np.complex128)
    k = 0
    while k < n:
        if k == n - 1 or T[k + 1, k] == 0.0:
            eigs[k] = T[k, k]
            k += 1
            continue
        a, b = T[k, k], T[k, k + 1]
        c, d = T[k + 1, k], T[k + 1, k + 1]
        mean = 0.5 * (a + d)
        disc = 0.25 * (a - d) ** 2 + b * c
        if disc < 0.0:
            root = np.sqrt(-disc)
            eigs[k] = mean + 1j * root
            eigs[k + 1] = mean - 1j * root
        else:  # defensive: canonical real Schur has complex 2x2 blocks only
            root = np.sqrt(disc)
            eigs[k] = mean + root
            eigs[k + 1] = mean - root
        k += 2
    return eigs


def kemeny_bundle(chain: Chain, w, Z, G, M):
    """Kemeny constant from three routes plus its density.

    Returns a :class:`ChainInvariants` carrying

    * ``kemeny_by_start[i]``: expected game duration ``sum_j m_ij w_j`` when
      seeking a stationary-placed hider from start i; constant over i,
    * ``kemeny``: the trace of Z (the canonical value),
    * ``kemeny_spectral``: ``sum_j 1 / (1 - nu_j)`` over the n-1 non-unit
      eigenvalues of P, or None if the Schur iteration failed to converge,
    * ``density[j] = G_jj``: expected duration when the hider is pinned at j
      and the seeker starts stationary.

    Eigenvalues come from the real Schur form; the unit eigenvalue is the one
    closest to 1 (simple and separated for an ergodic chain) and is removed
    before summing.  The spectral sum's imaginary part must vanish to
    rounding; it is checked against ``1e-8 * (1 + K)`` and discarded.
    """
    kemeny_by_start = M @ w
    kemeny = float(np.trace(Z))
    density = np.diag(G).copy()

    eigenvalues = None
    kemeny_spectral = None
    eigen_converged = False
    try:
        T, _ = scipy.linalg.schur(chain.P, output="real")
        eigs = _schur_eigenvalues(T)
        unit = np.argmin(np.abs(eigs - 1.0))
        eigenvalues = np.delete(eigs, unit)
        spectral = np.sum(1.0 / (1.0 - eigenvalues))
        if abs(spectral.imag) <= TOL_IMAG_SPECTRAL * (1.0 + kemeny):
            kemeny_spectral = float(spectral.real)
            eigen_converged = True
    except scipy.linalg.LinAlgError:
        pass

    diagnostics = _diagnostics(chain, w, Z, G, M, kemeny_by_start, kemeny,
                               kemeny_spectral, density, eigen_converged)
    return ChainInvariants(
        w=w, Z=Z, G=G, M=M,
        kemeny_by_start=kemeny_by_start,
        kemeny=kemeny,
        kemeny_spectral=kemeny_spectral,
        density=density,
        eigenvalues=eigenvalues,
        diagnostics=diagnostics,
    )


def _diagnostics(chain, w, Z, G, M, by_start, kemeny, spectral, density,
                 eigen_converged):
    """Residuals of every identity the pipeline is contracted to satisfy."""
    P = chain.P
    n = chain.n
    I = np.eye(n)
    D = np.diag(1.0 / w)
    W = np.tile(w, (n, 1))
    hitting_target = np.ones((n, n)) - D
    return {
        "z_row_sum": float(np.max(np.abs(Z.sum(axis=1)))),
        "wz": float(np.max(np.abs(w @ Z))),
        "wg": float(np.max(np.abs(w @ G))),
        "green_residual": float(np.max(np.abs((I - P) @ G - (I - W) @ D))),
        "hitting_residual": float(np.max(np.abs((I - P) @ M - hitting_target))),
        "kemeny_spread": float(by_start.max() - by_start.min()),
        "trace_vs_start": float(abs(kemeny - by_start[0])),
        "trace_vs_spectral": (None if spectral is None
                              else float(abs(kemeny - spectral))),
        "density_vs_weighted_hits": float(np.max(np.abs(density - w @ M))),
        "density_weighted_sum": float(abs(w @ density - kemeny)),
        "min_offdiag_hitting": float((M + np.diag(np.full(n, np.inf))).min()),
        "eigen_converged": bool(eigen_converged),
        "tolerances": {
            "stationary_sum": TOL_STATIONARY_SUM,
            "stationary_residual": TOL_STATIONARY_RESIDUAL,
            "z_row_sum": TOL_Z_ROWSUM,
            "wz": TOL_WZ,
            "spectral_imag": TOL_IMAG_SPECTRAL,
        },
    }


def analyze_chain(chain: Chain) -> ChainInvariants:
    """Run the full exact pipeline on one validated chain."""
    w = stationary_measure(chain)
    Z = fundamental_matrix(chain, w)
    G = greens_matrix(Z, w)
    M = hitting_times(G)
    return kemeny_bundle(chain, w, Z, G, M)

"""Kemeny's constant on Markov chains and the regularized trace on flat
tori: exact spectral pipelines validated by Monte Carlo play of the
hide-and-seek games that define them."""

from .chain import Chain, validate_chain
from .chain_mc import (GameI, GameII, McEstimate, estimate_excess_visits,
                       estimate_hitting_time, estimate_return_time,
                       play_game, sample_first_hitting)
from .errors import (ChainValidationError, CoincidentPoints, EigenFailure,
                     EpsilonTooLarge, HorizonTooShort, KemenyLabError,
                     NegativeEntry, NotStochastic, Periodic, Reducible,
                     SingularSystem, Truncated)
from .invariants import (ChainInvariants, analyze_chain, fundamental_matrix,
                         greens_matrix, hitting_times, kemeny_bundle,
                         stationary_measure)
from ._rng import RngStream
from .torus import (FlatTorus, TorusInvariants, expected_hitting_formula,
                    mass_trace_identity, regularized_trace, robins_mass,
                    spectral_zeta, torus_eigenvalues, torus_green,
                    torus_invariants)
from .torus_mc import (BmConfig, TorusGameI, TorusGameII, estimate_bm_hitting,
                       play_torus_game, simulate_bm_hitting)

__version__ = "0.1.0"

__all__ = [
    "BmConfig", "Chain", "ChainInvariants", "ChainValidationError",
    "CoincidentPoints", "EigenFailure", "EpsilonTooLarge", "FlatTorus",
    "GameI", "GameII", "HorizonTooShort", "KemenyLabError", "McEstimate",
    "NegativeEntry", "NotStochastic", "Periodic", "Reducible", "RngStream",
    "SingularSystem", "TorusGameI", "TorusGameII", "TorusInvariants",
    "Truncated", "analyze_chain", "estimate_bm_hitting",
    "estimate_excess_visits", "estimate_hitting_time", "estimate_return_time",
    "expected_hitting_formula", "fundamental_matrix", "greens_matrix",
    "hitting_times", "kemeny_bundle", "mass_trace_identity", "play_game",
    "play_torus_game", "regularized_trace", "robins_mass",
    "sample_first_hitting", "simulate_bm_hitting", "spectral_zeta",
    "stationary_measure", "torus_eigenvalues", "torus_green",
    "torus_invariants", "validate_chain",
]

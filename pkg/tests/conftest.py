import numpy as np
import pytest

from kemeny_lab import validate_chain


def make_ergodic_chain(rng, n):
    """Random dense chain; strictly positive entries make it ergodic."""
    P = rng.uniform(0.02, 1.0, size=(n, n))
    P /= P.sum(axis=1, keepdims=True)
    return validate_chain(P)


@pytest.fixture(scope="session")
def chain_battery():
    """Deterministic set of small random chains shared across tests."""
    rng = np.random.default_rng(824)
    return [make_ergodic_chain(rng, n) for n in (2, 2, 3, 3, 4, 5, 6, 6, 8,
                                                 12, 16, 24, 32, 48, 64)]


@pytest.fixture
def uniform2():
    return validate_chain([[0.5, 0.5], [0.5, 0.5]])


@pytest.fixture
def ab_chain():
    # two-state chain with a = 0.3, b = 0.2: w = (0.4, 0.6), K = 2
    return validate_chain([[0.7, 0.3], [0.2, 0.8]])

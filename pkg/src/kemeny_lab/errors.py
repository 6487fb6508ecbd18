"""Exception types shared across the package."""


class KemenyLabError(Exception):
    """Base class for all domain errors raised by this package."""


class ChainValidationError(KemenyLabError):
    """A transition matrix failed one of the chain invariants."""


class NotStochastic(ChainValidationError):
    def __init__(self, row, row_sum):
        self.row = int(row)
        self.row_sum = float(row_sum)
        super().__init__(f"NotStochastic(row={self.row}, sum={self.row_sum:g})")


class NegativeEntry(ChainValidationError):
    def __init__(self, i, j, value):
        self.i = int(i)
        self.j = int(j)
        self.value = float(value)
        super().__init__(f"NegativeEntry(i={self.i}, j={self.j}, value={self.value:g})")


class Reducible(ChainValidationError):
    def __init__(self, components):
        self.components = [tuple(c) for c in components]
        super().__init__(f"Reducible(components={self.components})")


class Periodic(ChainValidationError):
    def __init__(self, period):
        self.period = int(period)
        super().__init__(f"Periodic({self.period})")


class SingularSystem(KemenyLabError):
    """A linear solve broke down or violated its residual contract."""


class EigenFailure(KemenyLabError):
    """The dense eigenvalue routine did not converge."""


class Truncated(KemenyLabError):
    """A single trajectory hit the safety cap before terminating."""

    def __init__(self, cap):
        self.cap = cap
        super().__init__(f"Truncated({cap})")


class HorizonTooShort(KemenyLabError):
    """The requested visit-counting horizon does not mix the chain enough."""

    def __init__(self, horizon, achieved_norm):
        self.horizon = int(horizon)
        self.achieved_norm = float(achieved_norm)
        super().__init__(
            f"HorizonTooShort(N={self.horizon}, norm={self.achieved_norm:g})"
        )


class CoincidentPoints(KemenyLabError):
    """Green's function evaluation requested on the diagonal."""


class EpsilonTooLarge(KemenyLabError):
    """The detection radius violates its geometric preconditions."""

"""Counter-based random number streams.

Every Monte Carlo episode draws from its own stream, derived purely from
(seed, stream_index).  A draw is a stateless hash of (stream base, counter),
so results do not depend on scheduling order and any episode can be replayed
in isolation.  The mixing function is the splitmix64 finalizer; the compiled
kernels in ``_kernels`` inline the identical arithmetic on uint64.
"""

from dataclasses import dataclass, field

_MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
STREAM_SALT = 0x5851F42D4C957F2D

#: 2**-53, scales the top 53 bits of a u64 into [0, 1)
U53_INV = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """splitmix64 output function: avalanche a 64-bit value."""
    z = (z + GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def stream_base(seed: int, stream_index: int) -> int:
    """Decorrelated base value for one (seed, stream_index) pair."""
    return mix64(mix64(seed & _MASK64) ^ mix64((stream_index ^ STREAM_SALT) & _MASK64))


def uniform(base: int, counter: int) -> float:
    """Uniform draw in [0, 1) at a given counter position of a stream."""
    z = mix64((base + counter * GOLDEN) & _MASK64)
    return (z >> 11) * U53_INV


@dataclass
class RngStream:
    """Sequential view of one counter-based stream.

    Identical (seed, stream_index) reproduce identical draw sequences
    bit-for-bit.  The compiled kernels consume the same streams with
    stream_index equal to the episode index and the counter starting at 0.
    """

    seed: int
    stream_index: int = 0
    _counter: int = field(default=0, repr=False)

    def __post_init__(self):
        self._base = stream_base(self.seed, self.stream_index)

    def draw(self) -> float:
        """Next uniform in [0, 1)."""
        u = uniform(self._base, self._counter)
        self._counter += 1
        return u

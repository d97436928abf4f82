"""Counter-based deterministic random streams.

Every random quantity in a game is a pure function of (stream key, round
index).  This gives three things at once: bit-identical replay, random
access (rounds can be skipped or generated in bulk without desyncing
anything), and one independent stream per arm / per player so that
simulated players never share randomness.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# 2^-53, for mapping the top 53 bits of a u64 to [0, 1)
_INV53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    """SplitMix64 finalizer: bijective mixing of a 64-bit integer."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * _M1) & _MASK
    x = ((x ^ (x >> 27)) * _M2) & _MASK
    return x ^ (x >> 31)


def derive_key(master_seed: int, *indices: int) -> int:
    """Derive an independent stream key from a master seed and a label path.

    Folding each index through the mixer keeps distinct paths (e.g. arm 3
    vs player 3) on distinct streams.
    """
    key = mix64(master_seed ^ 0x6A09E667F3BCC909)
    for ix in indices:
        key = mix64((key + _GAMMA) ^ mix64(ix & _MASK))
    return key


def unit(key: int, counter: int) -> float:
    """Uniform float in [0, 1) for the given (key, counter)."""
    return (mix64((key + counter * _GAMMA) & _MASK) >> 11) * _INV53


def units(key: int, counter0: int, n: int) -> np.ndarray:
    """Vectorized `unit` for counters counter0 .. counter0+n-1.

    Bit-identical to calling `unit` n times.
    """
    c = np.arange(counter0, counter0 + n, dtype=np.uint64)
    x = (np.uint64(key & _MASK) + c * np.uint64(_GAMMA))
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
    x ^= x >> np.uint64(31)
    return (x >> np.uint64(11)).astype(np.float64) * _INV53


class Stream:
    """A keyed counter-based stream of uniforms."""

    __slots__ = ("key",)

    def __init__(self, key: int):
        self.key = key & _MASK

    def unit(self, counter: int) -> float:
        return unit(self.key, counter)

    def units(self, counter0: int, n: int) -> np.ndarray:
        return units(self.key, counter0, n)


# Stream label namespaces (first index passed to derive_key).
NS_ARM = 1       # per-arm reward streams
NS_PLAYER = 2    # per-player decision streams
NS_ENGINE = 3    # engine-owned stream
NS_ARM_PLAYER = 4  # per-(arm, player) reward streams (anti-coordination games)


def arm_stream(master_seed: int, arm: int) -> Stream:
    return Stream(derive_key(master_seed, NS_ARM, arm))


def player_stream(master_seed: int, player: int) -> Stream:
    return Stream(derive_key(master_seed, NS_PLAYER, player))


def engine_stream(master_seed: int) -> Stream:
    return Stream(derive_key(master_seed, NS_ENGINE))


def arm_player_stream(master_seed: int, arm: int, player: int) -> Stream:
    return Stream(derive_key(master_seed, NS_ARM_PLAYER, arm, player))

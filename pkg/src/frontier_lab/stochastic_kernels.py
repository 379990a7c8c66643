"""Reproducible randomness and exact-in-law Brownian step primitives.

Randomness is counter based: every draw is a pure function of
(master seed, stream path, counter, channel) through a splitmix-style 64-bit
mixer, so replicas and particle lineages are statistically independent, and
results are bit-identical for a fixed seed no matter how work is scheduled or
batched. The same primitives back both the scalar API and the engine's
vectorized hot loops.

Brownian primitives: Gaussian increments, exponential branch clocks, the
linearized-barrier bridge crossing probability, and inverse-transform
sampling of a Brownian bridge minimum (drift does not change the bridge law
given its endpoints, so one sampler serves drift-adjusted paths too).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import ndtri

from .errors import ParamError

__all__ = [
    "RandomStream",
    "gaussian_increment",
    "branch_time",
    "bridge_lower_cross_prob",
    "bridge_min_sample",
    "bridge_min_from_uniform",
    "CH_MOVE",
    "CH_CROSS_LOWER",
    "CH_CROSS_UPPER",
    "CH_BRIDGE_MIN",
    "CH_CLOCK",
    "mix64",
    "fold",
    "derive_key",
    "uniform",
    "gaussian",
    "CLOCK_COUNTER",
    "CHILD_WORDS",
]

_U64 = np.uint64
_GOLD = _U64(0x9E3779B97F4A7C15)
_MIX_A = _U64(0xBF58476D1CE4E5B9)
_MIX_B = _U64(0x94D049BB133111EB)

# draw channels; xor-ed into the mixed (key, counter) state
CH_MOVE = _U64(0x4F1BBCDCBFA53E0D)
CH_CROSS_LOWER = _U64(0x27220A95FE8A2B45)
CH_CROSS_UPPER = _U64(0x9E8B5CF2C7A3D601)
CH_BRIDGE_MIN = _U64(0x5851F42D4C957F2D)
CH_CLOCK = _U64(0x14057B7EF767814F)

# word spaces kept disjoint: step counters are small ints, the birth-clock
# counter and the two child-derivation words live high up
CLOCK_COUNTER = _U64(1) << _U64(61)
CHILD_WORDS = (_U64(1) << _U64(62) | _U64(1), _U64(1) << _U64(62) | _U64(2))

UIntLike = Union[int, np.uint64, np.ndarray]


def mix64(x: UIntLike) -> UIntLike:
    """splitmix64 finalizer; full avalanche on 64 bits."""
    with np.errstate(over="ignore"):
        x = np.asarray(x, dtype=np.uint64)
        x = (x ^ (x >> _U64(30))) * _MIX_A
        x = (x ^ (x >> _U64(27))) * _MIX_B
        return x ^ (x >> _U64(31))


def fold(key: UIntLike, word: UIntLike) -> UIntLike:
    """Absorb one 64-bit word into a key."""
    with np.errstate(over="ignore"):
        key = np.asarray(key, dtype=np.uint64)
        word = np.asarray(word, dtype=np.uint64)
        return mix64((key ^ word) * _GOLD + _MIX_A)


def derive_key(master_seed: int, *path: UIntLike) -> UIntLike:
    """Key for a stream path; path entries may be ints or uint64 arrays."""
    key = mix64(_U64(master_seed & 0xFFFFFFFFFFFFFFFF) + _GOLD)
    for word in path:
        key = fold(key, word)
    return key


def _bits(key: UIntLike, counter: UIntLike, channel: np.uint64) -> UIntLike:
    return mix64(fold(key, counter) ^ channel)


def uniform(key: UIntLike, counter: UIntLike, channel: np.uint64):
    """Uniform draw on (0, 1), keyed by (key, counter, channel)."""
    b = _bits(key, counter, channel)
    return (b >> _U64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def gaussian(key: UIntLike, counter: UIntLike, channel: np.uint64):
    """Standard normal draw keyed by (key, counter, channel)."""
    return ndtri(uniform(key, counter, channel))


# --------------------------------------------------------------------------
# value-like stream facade
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomStream:
    """Value-like handle on a counter-based stream.

    A stream is identified by (master_seed, path); deriving children is pure
    and the draw operations are pure functions of the stream, so a fixed
    (seed, path) reproduces identical output regardless of scheduling.
    """

    master_seed: int
    path: Tuple[int, ...] = ()

    def child(self, *ids: int) -> "RandomStream":
        return RandomStream(self.master_seed, self.path + tuple(int(i) for i in ids))

    def key(self) -> np.uint64:
        return derive_key(self.master_seed, *[_U64(p & 0xFFFFFFFFFFFFFFFF) for p in self.path])

    def uniform(self, counter: int = 0, channel: np.uint64 = CH_MOVE) -> float:
        return float(uniform(self.key(), _U64(counter), channel))


def gaussian_increment(stream: RandomStream, dt: float) -> float:
    """Mean-zero Gaussian displacement with variance dt."""
    if dt <= 0.0:
        raise ParamError("dt must be positive")
    return math.sqrt(dt) * float(gaussian(stream.key(), _U64(0), CH_MOVE))


def branch_time(stream: RandomStream, rate: float) -> float:
    """Exponential waiting time with the given rate."""
    if rate <= 0.0:
        raise ParamError("rate must be positive")
    u = float(uniform(stream.key(), CLOCK_COUNTER, CH_CLOCK))
    return -math.log(u) / rate


def bridge_lower_cross_prob(x0: float, x1: float, b0: float, b1: float,
                            dt: float) -> float:
    """Probability that a Brownian bridge from x0 to x1 over dt touches the
    linearized barrier running from b0 to b1.

    Reflection identity: 1 if an endpoint is at or below the barrier, else
    exp(-2 (x0-b0)(x1-b1) / dt).
    """
    if dt <= 0.0:
        raise ParamError("dt must be positive")
    d0 = x0 - b0
    d1 = x1 - b1
    if d0 <= 0.0 or d1 <= 0.0:
        return 1.0
    return math.exp(-2.0 * d0 * d1 / dt)


def bridge_min_from_uniform(u, x0, x1, dt):
    """Map uniforms to Brownian bridge minima over a step of length dt.

    Inverts P(min <= m) = exp(-2 (x0-m)(x1-m) / dt), m <= min(x0, x1);
    vectorized over all arguments.
    """
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    return 0.5 * (x0 + x1 - np.sqrt((x0 - x1) ** 2 - 2.0 * dt * np.log(u)))


def bridge_min_sample(stream: RandomStream, x0: float, x1: float, dt: float) -> float:
    """One draw of the minimum of a Brownian bridge from x0 to x1 over dt."""
    if dt <= 0.0:
        raise ParamError("dt must be positive")
    u = float(uniform(stream.key(), _U64(0), CH_BRIDGE_MIN))
    return float(bridge_min_from_uniform(u, x0, x1, dt))

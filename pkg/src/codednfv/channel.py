"""Binary symmetric channel noise, server availability, reproducible streams.

Randomness is drawn from counter-based Philox streams keyed by
(master seed, stream index, purpose), so any draw is a pure function of its
key: the same key always yields the same bits, regardless of scheduling
order or worker count, and distinct keys give independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .gf2 import BitVec

_MASK64 = (1 << 64) - 1


class Purpose(IntEnum):
    """Sub-stream tag separating the independent random inputs of a trial."""

    MESSAGE = 0
    NOISE = 1
    AVAILABILITY = 2
    SEARCH = 3


@dataclass(frozen=True)
class RngStream:
    """Key for one reproducible random stream."""

    master_seed: int
    stream: int
    purpose: int = Purpose.NOISE

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.master_seed & _MASK64, ((self.stream << 8) | int(self.purpose)) & _MASK64],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


def _as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class BscChannel:
    """Memoryless channel flipping each bit independently with probability p."""

    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"crossover probability {self.p} outside [0, 1]")


@dataclass(frozen=True)
class ServerFailureModel:
    """Each of ``n_servers`` fails independently with probability q."""

    q: float
    n_servers: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"failure probability {self.q} outside [0, 1]")
        if self.n_servers < 1:
            raise ValueError("need at least one server")


def sample_noise_array(
    ch: BscChannel, shape: tuple[int, ...] | int, rng: RngStream | np.random.Generator
) -> np.ndarray:
    """Bernoulli(p) bits with the given shape, dtype uint8."""
    gen = _as_generator(rng)
    return (gen.random(shape) < ch.p).astype(np.uint8)


def sample_noise(ch: BscChannel, n: int, rng: RngStream | np.random.Generator) -> BitVec:
    """One noise vector of ``n`` bits."""
    return BitVec.from_array(sample_noise_array(ch, n, rng))


def effective_crossover(p: float, d: int) -> float:
    """Crossover probability of the XOR of ``d`` independent Bernoulli(p) bits.

    Closed form (1 - (1 - 2p)^d) / 2; for d = 2 this is 2p(1-p).
    """
    if d < 1:
        raise ValueError(f"need at least one summed signal, got d={d}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover probability {p} outside [0, 1]")
    return 0.5 * (1.0 - (1.0 - 2.0 * p) ** d)


def sample_availability_array(
    model: ServerFailureModel, trials: int, rng: RngStream | np.random.Generator
) -> np.ndarray:
    """(trials, n_servers) uint8 array, 1 = server available."""
    gen = _as_generator(rng)
    return (gen.random((trials, model.n_servers)) >= model.q).astype(np.uint8)


def sample_availability(
    model: ServerFailureModel, rng: RngStream | np.random.Generator
) -> BitVec:
    """One availability mask; bit j set means server j is up."""
    return BitVec.from_array(sample_availability_array(model, 1, rng)[0])

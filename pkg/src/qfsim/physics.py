"""Stochastic two-level qubit model.

The qubit is a classical two-state Markov chain: thermal sampling, energy
relaxation toward the equilibrium excited-state population over timed
intervals, and probabilistic pi-pulse flips. Populations and effective
temperatures convert through the two-level Boltzmann relation at the
transition frequency f01.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError

# Exact SI values.
PLANCK = 6.62607015e-34  # J s
BOLTZMANN = 1.380649e-23  # J / K


class QubitState(Enum):
    G = 0  # ground, |0>
    E = 1  # excited, |1>

    def flipped(self) -> "QubitState":
        return QubitState.E if self is QubitState.G else QubitState.G


@dataclass(frozen=True)
class QubitParams:
    """Physical constants of the two-level system.

    f01: transition frequency in Hz
    t1: energy relaxation time in seconds (math.inf allowed)
    p1_eq: equilibrium excited-state population
    pi_error: probability that a pi pulse leaves the state unchanged
    pi_duration: pi-pulse length in seconds
    """

    f01: float
    t1: float
    p1_eq: float
    pi_error: float = 1e-3
    pi_duration: float = 250e-9

    def __post_init__(self):
        if self.f01 <= 0:
            raise ConfigurationError(f"f01 must be positive, got {self.f01}")
        if self.t1 <= 0:
            raise ConfigurationError(f"t1 must be positive, got {self.t1}")
        if not 0.0 <= self.p1_eq < 0.5:
            raise ConfigurationError(f"p1_eq must be in [0, 0.5), got {self.p1_eq}")
        # 1.0 is allowed as the degenerate always-failing pulse
        if not 0.0 <= self.pi_error <= 1.0:
            raise ConfigurationError(f"pi_error must be in [0, 1], got {self.pi_error}")
        if self.pi_duration < 0:
            raise ConfigurationError("pi_duration must be non-negative")


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream addressed by (seed, stream_id).

    Streams with the same seed but different stream_id are statistically
    independent and may be consumed in any order across shots: each stream
    owns a disjoint 2**128 block of the Philox counter space.
    """

    seed: int
    stream_id: int

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in 64 bits")
        if not 0 <= self.stream_id < 2**64:
            raise ConfigurationError("stream_id must fit in 64 bits")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=self.seed, counter=self.stream_id << 128)
        )


def as_generator(rng) -> np.random.Generator:
    """Accept either an RngStream or a ready numpy Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return rng.generator()


def thermal_population(f01: float, temperature: float) -> float:
    """Equilibrium excited-state population of a two-level system at `temperature`.

    p1 = 1 / (1 + exp(h f01 / (kB T))); increases with T toward the 0.5
    equal-occupation limit.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return 1.0 / (1.0 + math.exp(PLANCK * f01 / (BOLTZMANN * temperature)))


def effective_temperature(p1: float, f01: float) -> float:
    """Temperature whose thermal two-level distribution gives population p1.

    Exact inverse of thermal_population; only populations below one half
    correspond to a positive temperature.
    """
    if not 0.0 < p1 < 0.5:
        raise ValueError(f"p1 must be in (0, 0.5) for a positive temperature, got {p1}")
    return (PLANCK * f01 / BOLTZMANN) / math.log((1.0 - p1) / p1)


def transition_probs(dt: float, params: QubitParams) -> tuple[float, float]:
    """(P(g->e), P(e->g)) for one interval of length dt.

    Both scale with 1 - exp(-dt/T1) so the excited population relaxes as
    p1_eq + (p1(0) - p1_eq) * exp(-dt/T1).
    """
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    relax = -math.expm1(-dt / params.t1)
    return params.p1_eq * relax, (1.0 - params.p1_eq) * relax


def transition_matrix(dt: float, params: QubitParams) -> np.ndarray:
    """Row-stochastic 2x2 matrix, rows indexed (g, e)."""
    p_ge, p_eg = transition_probs(dt, params)
    return np.array([[1.0 - p_ge, p_ge], [p_eg, 1.0 - p_eg]])


def sample_thermal(params: QubitParams, rng) -> QubitState:
    """Draw a state from the thermal equilibrium distribution."""
    gen = as_generator(rng)
    return QubitState.E if gen.random() < params.p1_eq else QubitState.G


def evolve(state: QubitState, dt: float, params: QubitParams, rng) -> QubitState:
    """Relax `state` toward equilibrium over an interval dt.

    Single-jump approximation: at most one transition per interval. The
    marginal excited-state probability after dt is exact, and the interval
    transition matrices compose as a semigroup.
    """
    p_ge, p_eg = transition_probs(dt, params)
    gen = as_generator(rng)
    u = gen.random()
    if state is QubitState.E:
        return QubitState.G if u < p_eg else QubitState.E
    return QubitState.E if u < p_ge else QubitState.G


def apply_pi_pulse(state: QubitState, params: QubitParams, rng) -> QubitState:
    """Flip the state; fails (state unchanged) with probability pi_error."""
    gen = as_generator(rng)
    if gen.random() < params.pi_error:
        return state
    return state.flipped()

"""Waveform synthesis and 8x rate conversion.

Pulses are synthesized at an intermediate frequency directly in the sample
domain. Two sample rates exist:

- 500 MSa/s, the processing rate at which all shot physics and
  demodulation run (2 ns tick), and
- 4 GSa/s, the converter rate; decimation and interpolation by a factor of
  8 move signals between the two.

Both converters share one symmetric equiripple FIR (127 taps, passband
DC-100 MHz with <0.01 dB ripple, >80 dB stopband beyond 250 MHz), so the
group delay is exactly (n_taps - 1) / (2 * input_rate) and shows up as a
queryable latency contribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as _signal

from .errors import ConfigurationError

PROCESSING_RATE = 500e6  # Sa/s
CONVERTER_RATE = 4e9  # Sa/s
TICK = 2e-9  # scheduling granularity at the processing rate

ENVELOPES = ("rectangular", "gaussian_flattop")


def _sample_count(duration: float, sample_rate: float) -> int:
    """Integer sample count for `duration`, rejecting non-integer fits."""
    exact = duration * sample_rate
    n = round(exact)
    if abs(exact - n) > 1e-6:
        raise ConfigurationError(
            f"duration {duration} s is not an integer number of samples "
            f"at {sample_rate:.0f} Sa/s (got {exact})"
        )
    return n


@dataclass(frozen=True)
class SampleStream:
    """A finite real-valued signal with an explicit sample rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be positive, got {self.sample_rate}")
        arr = np.asarray(self.samples, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class PulseShape:
    """Carrier + envelope description of one pulse.

    `duration` must land on the 2 ns processing tick so schedules stay
    exact. `rise` is only used by the gaussian_flattop envelope.
    """

    frequency: float
    phase: float
    amplitude: float
    duration: float
    envelope: str = "rectangular"
    rise: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigurationError(f"amplitude must be non-negative, got {self.amplitude}")
        if self.duration <= 0:
            raise ConfigurationError(f"duration must be positive, got {self.duration}")
        if self.envelope not in ENVELOPES:
            raise ConfigurationError(f"unknown envelope {self.envelope!r}")
        if self.envelope == "gaussian_flattop":
            if not 0 < self.rise <= self.duration / 2:
                raise ConfigurationError("gaussian_flattop needs 0 < rise <= duration/2")
        _sample_count(self.duration, PROCESSING_RATE)

    def envelope_at(self, t: np.ndarray) -> np.ndarray:
        if self.envelope == "rectangular":
            return np.ones_like(t)
        sigma = self.rise / 2.0
        env = np.ones_like(t)
        head = t < self.rise
        tail = t > self.duration - self.rise
        env[head] = np.exp(-0.5 * ((t[head] - self.rise) / sigma) ** 2)
        env[tail] = np.exp(-0.5 * ((t[tail] - (self.duration - self.rise)) / sigma) ** 2)
        return env


def synth_pulse(shape: PulseShape, sample_rate: float) -> SampleStream:
    """Render a pulse: amplitude * env(t) * cos(2 pi f t + phase)."""
    if sample_rate not in (PROCESSING_RATE, CONVERTER_RATE):
        raise ConfigurationError(
            f"sample_rate must be {PROCESSING_RATE:.0f} or {CONVERTER_RATE:.0f} Sa/s"
        )
    n = _sample_count(shape.duration, sample_rate)
    t = np.arange(n) / sample_rate
    samples = shape.amplitude * shape.envelope_at(t) * np.cos(
        2.0 * math.pi * shape.frequency * t + shape.phase
    )
    return SampleStream(samples, sample_rate)


@dataclass(frozen=True)
class RateConverter:
    """Shared FIR for decimation and interpolation by an integer factor.

    The taps are forced exactly symmetric, so the filter is linear phase
    and delays every passband component by (n_taps - 1) / (2 * input_rate)
    seconds, `input_rate` being the high rate on either path.
    """

    factor: int
    taps: np.ndarray
    input_rate: float = CONVERTER_RATE

    def __post_init__(self):
        if self.factor < 2:
            raise ConfigurationError(f"factor must be >= 2, got {self.factor}")
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size < 3:
            raise ConfigurationError("taps must be a 1-D array of length >= 3")
        if not np.allclose(taps, taps[::-1], rtol=0, atol=1e-12 * np.abs(taps).max()):
            raise ConfigurationError("taps must be symmetric (linear phase)")
        taps = 0.5 * (taps + taps[::-1])  # exact symmetry
        taps.flags.writeable = False
        object.__setattr__(self, "taps", taps)

    @property
    def group_delay(self) -> float:
        return (self.taps.size - 1) / (2.0 * self.input_rate)

    @property
    def group_delay_samples(self) -> float:
        """Delay in samples at the high (input_rate) side."""
        return (self.taps.size - 1) / 2.0


def design_rate_converter(
    factor: int = 8,
    input_rate: float = CONVERTER_RATE,
    num_taps: int = 127,
    passband: float = 100e6,
) -> RateConverter:
    """Equiripple anti-alias / image-reject FIR for one conversion stage.

    Stopband starts at the low-rate Nyquist edge. The stopband weight is
    the ripple ratio for ~0.05 dB passband deviation against 60 dB
    rejection; 127 taps leave a wide margin on both.
    """
    stop_edge = input_rate / (2.0 * factor)
    if passband >= stop_edge:
        raise ConfigurationError("passband must end below the low-rate Nyquist edge")
    taps = _signal.remez(
        num_taps,
        [0.0, passband, stop_edge, input_rate / 2.0],
        [1.0, 0.0],
        weight=[1.0, 5.8],
        fs=input_rate,
    )
    taps = taps / taps.sum()  # unit DC gain
    return RateConverter(factor=factor, taps=taps, input_rate=input_rate)


def _causal_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """y[n] = sum_m taps[m] x[n-m], same length as x.

    Each output accumulates its products in a fixed (oldest-sample-first)
    order, so delaying the input by whole samples delays the output
    bit-exactly; np.convolve's pairwise sums do not guarantee that.
    """
    history = np.concatenate([np.zeros(taps.size - 1), x])
    windows = np.lib.stride_tricks.sliding_window_view(history, taps.size)
    prods = windows * taps[::-1]
    return np.cumsum(prods, axis=1)[:, -1]


def decimate(conv: RateConverter, stream: SampleStream) -> SampleStream:
    """Anti-alias filter then keep every factor-th sample.

    Output length is floor(len/factor); the filter contributes exactly
    conv.group_delay of latency.
    """
    if stream.sample_rate != conv.input_rate:
        raise ConfigurationError(
            f"decimate expects input at {conv.input_rate:.0f} Sa/s, "
            f"got {stream.sample_rate:.0f}"
        )
    filtered = _causal_filter(stream.samples, conv.taps)
    out = filtered[:: conv.factor][: len(stream) // conv.factor]
    return SampleStream(out, stream.sample_rate / conv.factor)


def interpolate(conv: RateConverter, stream: SampleStream) -> SampleStream:
    """Zero-stuff by the factor, then image-reject filter scaled by the factor."""
    if stream.sample_rate * conv.factor != conv.input_rate:
        raise ConfigurationError(
            f"interpolate expects input at {conv.input_rate / conv.factor:.0f} Sa/s, "
            f"got {stream.sample_rate:.0f}"
        )
    stuffed = np.zeros(len(stream) * conv.factor)
    stuffed[:: conv.factor] = stream.samples
    out = _causal_filter(stuffed, conv.factor * conv.taps)
    return SampleStream(out, stream.sample_rate * conv.factor)

"""Digital downconversion of one readout shot into a single IQ point.

The pipeline mirrors the firmware path: delay-compensate the reference
branch against the signal branch (integer samples, from an initial
cross-correlation calibration), multiply the signal pointwise with the
reference for I and with the quarter-period-shifted reference for Q, and
sum both products over the integration window.

At f_IF = 62.5 MHz and 500 MSa/s the quarter period is exactly 2 samples;
frequencies whose quarter period is not an integer sample count are
rejected rather than approximated. Sums are accumulated in ascending
sample order, which makes the streaming accumulator bit-identical to the
batch computation. No normalization is applied: I and Q are raw sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import get_kernels
from .dsp import PROCESSING_RATE, SampleStream
from .errors import CalibrationError, ConfigurationError


@dataclass(frozen=True)
class IQPoint:
    i: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.i) and math.isfinite(self.q)):
            raise ConfigurationError(f"IQ components must be finite, got ({self.i}, {self.q})")

    def as_array(self) -> np.ndarray:
        return np.array([self.i, self.q])


@dataclass(frozen=True)
class BranchPair:
    """Signal and reference branches of the interferometer, equal rates."""

    signal: SampleStream
    reference: SampleStream

    def __post_init__(self):
        if self.signal.sample_rate != self.reference.sample_rate:
            raise ConfigurationError("signal and reference must share a sample rate")


def quarter_period_samples(f_if: float, sample_rate: float) -> int:
    """Number of samples in a quarter carrier period; must be an integer.

    (62.5 MHz, 500 MSa/s) -> 2. A relative deviation beyond 1e-9 from an
    integer is a rejected configuration: the shift-based Q extraction only
    works when pi/2 lands exactly on the sample grid.
    """
    if f_if <= 0:
        raise ConfigurationError(f"f_if must be positive, got {f_if}")
    exact = sample_rate / (4.0 * f_if)
    shift = round(exact)
    if shift < 1 or abs(exact - shift) > 1e-9 * exact:
        raise ConfigurationError(
            f"quarter period is {exact} samples at {sample_rate:.0f} Sa/s; "
            "the quarter-period shift requires an integer sample count"
        )
    return shift


@dataclass(frozen=True)
class DemodConfig:
    """Integration window and alignment for one demodulation channel.

    quarter_shift is derived from f_if when omitted and must otherwise
    agree with it exactly.
    """

    f_if: float
    window: float
    delay_compensation: int = 0
    quarter_shift: int | None = None
    sample_rate: float = PROCESSING_RATE

    def __post_init__(self):
        shift = quarter_period_samples(self.f_if, self.sample_rate)
        if self.quarter_shift is None:
            object.__setattr__(self, "quarter_shift", shift)
        elif self.quarter_shift != shift:
            raise ConfigurationError(
                f"quarter_shift {self.quarter_shift} does not match "
                f"sample_rate/(4 f_if) = {shift}"
            )
        if self.delay_compensation < 0:
            raise ConfigurationError("delay_compensation must be non-negative")
        exact = self.window * self.sample_rate
        n = round(exact)
        if n < 1 or abs(exact - n) > 1e-6:
            raise ConfigurationError(
                f"window {self.window} s is not a positive integer number of samples"
            )
        object.__setattr__(self, "_n_window", n)

    @property
    def window_samples(self) -> int:
        return self._n_window


def calibrate_delay(pair: BranchPair, max_delay: int) -> int:
    """Lag of the cross-correlation peak between signal and reference.

    Scans integer lags 0..max_delay; ties break toward the smallest lag.
    Single-tone probes are ambiguous (the correlation repeats every carrier
    period), so calibration should use a broadband probe.
    """
    sig = pair.signal.samples
    ref = pair.reference.samples
    if max_delay < 0 or max_delay >= len(sig):
        raise ConfigurationError(f"max_delay must be in [0, {len(sig) - 1}]")
    if not sig.any() or not ref.any():
        raise CalibrationError("delay calibration failed: all-zero input")
    scores = np.empty(max_delay + 1)
    for lag in range(max_delay + 1):
        n = min(ref.size, sig.size - lag)
        scores[lag] = np.dot(sig[lag : lag + n], ref[:n])
    return int(np.argmax(scores))


def _window_views(pair: BranchPair, cfg: DemodConfig):
    if pair.signal.sample_rate != cfg.sample_rate:
        raise ConfigurationError(
            f"streams are at {pair.signal.sample_rate:.0f} Sa/s, "
            f"config expects {cfg.sample_rate:.0f}"
        )
    n = cfg.window_samples
    d = cfg.delay_compensation
    q = cfg.quarter_shift
    sig = pair.signal.samples
    ref = pair.reference.samples
    if sig.size < d + n:
        raise ConfigurationError(
            f"signal too short: window needs {d + n} samples, got {sig.size}"
        )
    if ref.size < n + q:
        raise ConfigurationError(
            f"reference too short: quarter-shifted window needs {n + q} samples, "
            f"got {ref.size}"
        )
    return sig[d : d + n], ref[:n], ref[q : q + n]


def demodulate(pair: BranchPair, cfg: DemodConfig) -> IQPoint:
    """One shot's IQ point: raw ascending-order sums over the window.

    I = sum_k signal[k] * ref[k], Q = sum_k signal[k] * ref[k + quarter],
    with the signal window starting delay_compensation samples in.
    """
    sig_w, ref_i, ref_q = _window_views(pair, cfg)
    kern = get_kernels()
    i_arr, q_arr = kern.iq_project(
        np.ascontiguousarray(sig_w).reshape(1, -1),
        np.ascontiguousarray(ref_i),
        np.ascontiguousarray(ref_q),
    )
    return IQPoint(float(i_arr[0]), float(q_arr[0]))


def phase_amplitude(p: IQPoint) -> tuple[float, float]:
    """(amplitude, phase) of an IQ point; (0, 0) maps to amplitude 0, phase 0."""
    return math.hypot(p.i, p.q), math.atan2(p.q, p.i)


class IQAccumulator:
    """Streaming demodulator: feed raw signal samples one at a time.

    Skips the configured delay compensation, then accumulates the two
    product sums in arrival (ascending) order. After window_samples
    accumulated samples the result is frozen and further samples are
    ignored; result() matches demodulate() bit for bit on the same inputs.
    """

    def __init__(self, cfg: DemodConfig, reference: SampleStream):
        n, q = cfg.window_samples, cfg.quarter_shift
        if reference.sample_rate != cfg.sample_rate:
            raise ConfigurationError("reference rate does not match config")
        if len(reference) < n + q:
            raise ConfigurationError(
                f"reference too short: need {n + q} samples, got {len(reference)}"
            )
        self._skip = cfg.delay_compensation
        self._n = n
        self._ref_i = reference.samples
        self._ref_q = reference.samples[q:]
        self._k = 0
        self._seen = 0
        self._i = 0.0
        self._q = 0.0

    def push(self, sample: float) -> None:
        if self._seen < self._skip:
            self._seen += 1
            return
        if self._k < self._n:
            self._i += sample * self._ref_i[self._k]
            self._q += sample * self._ref_q[self._k]
            self._k += 1

    def extend(self, samples) -> None:
        for s in np.asarray(samples, dtype=np.float64):
            self.push(float(s))

    @property
    def complete(self) -> bool:
        return self._k == self._n

    def result(self) -> IQPoint:
        if not self.complete:
            raise ConfigurationError(
                f"window incomplete: {self._k} of {self._n} samples accumulated"
            )
        return IQPoint(self._i, self._q)

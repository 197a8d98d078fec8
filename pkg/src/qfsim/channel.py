"""Measurement-channel model at the intermediate frequency.

The qubit state selects a complex transmission coefficient; the channel
scales the readout carrier by its magnitude and shifts the carrier phase
by its argument, then applies an integer-sample cable delay, an overall
gain, and per-sample white Gaussian noise. The untouched copy of the pulse
is the interferometer's reference branch.

The phase rotation is applied with the same quarter-period-shift identity
the demodulator uses: for a carrier with an integer quarter period q,
cos(theta + psi) = cos(psi) x[k] + sin(psi) x[k+q], which is exact wherever
the envelope is constant (everywhere, for rectangular pulses). The cavity
is treated as a steady-state map per state: ring-up transients are not
modeled, and an optional flag lets the executor split the integration at a
mid-readout relaxation jump instead of holding the state constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .demod import BranchPair, DemodConfig, demodulate, quarter_period_samples
from .discriminate import BlobModel
from .dsp import PROCESSING_RATE, PulseShape, SampleStream, synth_pulse
from .errors import ConfigurationError
from .physics import QubitState, as_generator


@dataclass(frozen=True)
class ChannelConfig:
    """Static description of the readout path.

    t_g / t_e: complex transmission coefficients for ground / excited state
    f_if: carrier frequency the rotation acts on (Hz)
    cable_delay: signal-branch delay in whole samples at the processing rate
    gain: amplifier gain applied to the signal branch
    noise_sigma: additive white noise per signal sample (same units as samples)
    reference_noise_sigma: optional noise on the reference branch (0 = clean)
    f_r: resonator frequency, documentation only
    mid_readout_jumps: let the executor model a state jump inside the window
    """

    t_g: complex
    t_e: complex
    f_if: float = 62.5e6
    cable_delay: int = 0
    gain: float = 1.0
    noise_sigma: float = 0.0
    reference_noise_sigma: float = 0.0
    f_r: float | None = None
    mid_readout_jumps: bool = False

    def __post_init__(self):
        for name, t in (("t_g", self.t_g), ("t_e", self.t_e)):
            if not 0.0 < abs(t) <= 1.0:
                raise ConfigurationError(f"|{name}| must be in (0, 1], got {abs(t)}")
        if self.t_g == self.t_e:
            raise ConfigurationError("t_g and t_e must differ (states must be distinguishable)")
        if self.cable_delay < 0:
            raise ConfigurationError("cable_delay must be non-negative")
        if self.gain <= 0:
            raise ConfigurationError("gain must be positive")
        if self.noise_sigma < 0 or self.reference_noise_sigma < 0:
            raise ConfigurationError("noise levels must be non-negative")

    def transmission(self, state: QubitState) -> complex:
        return self.t_e if state is QubitState.E else self.t_g


def rotated_signal(cfg: ChannelConfig, state: QubitState, pulse: SampleStream) -> np.ndarray:
    """Noiseless, undelayed channel output for one state.

    Scales the carrier by |t| and shifts its phase by arg(t) through the
    quarter-period identity. The final quarter period reuses samples from
    3q earlier (same carrier phase), so the output has the pulse's length.
    """
    q = quarter_period_samples(cfg.f_if, pulse.sample_rate)
    x = pulse.samples
    if x.size < 4 * q:
        raise ConfigurationError("pulse must span at least one full carrier period")
    quad = np.empty_like(x)
    quad[: x.size - q] = x[q:]
    quad[x.size - q :] = x[x.size - 4 * q : x.size - 3 * q]
    t = cfg.transmission(state)
    return cfg.gain * (t.real * x + t.imag * quad)


def transmit(cfg: ChannelConfig, state: QubitState, pulse: SampleStream, rng=None) -> BranchPair:
    """Send `pulse` through the channel for one shot.

    Returns the interferometer pair: the reference is the pulse unchanged,
    the signal is the rotated pulse delayed by cable_delay samples (zeros
    at the head) with i.i.d. Gaussian noise on every sample. `rng` may be
    omitted only when both noise levels are zero.
    """
    clean = rotated_signal(cfg, state, pulse)
    sig = np.concatenate([np.zeros(cfg.cable_delay), clean])
    ref = pulse.samples
    if cfg.noise_sigma > 0 or cfg.reference_noise_sigma > 0:
        if rng is None:
            raise ConfigurationError("rng required when noise is enabled")
        gen = as_generator(rng)
        if cfg.noise_sigma > 0:
            sig = sig + cfg.noise_sigma * gen.standard_normal(sig.size)
        if cfg.reference_noise_sigma > 0:
            ref = ref + cfg.reference_noise_sigma * gen.standard_normal(ref.size)
    return BranchPair(
        SampleStream(sig, pulse.sample_rate),
        SampleStream(ref, pulse.sample_rate),
    )


def extended_readout_pulse(
    shape: PulseShape, sample_rate: float = PROCESSING_RATE
) -> SampleStream:
    """Synthesize the readout pulse with one extra quarter period.

    The generator hardware runs continuously; a finite stream needs the
    extra tail so the quarter-shifted reference is defined across the whole
    integration window.
    """
    q = quarter_period_samples(shape.frequency, sample_rate)
    ext = replace(shape, duration=shape.duration + q / sample_rate)
    return synth_pulse(ext, sample_rate)


def demod_config_for(
    cfg: ChannelConfig, shape: PulseShape, window: float, sample_rate: float = PROCESSING_RATE
) -> DemodConfig:
    """Demodulation settings matched to this channel: calibrated delay, carrier shift."""
    if shape.frequency != cfg.f_if:
        raise ConfigurationError(
            f"pulse carrier {shape.frequency} Hz does not match channel f_if {cfg.f_if} Hz"
        )
    return DemodConfig(
        f_if=cfg.f_if,
        window=window,
        delay_compensation=cfg.cable_delay,
        sample_rate=sample_rate,
    )


def blob_model(
    cfg: ChannelConfig,
    shape: PulseShape,
    window: float,
    prior_e: float = 0.5,
    sample_rate: float = PROCESSING_RATE,
) -> BlobModel:
    """Analytic IQ cluster model for this channel and readout pulse.

    Means are the noiseless demodulation outputs per state. The integrated
    noise is Gaussian with per-axis variance noise_sigma**2 * sum(ref**2)
    over the window (the two axes agree whenever the window holds an
    integer number of carrier periods, which also makes them uncorrelated).
    """
    if window > shape.duration:
        raise ConfigurationError("window must not exceed the pulse duration")
    pulse = extended_readout_pulse(shape, sample_rate)
    dcfg = demod_config_for(cfg, shape, window, sample_rate)
    noiseless = replace(cfg, noise_sigma=0.0, reference_noise_sigma=0.0)
    mu_g = demodulate(transmit(noiseless, QubitState.G, pulse), dcfg)
    mu_e = demodulate(transmit(noiseless, QubitState.E, pulse), dcfg)

    n, q = dcfg.window_samples, dcfg.quarter_shift
    ref_i = pulse.samples[:n]
    ref_q = pulse.samples[q : q + n]
    power_i = float(np.dot(ref_i, ref_i))
    power_q = float(np.dot(ref_q, ref_q))
    sigma = cfg.noise_sigma * math.sqrt(0.5 * (power_i + power_q))
    return BlobModel(mu_g=mu_g, mu_e=mu_e, sigma=sigma, prior_e=prior_e)


def noise_sigma_for_error(
    cfg: ChannelConfig,
    shape: PulseShape,
    window: float,
    per_class_error: float = 0.005,
    sample_rate: float = PROCESSING_RATE,
) -> float:
    """Per-sample noise level that sets the symmetric per-class error.

    Solves Phi(-d / (2 sigma)) = per_class_error for the additive noise,
    where d is the noiseless blob separation; 0.5% per class corresponds to
    d/sigma = 5.1517.
    """
    if not 0.0 < per_class_error < 0.5:
        raise ConfigurationError("per_class_error must be in (0, 0.5)")
    probe = replace(cfg, noise_sigma=1.0)
    m = blob_model(probe, shape, window, sample_rate=sample_rate)
    d = float(np.hypot(m.mu_e.i - m.mu_g.i, m.mu_e.q - m.mu_g.q))
    # sigma scales linearly with noise_sigma; m.sigma is the unit-noise value.
    target_ratio = -2.0 * ndtri(per_class_error)
    return d / (target_ratio * m.sigma)

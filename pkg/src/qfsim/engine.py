"""Batched, deterministic Monte Carlo execution of readout experiments.

Shots are processed in fixed blocks of 4096. Each block owns a dedicated
counter-based random stream keyed by (seed, phase, block index) and draws
its variates in one documented order, so results are a pure function of
the seed and configuration: independent of thread count, scheduling, and
of how many blocks run. Worker threads only ever write disjoint slices of
the output arrays, ordered by shot index.

Per reset-protocol block, the draw order is:

    initial-state uniforms (B,)
    readout noise (B, N)
    [jump mode: jump uniforms (B,), jump-time uniforms (B,)]
    window-relaxation uniforms (B,)   [flag off only; jumps imply the end state]
    latency+pi-slot relaxation uniforms (B,)
    pi-success uniforms (B,)
    verification noise (B, N)
    [jump mode: verification jump uniforms (B,), jump-time uniforms (B,)]

The noisy-signal demodulation runs through the selected kernel backend
(compiled C loop or the bit-identical numpy fallback).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import get_kernels
from .channel import ChannelConfig, extended_readout_pulse, rotated_signal
from .demod import DemodConfig
from .discriminate import Discriminant, classify_batch
from .dsp import PulseShape
from .errors import ConfigurationError
from .physics import QubitParams, QubitState, transition_probs
from .sequencer import LatencyModel, Schedule, active_reset_program, validate

BLOCK = 4096

# Disjoint Philox key spaces per experiment phase.
PHASE_SCALAR = 0  # reserved for RngStream (stream_id = shot index)
PHASE_RESET = 1
PHASE_CALIBRATION = 2


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else QFSIM_THREADS, else one per CPU."""
    if threads is None:
        raw = os.environ.get("QFSIM_THREADS", "0")
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigurationError(f"QFSIM_THREADS must be an integer, got {raw!r}")
    if threads < 0:
        raise ConfigurationError("thread count must be non-negative")
    return threads if threads > 0 else (os.cpu_count() or 1)


def _phase_generator(seed: int, phase: int, block: int) -> np.random.Generator:
    key = np.array([seed, phase], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=block << 128))


def _evolve_batch(states: np.ndarray, u: np.ndarray, p_ge: float, p_eg: float) -> np.ndarray:
    flip_prob = np.where(states, p_eg, p_ge)
    return states ^ (u < flip_prob).astype(np.uint8)


@dataclass(frozen=True)
class ReadoutKernelInputs:
    """Precomputed per-experiment arrays shared by every block."""

    tmpl_g: np.ndarray  # noiseless signal window for |0>
    tmpl_e: np.ndarray  # noiseless signal window for |1>
    ref_i: np.ndarray
    ref_q: np.ndarray
    n_window: int
    noise_sigma: float


def prepare_readout(
    cfg: ChannelConfig, shape: PulseShape, dcfg: DemodConfig
) -> ReadoutKernelInputs:
    """Build the state templates and demodulation references for one window.

    The cable delay and its compensation are both applied here, so blocks
    only ever see the aligned integration window.
    """
    pulse = extended_readout_pulse(shape, dcfg.sample_rate)
    n, q, d = dcfg.window_samples, dcfg.quarter_shift, dcfg.delay_compensation
    templates = {}
    for state in (QubitState.G, QubitState.E):
        clean = np.concatenate([np.zeros(cfg.cable_delay), rotated_signal(cfg, state, pulse)])
        if clean.size < d + n:
            raise ConfigurationError("integration window exceeds the transmitted pulse")
        templates[state] = np.ascontiguousarray(clean[d : d + n])
    return ReadoutKernelInputs(
        tmpl_g=templates[QubitState.G],
        tmpl_e=templates[QubitState.E],
        ref_i=np.ascontiguousarray(pulse.samples[:n]),
        ref_q=np.ascontiguousarray(pulse.samples[q : q + n]),
        n_window=n,
        noise_sigma=cfg.noise_sigma,
    )


@dataclass
class ResetRunResult:
    """Per-shot outcome arrays of a reset + verification run (uint8 states)."""

    initial: np.ndarray
    iq1_i: np.ndarray
    iq1_q: np.ndarray
    decision: np.ndarray
    pi_applied: np.ndarray
    state_at_verification: np.ndarray
    iq2_i: np.ndarray
    iq2_q: np.ndarray
    decision2: np.ndarray
    schedule: Schedule

    @property
    def n_shots(self) -> int:
        return self.initial.size


def reset_intervals(schedule: Schedule) -> tuple[float, float]:
    """(readout window, gap from readout end to verification start), seconds."""
    acquires = [ev for ev in schedule.events if ev.name == "acquire" and ev.branch is None]
    if len(acquires) != 2:
        raise ConfigurationError("reset schedule must contain exactly two acquisitions")
    window = (acquires[0].end_ns - acquires[0].start_ns) / 1e9
    gap = (acquires[1].start_ns - acquires[0].end_ns) / 1e9
    return window, gap


def run_reset(
    qubit: QubitParams,
    cfg: ChannelConfig,
    dcfg: DemodConfig,
    disc: Discriminant,
    latency: LatencyModel,
    n_shots: int,
    seed: int,
    threads: int | None = None,
    kernels=None,
) -> ResetRunResult:
    """Run the active-reset protocol (readout, conditional pi, verification)."""
    if n_shots < 1:
        raise ConfigurationError("n_shots must be at least 1")
    kern = kernels if kernels is not None else get_kernels()
    shape = PulseShape(frequency=cfg.f_if, phase=0.0, amplitude=1.0, duration=dcfg.window)
    program = active_reset_program(dcfg.window, verification=True)
    schedule = validate(program, latency, qubit)
    window, gap = reset_intervals(schedule)
    ro = prepare_readout(cfg, shape, dcfg)

    p_ge_w, p_eg_w = transition_probs(window, qubit)
    p_ge_j, p_eg_j = transition_probs(gap, qubit)
    jump_span = -math.expm1(-window / qubit.t1)

    n = ro.n_window
    delta_suffix_i = delta_suffix_q = None
    if cfg.mid_readout_jumps:
        diff = ro.tmpl_e - ro.tmpl_g
        # suffix[k] = sum_{j >= k} diff[j] * ref[j]; suffix[n] = 0
        delta_suffix_i = np.concatenate([np.cumsum((diff * ro.ref_i)[::-1])[::-1], [0.0]])
        delta_suffix_q = np.concatenate([np.cumsum((diff * ro.ref_q)[::-1])[::-1], [0.0]])

    out = ResetRunResult(
        initial=np.empty(n_shots, dtype=np.uint8),
        iq1_i=np.empty(n_shots),
        iq1_q=np.empty(n_shots),
        decision=np.empty(n_shots, dtype=np.uint8),
        pi_applied=np.empty(n_shots, dtype=np.uint8),
        state_at_verification=np.empty(n_shots, dtype=np.uint8),
        iq2_i=np.empty(n_shots),
        iq2_q=np.empty(n_shots),
        decision2=np.empty(n_shots, dtype=np.uint8),
        schedule=schedule,
    )

    def measured_iq(states, noise, gen):
        """IQ of one readout, honoring the mid-window jump flag.

        Returns (I, Q, state_after_window or None); in jump mode the jump
        and jump-time uniforms are drawn here, right after the noise.
        """
        if not cfg.mid_readout_jumps:
            i_arr, q_arr = kern.shot_iq(
                ro.tmpl_g, ro.tmpl_e, states, noise, ro.noise_sigma, ro.ref_i, ro.ref_q
            )
            return i_arr, q_arr, None
        b = states.size
        u_jump = gen.random(b)
        u_time = gen.random(b)
        flip_prob = np.where(states, p_eg_w, p_ge_w)
        jumped = u_jump < flip_prob
        i_arr, q_arr = kern.shot_iq(
            ro.tmpl_g, ro.tmpl_e, states, noise, ro.noise_sigma, ro.ref_i, ro.ref_q
        )
        if jumped.any():
            tau = -qubit.t1 * np.log1p(-u_time[jumped] * jump_span)
            k_star = np.minimum((tau * dcfg.sample_rate).astype(np.int64), n)
            sign = np.where(states[jumped], -1.0, 1.0)  # e->g removes the diff
            i_arr[jumped] += sign * delta_suffix_i[k_star]
            q_arr[jumped] += sign * delta_suffix_q[k_star]
        after = states ^ jumped.astype(np.uint8)
        return i_arr, q_arr, after

    def run_block(block: int) -> None:
        lo = block * BLOCK
        hi = min(lo + BLOCK, n_shots)
        b = hi - lo
        gen = _phase_generator(seed, PHASE_RESET, block)

        s0 = (gen.random(b) < qubit.p1_eq).astype(np.uint8)
        if cfg.mid_readout_jumps:
            i1, q1, s1 = measured_iq(s0, gen.standard_normal((b, n)), gen)
        else:
            noise1 = gen.standard_normal((b, n))
            i1, q1, _ = measured_iq(s0, noise1, gen)
            s1 = _evolve_batch(s0, gen.random(b), p_ge_w, p_eg_w)
        d1 = classify_batch(disc, i1, q1)

        s2 = _evolve_batch(s1, gen.random(b), p_ge_j, p_eg_j)
        u_pi = gen.random(b)
        flip = (d1 == 1) & (u_pi >= qubit.pi_error)
        s3 = s2 ^ flip.astype(np.uint8)

        if cfg.mid_readout_jumps:
            i2, q2, _ = measured_iq(s3, gen.standard_normal((b, n)), gen)
        else:
            noise2 = gen.standard_normal((b, n))
            i2, q2, _ = measured_iq(s3, noise2, gen)
        d2 = classify_batch(disc, i2, q2)

        out.initial[lo:hi] = s0
        out.iq1_i[lo:hi] = i1
        out.iq1_q[lo:hi] = q1
        out.decision[lo:hi] = d1
        out.pi_applied[lo:hi] = d1  # the pulse is played whenever |1> is detected
        out.state_at_verification[lo:hi] = s3
        out.iq2_i[lo:hi] = i2
        out.iq2_q[lo:hi] = q2
        out.decision2[lo:hi] = d2

    _run_blocks(run_block, n_shots, resolve_threads(threads))
    return out


@dataclass
class CalibrationRunResult:
    iq_i: np.ndarray
    iq_q: np.ndarray
    labels: np.ndarray  # prepared state per shot, uint8


def run_calibration(
    qubit: QubitParams,
    cfg: ChannelConfig,
    dcfg: DemodConfig,
    n_shots: int,
    seed: int,
    threads: int | None = None,
    kernels=None,
) -> CalibrationRunResult:
    """Readouts of deterministically prepared states, alternating g, e, g, e...

    Preparation bypasses thermal sampling and relaxation, so the clusters
    sit exactly on the analytic blob means.
    """
    if n_shots < 1:
        raise ConfigurationError("n_shots must be at least 1")
    kern = kernels if kernels is not None else get_kernels()
    shape = PulseShape(frequency=cfg.f_if, phase=0.0, amplitude=1.0, duration=dcfg.window)
    ro = prepare_readout(cfg, shape, dcfg)
    out = CalibrationRunResult(
        iq_i=np.empty(n_shots),
        iq_q=np.empty(n_shots),
        labels=np.empty(n_shots, dtype=np.uint8),
    )

    def run_block(block: int) -> None:
        lo = block * BLOCK
        hi = min(lo + BLOCK, n_shots)
        b = hi - lo
        gen = _phase_generator(seed, PHASE_CALIBRATION, block)
        labels = (np.arange(lo, hi) % 2).astype(np.uint8)
        noise = gen.standard_normal((b, ro.n_window))
        i_arr, q_arr = kern.shot_iq(
            ro.tmpl_g, ro.tmpl_e, labels, noise, ro.noise_sigma, ro.ref_i, ro.ref_q
        )
        out.iq_i[lo:hi] = i_arr
        out.iq_q[lo:hi] = q_arr
        out.labels[lo:hi] = labels

    _run_blocks(run_block, n_shots, resolve_threads(threads))
    return out


def _run_blocks(run_block, n_shots: int, workers: int) -> None:
    n_blocks = (n_shots + BLOCK - 1) // BLOCK
    if workers <= 1 or n_blocks == 1:
        for block in range(n_blocks):
            run_block(block)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for future in [pool.submit(run_block, b) for b in range(n_blocks)]:
            future.result()

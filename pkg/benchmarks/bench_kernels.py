"""Benchmark the compiled readout kernels against the numpy fallback.

Times the two hot kernels (fused shot readout and plain batch
demodulation) and one full reset run per backend, and verifies that the
backends agree bit for bit on every compared quantity.

Usage: python benchmarks/bench_kernels.py [--shots 200000] [--window 400]
"""
from __future__ import annotations

import argparse
import time
from dataclasses import replace

import numpy as np

from qfsim import engine
from qfsim._backend import available_backends, get_kernels
from qfsim.channel import ChannelConfig, demod_config_for, noise_sigma_for_error
from qfsim.discriminate import train_lda_arrays
from qfsim.dsp import PulseShape
from qfsim.physics import QubitParams
from qfsim.sequencer import LatencyModel


def time_call(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_kernels(n_shots: int, n_window: int) -> None:
    rng = np.random.default_rng(0)
    tmpl_g = rng.standard_normal(n_window)
    tmpl_e = rng.standard_normal(n_window)
    states = (rng.random(n_shots) < 0.117).astype(np.uint8)
    noise = rng.standard_normal((n_shots, n_window))
    ref_i = np.cos(np.pi * np.arange(n_window) / 4)
    ref_q = np.cos(np.pi * (np.arange(n_window) + 2) / 4)
    sig = tmpl_g + 1.5 * noise

    results = {}
    print(f"kernel benchmarks ({n_shots} shots x {n_window} samples):")
    for name in available_backends():
        kern = get_kernels(name)
        t_shot, out_shot = time_call(
            lambda: kern.shot_iq(tmpl_g, tmpl_e, states, noise, 1.4707, ref_i, ref_q)
        )
        t_proj, out_proj = time_call(lambda: kern.iq_project(sig, ref_i, ref_q))
        results[name] = (out_shot, out_proj)
        rate = n_shots / t_shot / 1e6
        print(f"  {name:>6}: shot_iq {t_shot * 1e3:8.1f} ms ({rate:5.1f} Mshot/s)"
              f"   iq_project {t_proj * 1e3:8.1f} ms")

    if len(results) == 2:
        c, np_ = results["c"], results["numpy"]
        exact = (
            np.array_equal(c[0][0], np_[0][0])
            and np.array_equal(c[0][1], np_[0][1])
            and np.array_equal(c[1][0], np_[1][0])
            and np.array_equal(c[1][1], np_[1][1])
        )
        print(f"  backends bit-identical: {exact}")
        if not exact:
            raise SystemExit("backend mismatch")


def bench_full_run(n_shots: int) -> None:
    shape = PulseShape(frequency=62.5e6, phase=0.0, amplitude=1.0, duration=800e-9)
    channel = ChannelConfig(
        t_g=0.7 * np.exp(-1j * np.pi / 8), t_e=0.7 * np.exp(1j * np.pi / 8), cable_delay=5
    )
    channel = replace(channel, noise_sigma=noise_sigma_for_error(channel, shape, 800e-9))
    dcfg = demod_config_for(channel, shape, 800e-9)
    qubit = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117)
    cal = engine.run_calibration(qubit, channel, dcfg, 20_000, seed=1)
    disc = train_lda_arrays(cal.iq_i, cal.iq_q, cal.labels, priors=(0.883, 0.117))

    print(f"\nfull reset runs ({n_shots} shots, single thread):")
    reference = None
    for name in available_backends():
        t0 = time.perf_counter()
        run = engine.run_reset(
            qubit, channel, dcfg, disc, LatencyModel(), n_shots, seed=2,
            threads=1, kernels=get_kernels(name),
        )
        dt = time.perf_counter() - t0
        print(f"  {name:>6}: {dt:6.2f} s ({n_shots / dt / 1e3:6.1f} kshot/s), "
              f"residual population {run.state_at_verification.mean() * 100:.3f}%")
        if reference is None:
            reference = run
        else:
            same = np.array_equal(reference.iq2_i, run.iq2_i) and np.array_equal(
                reference.decision2, run.decision2
            )
            print(f"  full-run outputs bit-identical: {same}")
            if not same:
                raise SystemExit("backend mismatch in full run")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--shots", type=int, default=200_000)
    parser.add_argument("--window", type=int, default=400)
    args = parser.parse_args()
    print(f"available backends: {', '.join(available_backends())}")
    bench_kernels(min(args.shots, 100_000), args.window)
    bench_full_run(args.shots)


if __name__ == "__main__":
    main()

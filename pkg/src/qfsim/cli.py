"""Command-line orchestration: calibrate, reset, latency.

One JSON config document describes an experiment. File units follow the
conventions of the hardware docs (frequencies in Hz, durations in ns,
temperatures in mK in reports); everything is converted to SI internally.

Exit codes: 0 success, 2 configuration error, 3 calibration/training
failure, 4 runtime error.
"""
from __future__ import annotations

import argparse
import cmath
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import engine
from .channel import ChannelConfig, blob_model, noise_sigma_for_error
from .demod import DemodConfig, IQPoint
from .discriminate import (
    BlobModel,
    bayes_error,
    discriminant_from_json,
    discriminant_to_json,
    estimate_populations,
    train_lda_arrays,
)
from .dsp import PulseShape
from .errors import CalibrationError, ConfigurationError, TrainingError
from .physics import QubitParams, QubitState, effective_temperature
from .sequencer import LatencyModel, ShotRecord, active_reset_program, validate

INTERCEPT_MODES = ("thermal-prior", "counts", "midpoint")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    n_shots: int
    qubit: QubitParams
    channel: ChannelConfig
    demod: DemodConfig
    latency: LatencyModel
    histogram_bins: int = 101
    intercept_mode: str = "thermal-prior"

    def __post_init__(self):
        if self.n_shots < 1:
            raise ConfigurationError("n_shots must be at least 1")
        if self.histogram_bins < 2:
            raise ConfigurationError("histogram_bins must be at least 2")
        if self.intercept_mode not in INTERCEPT_MODES:
            raise ConfigurationError(f"intercept mode must be one of {INTERCEPT_MODES}")

    @property
    def readout_shape(self) -> PulseShape:
        return PulseShape(
            frequency=self.channel.f_if, phase=0.0, amplitude=1.0, duration=self.demod.window
        )

    def analytic_blob(self, prior_e: float) -> BlobModel:
        return blob_model(
            self.channel, self.readout_shape, self.demod.window, prior_e=prior_e
        )


def default_config_dict() -> dict:
    """Experiment defaults: thermal fluxonium readout with 0.5% per-class error."""
    return {
        "seed": 20260808,
        "n_shots": 1_000_000,
        "qubit": {
            "f01_hz": 1.26e9,
            "t1_ns": 80_000,
            "p1_eq": 0.117,
            "pi_error": 0.001,
            "pi_duration_ns": 250,
        },
        "channel": {
            "t_g": {"mag": 0.7, "phase_rad": -math.pi / 8},
            "t_e": {"mag": 0.7, "phase_rad": math.pi / 8},
            "f_if_hz": 62.5e6,
            "cable_delay_samples": 5,
            "gain": 1.0,
            "noise_sigma": None,
            "bayes_per_class_error": 0.005,
            "reference_noise_sigma": 0.0,
            "mid_readout_jumps": False,
        },
        "demod": {"window_ns": 800, "delay_compensation_samples": None},
        "latency": {"preset": "default"},
        "discriminant_intercept": "thermal-prior",
        "histogram_bins": 101,
    }


def _parse_complex(obj, field: str) -> complex:
    if isinstance(obj, dict):
        if "mag" in obj:
            return obj["mag"] * cmath.exp(1j * obj.get("phase_rad", 0.0))
        if "re" in obj:
            return complex(obj["re"], obj.get("im", 0.0))
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return complex(obj[0], obj[1])
    raise ConfigurationError(
        f"{field} must be {{'mag':..,'phase_rad':..}}, {{'re':..,'im':..}} or [re, im]"
    )


def _latency_from(data: dict) -> LatencyModel:
    preset = data.get("preset")
    if preset is not None:
        if preset == "default":
            return LatencyModel()
        if preset == "optimized":
            return LatencyModel.optimized()
        if preset == "zero":
            return LatencyModel.zero()
        raise ConfigurationError(f"unknown latency preset {preset!r}")
    defaults = LatencyModel()
    kwargs = {}
    for name in ("adc", "decimation", "demod_pipeline", "decision", "interpolation", "dac"):
        key = f"{name}_ns"
        kwargs[name] = data[key] / 1e9 if key in data else getattr(defaults, name)
    return LatencyModel(**kwargs)


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        q = data["qubit"]
        qubit = QubitParams(
            f01=float(q["f01_hz"]),
            t1=float(q["t1_ns"]) / 1e9,
            p1_eq=float(q["p1_eq"]),
            pi_error=float(q.get("pi_error", 1e-3)),
            pi_duration=float(q.get("pi_duration_ns", 250)) / 1e9,
        )
        c = data["channel"]
        channel = ChannelConfig(
            t_g=_parse_complex(c["t_g"], "channel.t_g"),
            t_e=_parse_complex(c["t_e"], "channel.t_e"),
            f_if=float(c.get("f_if_hz", 62.5e6)),
            cable_delay=int(c.get("cable_delay_samples", 0)),
            gain=float(c.get("gain", 1.0)),
            noise_sigma=0.0,
            reference_noise_sigma=float(c.get("reference_noise_sigma", 0.0)),
            f_r=c.get("f_r_hz"),
            mid_readout_jumps=bool(c.get("mid_readout_jumps", False)),
        )
        d = data["demod"]
        window = float(d["window_ns"]) / 1e9
        delay_comp = d.get("delay_compensation_samples")
        demod = DemodConfig(
            f_if=channel.f_if,
            window=window,
            delay_compensation=channel.cable_delay if delay_comp is None else int(delay_comp),
        )
        shape = PulseShape(
            frequency=channel.f_if, phase=0.0, amplitude=1.0, duration=window
        )
        sigma = c.get("noise_sigma")
        if sigma is None:
            sigma = noise_sigma_for_error(
                channel, shape, window, float(c.get("bayes_per_class_error", 0.005))
            )
        from dataclasses import replace

        channel = replace(channel, noise_sigma=float(sigma))
        return ExperimentConfig(
            seed=int(data["seed"]),
            n_shots=int(data["n_shots"]),
            qubit=qubit,
            channel=channel,
            demod=demod,
            latency=_latency_from(data.get("latency", {"preset": "default"})),
            histogram_bins=int(data.get("histogram_bins", 101)),
            intercept_mode=data.get("discriminant_intercept", "thermal-prior"),
        )
    except KeyError as exc:
        raise ConfigurationError(f"missing config field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad config value: {exc}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    try:
        return config_from_dict(data)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


# -- calibrate -------------------------------------------------------------


def cmd_calibrate(config: ExperimentConfig, out_path: str | Path) -> dict:
    """Train the discriminant on 50/50 prepared states; write it plus a report."""
    run = engine.run_calibration(
        config.qubit, config.channel, config.demod, config.n_shots, config.seed
    )
    priors = None
    intercept = "prior"
    if config.intercept_mode == "thermal-prior":
        priors = (1.0 - config.qubit.p1_eq, config.qubit.p1_eq)
    elif config.intercept_mode == "midpoint":
        intercept = "midpoint"
    disc = train_lda_arrays(
        run.iq_i, run.iq_q, run.labels, priors=priors, intercept=intercept
    )

    excited = run.labels == 1
    mean_g = [float(run.iq_i[~excited].mean()), float(run.iq_q[~excited].mean())]
    mean_e = [float(run.iq_i[excited].mean()), float(run.iq_q[excited].mean())]
    var_g = run.iq_i[~excited].var() + run.iq_q[~excited].var()
    var_e = run.iq_i[excited].var() + run.iq_q[excited].var()
    sigma_fit = float(np.sqrt((var_g + var_e) / 4.0))  # per-axis, pooled

    blob_cal = config.analytic_blob(prior_e=0.5)
    blob_thermal = config.analytic_blob(prior_e=config.qubit.p1_eq)
    report = {
        "n_shots": config.n_shots,
        "seed": config.seed,
        "intercept_mode": config.intercept_mode,
        "means": {"g": mean_g, "e": mean_e},
        "means_analytic": {
            "g": [blob_cal.mu_g.i, blob_cal.mu_g.q],
            "e": [blob_cal.mu_e.i, blob_cal.mu_e.q],
        },
        "sigma": sigma_fit,
        "sigma_analytic": blob_cal.sigma,
        "separation_over_sigma": (
            blob_cal.separation / blob_cal.sigma if blob_cal.sigma > 0 else None
        ),
        "bayes_error": bayes_error(blob_cal),
        "bayes_error_thermal": bayes_error(blob_thermal),
        "discriminant": json.loads(discriminant_to_json(disc)),
    }

    out_path = Path(out_path)
    out_path.write_text(discriminant_to_json(disc) + "\n")
    report_path = out_path.with_name(out_path.stem + ".report.json")
    report_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return report


# -- reset ----------------------------------------------------------------


def _population_triplet(truth, classified, iq_i, iq_q, blob: BlobModel) -> dict:
    points = np.column_stack([iq_i, iq_q])
    _, p_e = estimate_populations(points, blob)
    return {
        "truth": float(truth),
        "classified": float(classified),
        "mixture": float(p_e),
    }


def _t_eff_mk(p1: float, f01: float) -> float | None:
    if not 0.0 < p1 < 0.5:
        return None
    return effective_temperature(p1, f01) * 1e3


def _write_histogram_csv(path: Path, i: np.ndarray, q: np.ndarray, bins: int) -> None:
    """2-D histogram as CSV rows of i_bin_center,q_bin_center,count.

    Bin edges span the data min/max padded by 5% on each axis; the sum of
    all counts equals the number of shots.
    """
    def padded(lo: float, hi: float) -> tuple[float, float]:
        span = hi - lo
        pad = 0.05 * span if span > 0 else max(abs(lo), 1.0) * 0.05
        return lo - pad, hi + pad

    i_lo, i_hi = padded(float(i.min()), float(i.max()))
    q_lo, q_hi = padded(float(q.min()), float(q.max()))
    counts, i_edges, q_edges = np.histogram2d(
        i, q, bins=bins, range=[[i_lo, i_hi], [q_lo, q_hi]]
    )
    i_centers = (i_edges[:-1] + i_edges[1:]) / 2.0
    q_centers = (q_edges[:-1] + q_edges[1:]) / 2.0
    lines = ["i_bin_center,q_bin_center,count"]
    for a in range(bins):
        for b in range(bins):
            lines.append(f"{i_centers[a]!r},{q_centers[b]!r},{int(counts[a, b])}")
    path.write_text("\n".join(lines) + "\n")


def _shot_log_lines(result: engine.ResetRunResult):
    # One record per shot for the reset operation itself: final_state is the
    # state at the branch join, i.e. entering the verification readout; the
    # verification IQ and decision ride along as extra fields.
    timelines = {
        s: tuple((ev.name, ev.start, ev.end) for ev in result.schedule.events_for(s))
        for s in (QubitState.G, QubitState.E)
    }
    for k in range(result.n_shots):
        decision = QubitState(int(result.decision[k]))
        record = ShotRecord(
            initial_state=QubitState(int(result.initial[k])),
            iq=IQPoint(float(result.iq1_i[k]), float(result.iq1_q[k])),
            decision=decision,
            pi_applied=bool(result.pi_applied[k]),
            final_state=QubitState(int(result.state_at_verification[k])),
            timeline=timelines[decision],
        )
        data = record.to_json_dict()
        data["iq_verify"] = [float(result.iq2_i[k]), float(result.iq2_q[k])]
        data["decision_verify"] = QubitState(int(result.decision2[k])).name.lower()
        yield json.dumps(data, sort_keys=True)


def cmd_reset(
    config: ExperimentConfig,
    discriminant_path: str | Path,
    out_dir: str | Path,
    shot_log: bool = False,
) -> dict:
    """Thermalize, actively reset, verify; write report, histograms, optional log."""
    discriminant_path = Path(discriminant_path)
    if not discriminant_path.is_file():
        raise ConfigurationError(f"discriminant file not found: {discriminant_path}")
    disc = discriminant_from_json(discriminant_path.read_text())

    result = engine.run_reset(
        config.qubit,
        config.channel,
        config.demod,
        disc,
        config.latency,
        config.n_shots,
        config.seed,
    )
    blob = config.analytic_blob(prior_e=config.qubit.p1_eq)

    before = _population_triplet(
        result.initial.mean(), result.decision.mean(), result.iq1_i, result.iq1_q, blob
    )
    after = _population_triplet(
        result.state_at_verification.mean(),
        result.decision2.mean(),
        result.iq2_i,
        result.iq2_q,
        blob,
    )
    fidelity = 1.0 - after["truth"]

    reset_schedule = validate(
        active_reset_program(config.demod.window), config.latency, config.qubit
    )
    pi_events = [ev for ev in reset_schedule.events if ev.name == "play:pi"]
    report = {
        "n_shots": config.n_shots,
        "seed": config.seed,
        "sequence": {
            "window_ns": round(config.demod.window * 1e9),
            "pi_start_ns": pi_events[0].start_ns if pi_events else None,
            "duration_ns": reset_schedule.duration_ns,
        },
        "latency_ns": {**config.latency.components_ns(), "total": config.latency.total_ns()},
        "populations": {"before": before, "after": after},
        "fidelity": fidelity,
        "effective_temperature_mk": {
            "before": _t_eff_mk(before["mixture"], config.qubit.f01),
            "after": _t_eff_mk(after["mixture"], config.qubit.f01),
        },
        "assumed": {
            "pi_error": config.qubit.pi_error,
            "pi_duration_ns": round(config.qubit.pi_duration * 1e9),
        },
    }

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    _write_histogram_csv(
        out_dir / "histogram_before.csv", result.iq1_i, result.iq1_q, config.histogram_bins
    )
    _write_histogram_csv(
        out_dir / "histogram_after.csv", result.iq2_i, result.iq2_q, config.histogram_bins
    )
    if shot_log:
        with (out_dir / "shots.ndjson").open("w") as fh:
            for line in _shot_log_lines(result):
                fh.write(line + "\n")
    return report


# -- latency ---------------------------------------------------------------


def cmd_latency(config: ExperimentConfig, out=None) -> None:
    """Print the latency budget and the timed reset sequence."""
    if out is None:
        out = sys.stdout
    comps = config.latency.components_ns()
    width = max(len(k) for k in comps)
    print("platform latency budget:", file=out)
    for name, ns in comps.items():
        print(f"  {name:<{width}} {ns:>6d} ns", file=out)
    print(f"  {'total':<{width}} {config.latency.total_ns():>6d} ns", file=out)
    print(file=out)
    schedule = validate(
        active_reset_program(config.demod.window, verification=True),
        config.latency,
        config.qubit,
    )
    print("reset sequence timeline (verification readout included):", file=out)
    for ev in sorted(schedule.events, key=lambda e: (e.start_ns, e.name)):
        arm = f" [if {ev.branch}]" if ev.branch else ""
        print(f"  {ev.start_ns:>6d} .. {ev.end_ns:>6d} ns  {ev.name}{arm}", file=out)
    print(f"  total {schedule.duration_ns} ns", file=out)


# -- entry point -----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfsim", description="FPGA qubit readout / active reset simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="train and store the IQ discriminant")
    cal.add_argument("--config", required=True)
    cal.add_argument("--out", required=True, help="discriminant JSON output path")

    rst = sub.add_parser("reset", help="run the active-reset experiment")
    rst.add_argument("--config", required=True)
    rst.add_argument("--discriminant", required=True)
    rst.add_argument("--out-dir", required=True)
    rst.add_argument("--shot-log", action="store_true", help="write per-shot NDJSON")

    lat = sub.add_parser("latency", help="print the latency budget and timeline")
    lat.add_argument("--config", required=True)

    wcfg = sub.add_parser("write-config", help="write the default config JSON")
    wcfg.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "write-config":
            Path(args.out).write_text(json.dumps(default_config_dict(), indent=2) + "\n")
            return 0
        config = load_config(args.config)
        if args.command == "calibrate":
            report = cmd_calibrate(config, args.out)
            print(json.dumps(report, sort_keys=True, indent=2))
        elif args.command == "reset":
            report = cmd_reset(config, args.discriminant, args.out_dir, args.shot_log)
            print(json.dumps(report, sort_keys=True, indent=2))
        elif args.command == "latency":
            cmd_latency(config)
        return 0
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (CalibrationError, TrainingError) as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Conditional pulse programs, the platform latency budget, and shot execution.

Programs are flat instruction tuples with at most one level of state
branching. `validate` turns a program into an absolute schedule on the
2 ns processing tick: instructions run back to back, and the first
instruction of a branch starts no earlier than the decision is available,
i.e. the end of the acquisition plus the platform latency (the sum of the
converter, filter and decision pipeline delays).

Both branch arms occupy the same schedule slot and rejoin at the end of
the longer arm, so the timing of everything after a branch is
state-independent and a single static schedule describes every shot.

`execute_shot` runs one complete shot: thermal initial state, readout
through the channel, demodulation, classification, latency-delayed
conditional pulses, and relaxation across every timed gap. The qubit state
used for signal generation is the state entering the acquisition window
(quantum non-demolition reading); relaxation across the window is applied
after the signal is produced, unless the channel's mid-readout jump flag
asks for a split-window signal instead.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
import json

import numpy as np

from .channel import ChannelConfig, extended_readout_pulse, rotated_signal, transmit
from .demod import BranchPair, DemodConfig, IQPoint, demodulate
from .discriminate import Discriminant, classify
from .dsp import PulseShape, SampleStream
from .errors import ProgramError
from .physics import (
    QubitParams,
    QubitState,
    apply_pi_pulse,
    as_generator,
    evolve,
    sample_thermal,
    transition_probs,
)

TICK_NS = 2

CHANNELS = ("readout", "drive")


@dataclass(frozen=True)
class Play:
    channel: str
    shape: PulseShape | None = None
    pi: bool = False

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ProgramError(f"unknown channel {self.channel!r}")
        if self.pi and self.channel != "drive":
            raise ProgramError("pi pulses play on the drive channel")
        if not self.pi and self.shape is None:
            raise ProgramError("non-pi Play needs an explicit pulse shape")


@dataclass(frozen=True)
class Acquire:
    window: float  # seconds


@dataclass(frozen=True)
class Wait:
    duration: float  # seconds


@dataclass(frozen=True)
class BranchOnState:
    if_e: tuple = ()
    if_g: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "if_e", tuple(self.if_e))
        object.__setattr__(self, "if_g", tuple(self.if_g))


Instruction = Play | Acquire | Wait | BranchOnState


@dataclass(frozen=True)
class LatencyModel:
    """Additive decomposition of the platform's feedback latency, in seconds.

    The defaults total 428 ns; the split between stages is a configurable
    model (the converter and filter stages dominate), so any budget down to
    the optimized 150 ns preset can be explored per component.
    """

    adc: float = 70e-9
    decimation: float = 100e-9
    demod_pipeline: float = 48e-9
    decision: float = 40e-9  # 5 cycles at 125 MHz
    interpolation: float = 100e-9
    dac: float = 70e-9

    def __post_init__(self):
        for name in ("adc", "decimation", "demod_pipeline", "decision", "interpolation", "dac"):
            if getattr(self, name) < 0:
                raise ProgramError(f"latency component {name} must be non-negative")

    def components_ns(self) -> dict[str, int]:
        return {
            name: round(getattr(self, name) * 1e9)
            for name in ("adc", "decimation", "demod_pipeline", "decision", "interpolation", "dac")
        }

    def total_ns(self) -> int:
        return sum(self.components_ns().values())

    def total(self) -> float:
        return self.total_ns() / 1e9

    @classmethod
    def optimized(cls) -> "LatencyModel":
        """150 ns target budget with proportionally squeezed stages."""
        return cls(
            adc=25e-9,
            decimation=35e-9,
            demod_pipeline=24e-9,
            decision=16e-9,
            interpolation=30e-9,
            dac=20e-9,
        )

    @classmethod
    def zero(cls) -> "LatencyModel":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def platform_latency(m: LatencyModel) -> float:
    """Delay between the last acquired sample and the first conditioned output."""
    return m.total()


@dataclass(frozen=True)
class ScheduledEvent:
    name: str
    channel: str | None
    start_ns: int
    end_ns: int
    branch: str | None = None  # "e" / "g" for branch-arm events
    instruction: Instruction | None = None

    @property
    def start(self) -> float:
        return self.start_ns / 1e9

    @property
    def end(self) -> float:
        return self.end_ns / 1e9


@dataclass(frozen=True)
class Schedule:
    events: tuple[ScheduledEvent, ...]
    duration_ns: int
    latency_ns: int

    @property
    def duration(self) -> float:
        return self.duration_ns / 1e9

    def events_for(self, decision: QubitState | None) -> tuple[ScheduledEvent, ...]:
        """Chronological events on the path selected by `decision`."""
        tag = None if decision is None else ("e" if decision is QubitState.E else "g")
        chosen = [ev for ev in self.events if ev.branch in (None, tag)]
        return tuple(sorted(chosen, key=lambda ev: ev.start_ns))


def _duration_ns(seconds: float, what: str) -> int:
    exact = seconds * 1e9
    n = round(exact)
    if abs(exact - n) > 1e-3:
        raise ProgramError(f"{what} of {seconds} s is not a whole number of ns")
    if n < 0:
        raise ProgramError(f"{what} must be non-negative")
    if n % TICK_NS:
        raise ProgramError(f"{what} of {n} ns is not on the {TICK_NS} ns tick")
    return n


def _play_duration_ns(instr: Play, qubit: QubitParams) -> int:
    if instr.pi and instr.shape is None:
        return _duration_ns(qubit.pi_duration, "pi-pulse duration")
    return _duration_ns(instr.shape.duration, "pulse duration")


def validate(
    program, latency: LatencyModel, qubit: QubitParams
) -> Schedule:
    """Produce the absolute schedule for `program` or raise ProgramError.

    Checks tick alignment of every duration, that any branch is preceded by
    an acquisition, and that no two pulses overlap on the same channel.
    """
    events: list[ScheduledEvent] = []
    intervals: list[tuple[int, int, str, str | None]] = []  # start, end, channel, branch
    latency_ns = latency.total_ns()

    def occupy(start: int, end: int, chan: str, branch: str | None, name: str):
        for s0, e0, c0, b0 in intervals:
            if c0 != chan or e0 <= start or end <= s0:
                continue
            if branch is not None and b0 is not None and branch != b0:
                continue  # mutually exclusive branch arms may share the slot
            raise ProgramError(
                f"{name} overlaps another pulse on channel {chan!r} "
                f"({start}..{end} ns vs {s0}..{e0} ns)"
            )
        intervals.append((start, end, chan, branch))

    def schedule_one(instr: Instruction, t0: int, branch: str | None) -> int:
        if isinstance(instr, Wait):
            d = _duration_ns(instr.duration, "wait duration")
            events.append(ScheduledEvent("wait", None, t0, t0 + d, branch, instr))
            return t0 + d
        if isinstance(instr, Play):
            d = _play_duration_ns(instr, qubit)
            name = "play:pi" if instr.pi else f"play:{instr.channel}"
            occupy(t0, t0 + d, instr.channel, branch, name)
            events.append(ScheduledEvent(name, instr.channel, t0, t0 + d, branch, instr))
            return t0 + d
        if isinstance(instr, Acquire):
            n = _duration_ns(instr.window, "acquire window")
            # acquisition drives the readout pulse for its whole window
            occupy(t0, t0 + n, "readout", branch, "acquire")
            events.append(ScheduledEvent("acquire", "readout", t0, t0 + n, branch, instr))
            return t0 + n
        raise ProgramError(f"instruction {type(instr).__name__} not allowed here")

    t = 0
    last_acquire_end: int | None = None
    for instr in program:
        if isinstance(instr, BranchOnState):
            if last_acquire_end is None:
                raise ProgramError("branch without a preceding acquisition")
            for arm in (instr.if_e, instr.if_g):
                for sub in arm:
                    if isinstance(sub, BranchOnState):
                        raise ProgramError("nested branches are not supported")
            start = max(t, last_acquire_end + latency_ns)
            events.append(
                ScheduledEvent("decision_latency", None, last_acquire_end, start, None, instr)
            )
            end_e = start
            for sub in instr.if_e:
                end_e = schedule_one(sub, end_e, "e")
            end_g = start
            for sub in instr.if_g:
                end_g = schedule_one(sub, end_g, "g")
            t = max(end_e, end_g)
        else:
            t = schedule_one(instr, t, None)
            if isinstance(instr, Acquire):
                last_acquire_end = t
    return Schedule(events=tuple(events), duration_ns=t, latency_ns=latency_ns)


def active_reset_program(window: float, verification: bool = False):
    """Measure, flip only if excited; optionally verify with a second readout."""
    program: tuple[Instruction, ...] = (
        Acquire(window),
        BranchOnState(if_e=(Play("drive", pi=True),), if_g=()),
    )
    if verification:
        program = program + (Acquire(window),)
    return program


@dataclass(frozen=True)
class AcquisitionResult:
    true_state: QubitState  # state entering the window
    iq: IQPoint
    decision: QubitState


@dataclass(frozen=True)
class ShotRecord:
    initial_state: QubitState
    iq: IQPoint | None
    decision: QubitState | None
    pi_applied: bool
    final_state: QubitState
    timeline: tuple[tuple[str, float, float], ...]
    acquisitions: tuple[AcquisitionResult, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "initial_state": self.initial_state.name.lower(),
            "iq": None if self.iq is None else [self.iq.i, self.iq.q],
            "decision": None if self.decision is None else self.decision.name.lower(),
            "pi_applied": self.pi_applied,
            "final_state": self.final_state.name.lower(),
            "timeline": [[name, start, end] for name, start, end in self.timeline],
            "acquisitions": [
                [a.true_state.name.lower(), a.iq.i, a.iq.q, a.decision.name.lower()]
                for a in self.acquisitions
            ],
        }


@lru_cache(maxsize=16)
def _readout_pulse(window: float, f_if: float, sample_rate: float) -> SampleStream:
    shape = PulseShape(frequency=f_if, phase=0.0, amplitude=1.0, duration=window)
    return extended_readout_pulse(shape, sample_rate)


def _truncated_exp_jump(u: float, window: float, t1: float) -> float:
    """Jump time in [0, window] given one jump happened, inverse-CDF sampled."""
    span = -np.expm1(-window / t1)
    return -t1 * np.log1p(-u * span)


def _acquire_iq(
    cfg: ChannelConfig,
    demod_cfg: DemodConfig,
    state: QubitState,
    window: float,
    gen,
    qubit: QubitParams,
):
    """One acquisition: returns (IQPoint, state after the window)."""
    pulse = _readout_pulse(window, cfg.f_if, demod_cfg.sample_rate)
    dcfg = demod_cfg if demod_cfg.window == window else replace(demod_cfg, window=window)
    if not cfg.mid_readout_jumps:
        pair = transmit(cfg, state, pulse, gen)
        iq = demodulate(pair, dcfg)
        return iq, evolve(state, window, qubit, gen)

    # Mid-window jump mode: draw the transition and splice the two
    # steady-state signals at the jump sample.
    p_ge, p_eg = transition_probs(window, qubit)
    p_flip = p_eg if state is QubitState.E else p_ge
    u_flip = gen.random()
    u_time = gen.random()
    if u_flip >= p_flip:
        pair = transmit(cfg, state, pulse, gen)
        return demodulate(pair, dcfg), state
    tau = _truncated_exp_jump(u_time, window, qubit.t1)
    k_star = min(int(tau * dcfg.sample_rate), dcfg.window_samples)
    after = state.flipped()
    clean_a = rotated_signal(cfg, state, pulse)
    clean_b = rotated_signal(cfg, after, pulse)
    clean = np.concatenate([clean_a[:k_star], clean_b[k_star:]])
    sig = np.concatenate([np.zeros(cfg.cable_delay), clean])
    if cfg.noise_sigma > 0:
        sig = sig + cfg.noise_sigma * gen.standard_normal(sig.size)
    pair = BranchPair(
        SampleStream(sig, pulse.sample_rate), SampleStream(pulse.samples, pulse.sample_rate)
    )
    return demodulate(pair, dcfg), after


def execute_shot(
    program,
    qubit: QubitParams,
    channel_cfg: ChannelConfig,
    demod_cfg: DemodConfig,
    disc: Discriminant,
    latency: LatencyModel,
    rng,
) -> ShotRecord:
    """Run one timed shot of `program` and record everything observable.

    The initial state is sampled thermally; the state relaxes across every
    gap in the schedule (acquisition windows, the decision latency, waits
    and pulse durations). A pi-pulse Play flips the state at the end of its
    slot, after relaxation over the pulse duration.
    """
    gen = as_generator(rng)
    schedule = validate(program, latency, qubit)

    state = sample_thermal(qubit, gen)
    initial = state
    decision: QubitState | None = None
    acquisitions: list[AcquisitionResult] = []
    pi_applied = False
    timeline: list[tuple[str, float, float]] = []

    t_now = 0

    def advance_to(t_ns: int):
        nonlocal state, t_now
        if t_ns > t_now:
            state = evolve(state, (t_ns - t_now) / 1e9, qubit, gen)
            t_now = t_ns

    # The branch path is fixed by the decision of the preceding acquire;
    # replay events chronologically along that path.
    pending = sorted(schedule.events, key=lambda ev: ev.start_ns)
    for ev in pending:
        if ev.branch is not None:
            taken = "e" if decision is QubitState.E else "g"
            if decision is None or ev.branch != taken:
                continue
        timeline.append((ev.name, ev.start, ev.end))
        if ev.name == "acquire":
            advance_to(ev.start_ns)
            true_state = state
            iq, state = _acquire_iq(
                channel_cfg, demod_cfg, state, ev.instruction.window, gen, qubit
            )
            t_now = ev.end_ns
            verdict = classify(disc, iq)
            decision = verdict
            acquisitions.append(AcquisitionResult(true_state, iq, verdict))
        elif ev.name == "play:pi":
            advance_to(ev.end_ns)
            state = apply_pi_pulse(state, qubit, gen)
            pi_applied = True
        elif ev.name.startswith("play"):
            advance_to(ev.end_ns)
        # waits and the latency gap are plain time; advance lazily

    advance_to(schedule.duration_ns)

    first = acquisitions[0] if acquisitions else None
    return ShotRecord(
        initial_state=initial,
        iq=None if first is None else first.iq,
        decision=None if first is None else first.decision,
        pi_applied=pi_applied,
        final_state=state,
        timeline=tuple(timeline),
        acquisitions=tuple(acquisitions),
    )


# -- wire format ---------------------------------------------------------


def _shape_to_dict(shape: PulseShape) -> dict:
    return {
        "frequency_hz": shape.frequency,
        "phase_rad": shape.phase,
        "amplitude": shape.amplitude,
        "duration_ns": round(shape.duration * 1e9),
        "envelope": shape.envelope,
        "rise_ns": round(shape.rise * 1e9),
    }


def _shape_from_dict(data: dict) -> PulseShape:
    return PulseShape(
        frequency=float(data["frequency_hz"]),
        phase=float(data.get("phase_rad", 0.0)),
        amplitude=float(data["amplitude"]),
        duration=float(data["duration_ns"]) / 1e9,
        envelope=data.get("envelope", "rectangular"),
        rise=float(data.get("rise_ns", 0)) / 1e9,
    )


def _instruction_to_dict(instr: Instruction) -> dict:
    if isinstance(instr, Acquire):
        return {"op": "acquire", "window_ns": round(instr.window * 1e9)}
    if isinstance(instr, Wait):
        return {"op": "wait", "duration_ns": round(instr.duration * 1e9)}
    if isinstance(instr, Play):
        out: dict = {"op": "play", "channel": instr.channel}
        if instr.pi:
            out["pi"] = True
        if instr.shape is not None:
            out["shape"] = _shape_to_dict(instr.shape)
        return out
    if isinstance(instr, BranchOnState):
        return {
            "op": "branch",
            "if_e": [_instruction_to_dict(i) for i in instr.if_e],
            "if_g": [_instruction_to_dict(i) for i in instr.if_g],
        }
    raise ProgramError(f"cannot serialize {type(instr).__name__}")


def _instruction_from_dict(data: dict) -> Instruction:
    op = data.get("op")
    if op == "acquire":
        return Acquire(window=float(data["window_ns"]) / 1e9)
    if op == "wait":
        return Wait(duration=float(data["duration_ns"]) / 1e9)
    if op == "play":
        shape = _shape_from_dict(data["shape"]) if "shape" in data else None
        return Play(channel=data["channel"], shape=shape, pi=bool(data.get("pi", False)))
    if op == "branch":
        return BranchOnState(
            if_e=tuple(_instruction_from_dict(d) for d in data.get("if_e", [])),
            if_g=tuple(_instruction_from_dict(d) for d in data.get("if_g", [])),
        )
    raise ProgramError(f"unknown instruction op {op!r}")


def program_to_json(program) -> str:
    return json.dumps([_instruction_to_dict(i) for i in program])


def program_from_json(text: str):
    data = json.loads(text)
    if not isinstance(data, list):
        raise ProgramError("program JSON must be a list of instructions")
    return tuple(_instruction_from_dict(d) for d in data)

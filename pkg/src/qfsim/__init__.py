"""Sample-accurate simulator of an FPGA qubit-readout platform.

Pipeline: intermediate-frequency pulse synthesis and 8x rate conversion
(dsp), a stochastic two-level qubit (physics), the dispersive measurement
channel (channel), shift-based IQ demodulation (demod), linear-discriminant
state estimation (discriminate), latency-budgeted conditional sequencing
(sequencer), and a deterministic batched Monte Carlo executor (engine)
behind the qfsim CLI (cli).
"""
from ._backend import available_backends, backend_name
from .channel import ChannelConfig, blob_model, noise_sigma_for_error, transmit
from .demod import (
    BranchPair,
    DemodConfig,
    IQAccumulator,
    IQPoint,
    calibrate_delay,
    demodulate,
    phase_amplitude,
    quarter_period_samples,
)
from .discriminate import (
    BlobModel,
    Discriminant,
    bayes_error,
    classify,
    estimate_populations,
    train_lda,
)
from .dsp import (
    CONVERTER_RATE,
    PROCESSING_RATE,
    PulseShape,
    RateConverter,
    SampleStream,
    decimate,
    design_rate_converter,
    interpolate,
    synth_pulse,
)
from .physics import (
    QubitParams,
    QubitState,
    RngStream,
    apply_pi_pulse,
    effective_temperature,
    evolve,
    sample_thermal,
    thermal_population,
)
from .sequencer import (
    Acquire,
    BranchOnState,
    LatencyModel,
    Play,
    ShotRecord,
    Wait,
    active_reset_program,
    execute_shot,
    platform_latency,
    program_from_json,
    program_to_json,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Acquire",
    "BlobModel",
    "BranchOnState",
    "BranchPair",
    "ChannelConfig",
    "CONVERTER_RATE",
    "DemodConfig",
    "Discriminant",
    "IQAccumulator",
    "IQPoint",
    "LatencyModel",
    "Play",
    "PROCESSING_RATE",
    "PulseShape",
    "QubitParams",
    "QubitState",
    "RateConverter",
    "RngStream",
    "SampleStream",
    "ShotRecord",
    "Wait",
    "active_reset_program",
    "apply_pi_pulse",
    "available_backends",
    "backend_name",
    "bayes_error",
    "blob_model",
    "calibrate_delay",
    "classify",
    "decimate",
    "demodulate",
    "design_rate_converter",
    "effective_temperature",
    "estimate_populations",
    "evolve",
    "execute_shot",
    "interpolate",
    "noise_sigma_for_error",
    "phase_amplitude",
    "platform_latency",
    "program_from_json",
    "program_to_json",
    "quarter_period_samples",
    "sample_thermal",
    "synth_pulse",
    "thermal_population",
    "train_lda",
    "transmit",
    "validate",
]

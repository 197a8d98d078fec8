import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qfsim import engine
from qfsim.channel import ChannelConfig, blob_model, demod_config_for, noise_sigma_for_error
from qfsim.discriminate import train_lda_arrays
from qfsim.dsp import PulseShape
from qfsim.physics import QubitParams
from qfsim.sequencer import LatencyModel

WINDOW = 800e-9
F_IF = 62.5e6


@pytest.fixture(scope="session")
def readout_shape():
    return PulseShape(frequency=F_IF, phase=0.0, amplitude=1.0, duration=WINDOW)


@pytest.fixture(scope="session")
def default_qubit():
    return QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117, pi_error=1e-3, pi_duration=250e-9)


@pytest.fixture(scope="session")
def default_channel(readout_shape):
    base = ChannelConfig(
        t_g=0.7 * np.exp(-1j * np.pi / 8),
        t_e=0.7 * np.exp(1j * np.pi / 8),
        f_if=F_IF,
        cable_delay=5,
    )
    sigma = noise_sigma_for_error(base, readout_shape, WINDOW)
    return replace(base, noise_sigma=sigma)


@pytest.fixture(scope="session")
def default_demod(default_channel, readout_shape):
    return demod_config_for(default_channel, readout_shape, WINDOW)


@pytest.fixture(scope="session")
def thermal_blob(default_channel, readout_shape, default_qubit):
    return blob_model(
        default_channel, readout_shape, WINDOW, prior_e=default_qubit.p1_eq
    )


@pytest.fixture(scope="session")
def calibration_blob(default_channel, readout_shape):
    return blob_model(default_channel, readout_shape, WINDOW, prior_e=0.5)


@pytest.fixture(scope="session")
def trained_disc(default_qubit, default_channel, default_demod):
    """Thermal-prior discriminant trained on a modest calibration run."""
    cal = engine.run_calibration(
        default_qubit, default_channel, default_demod, 40_000, seed=2024
    )
    return train_lda_arrays(
        cal.iq_i,
        cal.iq_q,
        cal.labels,
        priors=(1.0 - default_qubit.p1_eq, default_qubit.p1_eq),
    )


@pytest.fixture(scope="session")
def default_latency():
    return LatencyModel()

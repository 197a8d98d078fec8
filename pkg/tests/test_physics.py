import math

import numpy as np
import pytest

from qfsim.errors import ConfigurationError
from qfsim.physics import (
    QubitParams,
    QubitState,
    RngStream,
    apply_pi_pulse,
    effective_temperature,
    evolve,
    sample_thermal,
    thermal_population,
    transition_matrix,
)


def test_thermal_population_reference_points():
    assert thermal_population(1.26e9, 30.0e-3) == pytest.approx(0.117, abs=1e-3)
    assert thermal_population(1.26e9, 11.9e-3) == pytest.approx(0.006, abs=5e-4)


def test_thermal_population_equal_occupation_limit():
    assert thermal_population(1.26e9, 1e9) == pytest.approx(0.5, rel=1e-9)


def test_thermal_population_monotonic_in_temperature_and_frequency():
    temps = np.linspace(5e-3, 200e-3, 40)
    pops = [thermal_population(1.26e9, t) for t in temps]
    assert all(a < b for a, b in zip(pops, pops[1:]))
    freqs = np.linspace(0.5e9, 5e9, 40)
    pops_f = [thermal_population(f, 30e-3) for f in freqs]
    assert all(a > b for a, b in zip(pops_f, pops_f[1:]))


def test_effective_temperature_reference_points():
    assert effective_temperature(0.117, 1.26e9) * 1e3 == pytest.approx(30.0, abs=0.1)
    assert effective_temperature(0.006, 1.26e9) * 1e3 == pytest.approx(11.9, abs=0.1)


@pytest.mark.parametrize("p1", [1e-6, 0.006, 0.117, 0.25, 0.4999])
def test_population_temperature_round_trip(p1):
    t = effective_temperature(p1, 1.26e9)
    assert thermal_population(1.26e9, t) == pytest.approx(p1, rel=1e-12)


def test_temperature_domain_errors():
    with pytest.raises(ValueError):
        thermal_population(1.26e9, 0.0)
    with pytest.raises(ValueError):
        thermal_population(1.26e9, -1.0)
    for bad in (0.0, 0.5, 0.7, 1.0):
        with pytest.raises(ValueError):
            effective_temperature(bad, 1.26e9)


def test_qubit_params_validation():
    with pytest.raises(ConfigurationError):
        QubitParams(f01=0.0, t1=80e-6, p1_eq=0.1)
    with pytest.raises(ConfigurationError):
        QubitParams(f01=1e9, t1=0.0, p1_eq=0.1)
    with pytest.raises(ConfigurationError):
        QubitParams(f01=1e9, t1=80e-6, p1_eq=0.5)
    # infinite T1 is a valid idealization
    QubitParams(f01=1e9, t1=math.inf, p1_eq=0.1)


def test_sample_thermal_zero_population_always_ground():
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.0)
    gen = RngStream(1, 0).generator()
    assert all(sample_thermal(params, gen) is QubitState.G for _ in range(500))


@pytest.mark.parametrize("p1_eq", [0.117, 0.49])
def test_sample_thermal_fraction(p1_eq):
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=p1_eq)
    gen = RngStream(7, 3).generator()
    n = 200_000
    frac = sum(sample_thermal(params, gen) is QubitState.E for _ in range(n)) / n
    assert frac == pytest.approx(p1_eq, abs=3 * math.sqrt(p1_eq * (1 - p1_eq) / n))


def test_evolve_dt_zero_is_identity():
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117)
    gen = RngStream(3, 0).generator()
    for state in (QubitState.G, QubitState.E):
        assert evolve(state, 0.0, params, gen) is state


def test_evolve_negative_dt_rejected():
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117)
    with pytest.raises(ValueError):
        evolve(QubitState.G, -1e-9, params, RngStream(3, 0).generator())


def test_evolve_half_life_identity():
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.0)
    m = transition_matrix(params.t1 * math.log(2.0), params)
    assert m[1, 1] == pytest.approx(0.5, rel=1e-12)  # still excited
    gen = RngStream(11, 0).generator()
    n = 50_000
    survived = sum(
        evolve(QubitState.E, params.t1 * math.log(2.0), params, gen) is QubitState.E
        for _ in range(n)
    )
    assert survived / n == pytest.approx(0.5, abs=3 * math.sqrt(0.25 / n))


def test_transition_matrix_is_stochastic():
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117)
    for dt in (0.0, 1e-9, 800e-9, 80e-6, 1e-3):
        m = transition_matrix(dt, params)
        assert np.all(m >= 0.0) and np.all(m <= 1.0)
        assert np.max(np.abs(m.sum(axis=1) - 1.0)) <= 2**-52


def test_transition_matrix_semigroup():
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117)
    rng = np.random.default_rng(5)
    for _ in range(50):
        dt1, dt2 = rng.uniform(0.0, 5e-5, size=2)
        lhs = transition_matrix(dt1, params) @ transition_matrix(dt2, params)
        rhs = transition_matrix(dt1 + dt2, params)
        assert np.allclose(lhs, rhs, rtol=0.0, atol=1e-12)


def test_evolve_stationarity():
    # an equilibrium ensemble keeps its excited fraction after any interval
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117)
    gen = RngStream(21, 0).generator()
    n = 100_000
    for dt in (800e-9, 20e-6, 200e-6):
        excited = 0
        for _ in range(n):
            state = sample_thermal(params, gen)
            excited += evolve(state, dt, params, gen) is QubitState.E
        sigma = math.sqrt(params.p1_eq * (1 - params.p1_eq) / n)
        assert excited / n == pytest.approx(params.p1_eq, abs=3 * sigma)


def test_apply_pi_pulse_perfect_flip():
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117, pi_error=0.0)
    gen = RngStream(9, 0).generator()
    assert apply_pi_pulse(QubitState.E, params, gen) is QubitState.G
    assert apply_pi_pulse(QubitState.G, params, gen) is QubitState.E


def test_apply_pi_pulse_failure_rate():
    params = QubitParams(f01=1.26e9, t1=80e-6, p1_eq=0.117, pi_error=1e-3)
    gen = RngStream(13, 0).generator()
    n = 200_000
    grounded = sum(
        apply_pi_pulse(QubitState.E, params, gen) is QubitState.G for _ in range(n)
    )
    assert grounded / n == pytest.approx(0.999, abs=3 * math.sqrt(1e-3 * 0.999 / n))


def test_rng_stream_reproducible_and_order_independent():
    a1 = RngStream(99, 0).generator().random(8)
    b1 = RngStream(99, 1).generator().random(8)
    # consume in the opposite order: per-stream sequences are unchanged
    b2 = RngStream(99, 1).generator().random(8)
    a2 = RngStream(99, 0).generator().random(8)
    assert np.array_equal(a1, a2)
    assert np.array_equal(b1, b2)
    assert not np.array_equal(a1, b1)


def test_rng_stream_validation():
    with pytest.raises(ConfigurationError):
        RngStream(-1, 0)
    with pytest.raises(ConfigurationError):
        RngStream(0, 2**64)

import numpy as np
import pytest

from qfsim._backend import available_backends, backend_name, get_kernels
from qfsim import _kernels_np

needs_c = pytest.mark.skipif(
    "c" not in available_backends(), reason="compiled kernel not built"
)


def sample_inputs(seed=0, n_shots=64, n=400):
    rng = np.random.default_rng(seed)
    tmpl_g = rng.standard_normal(n)
    tmpl_e = rng.standard_normal(n)
    states = (rng.random(n_shots) < 0.3).astype(np.uint8)
    noise = rng.standard_normal((n_shots, n))
    ref_i = np.cos(np.pi * np.arange(n) / 4)
    ref_q = np.cos(np.pi * (np.arange(n) + 2) / 4)
    return tmpl_g, tmpl_e, states, noise, ref_i, ref_q


def test_backend_selection():
    assert backend_name() in ("c", "numpy")
    assert get_kernels("numpy") is _kernels_np
    with pytest.raises(ValueError):
        get_kernels("fortran")


def test_numpy_iq_project_matches_python_loop():
    tmpl_g, _, _, noise, ref_i, ref_q = sample_inputs(n_shots=8)
    sig = noise + tmpl_g
    i_arr, q_arr = _kernels_np.iq_project(sig, ref_i, ref_q)
    for k in range(sig.shape[0]):
        acc_i = 0.0
        acc_q = 0.0
        for x, ri, rq in zip(sig[k].tolist(), ref_i.tolist(), ref_q.tolist()):
            acc_i += x * ri
            acc_q += x * rq
        assert i_arr[k] == acc_i
        assert q_arr[k] == acc_q


@needs_c
def test_c_iq_project_bit_identical():
    kc = get_kernels("c")
    _, tmpl_e, _, noise, ref_i, ref_q = sample_inputs(seed=1)
    sig = np.ascontiguousarray(noise * 1.7 + tmpl_e)
    i_c, q_c = kc.iq_project(sig, ref_i, ref_q)
    i_n, q_n = _kernels_np.iq_project(sig, ref_i, ref_q)
    assert np.array_equal(i_c, i_n)
    assert np.array_equal(q_c, q_n)


@needs_c
def test_c_shot_iq_bit_identical():
    kc = get_kernels("c")
    tmpl_g, tmpl_e, states, noise, ref_i, ref_q = sample_inputs(seed=2, n_shots=257)
    for sigma in (0.0, 1.4707):
        out_c = kc.shot_iq(tmpl_g, tmpl_e, states, noise, sigma, ref_i, ref_q)
        out_n = _kernels_np.shot_iq(tmpl_g, tmpl_e, states, noise, sigma, ref_i, ref_q)
        assert np.array_equal(out_c[0], out_n[0])
        assert np.array_equal(out_c[1], out_n[1])


@needs_c
def test_c_kernel_accepts_readonly_views():
    kc = get_kernels("c")
    tmpl_g, tmpl_e, states, noise, ref_i, ref_q = sample_inputs(seed=3, n_shots=16)
    for arr in (tmpl_g, tmpl_e, states, noise, ref_i, ref_q):
        arr.flags.writeable = False
    out = kc.shot_iq(tmpl_g, tmpl_e, states, noise, 1.0, ref_i, ref_q)
    assert out[0].shape == (16,)


def test_shot_iq_consistent_with_explicit_signal():
    tmpl_g, tmpl_e, states, noise, ref_i, ref_q = sample_inputs(seed=4, n_shots=32)
    sigma = 0.9
    fused_i, fused_q = _kernels_np.shot_iq(tmpl_g, tmpl_e, states, noise, sigma, ref_i, ref_q)
    tmpl = np.where(states[:, None], tmpl_e, tmpl_g)
    plain_i, plain_q = _kernels_np.iq_project(tmpl + sigma * noise, ref_i, ref_q)
    assert np.array_equal(fused_i, plain_i)
    assert np.array_equal(fused_q, plain_q)

"""Pure-numpy reference implementation of the hot per-shot kernels.

Both kernels accumulate the demodulation sums in ascending sample order
(np.cumsum is a strict left-to-right accumulation), so their results are
bit-identical to the compiled C loops in `_kernel.pyx` and to a plain
per-sample Python accumulation. Keep any change mirrored there.
"""
from __future__ import annotations

import numpy as np


def iq_project(sig: np.ndarray, ref_i: np.ndarray, ref_q: np.ndarray):
    """Demodulate a block of aligned signal windows against two references.

    sig: (n_shots, n_window), ref_i / ref_q: (n_window,)
    Returns (I, Q) arrays of shape (n_shots,), each the ascending-order sum
    of the pointwise products.
    """
    sig = np.atleast_2d(np.asarray(sig, dtype=np.float64))
    i_acc = np.cumsum(sig * ref_i, axis=1)[:, -1]
    q_acc = np.cumsum(sig * ref_q, axis=1)[:, -1]
    return i_acc, q_acc


def shot_iq(
    tmpl_g: np.ndarray,
    tmpl_e: np.ndarray,
    states: np.ndarray,
    noise: np.ndarray,
    noise_sigma: float,
    ref_i: np.ndarray,
    ref_q: np.ndarray,
):
    """Fused readout kernel: noisy state-dependent signal -> (I, Q) per shot.

    Shot k's signal window is tmpl[states[k]] + noise_sigma * noise[k], and
    is demodulated as in iq_project without being returned.
    """
    states = np.asarray(states, dtype=np.uint8)
    tmpl = np.where(states[:, None], tmpl_e[None, :], tmpl_g[None, :])
    sig = tmpl + noise_sigma * noise
    return iq_project(sig, ref_i, ref_q)

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-shot readout kernels.

Single fused pass per shot: build the noisy signal sample, multiply with
both references, accumulate in ascending sample order. Arithmetic order
matches `_kernels_np.py` exactly (and the build disables FMA contraction),
so results are bit-identical to the numpy fallback.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def iq_project(const double[:, ::1] sig, const double[::1] ref_i, const double[::1] ref_q):
    cdef Py_ssize_t n_shots = sig.shape[0]
    cdef Py_ssize_t n = sig.shape[1]
    cdef cnp.ndarray[double, ndim=1] i_out = np.empty(n_shots)
    cdef cnp.ndarray[double, ndim=1] q_out = np.empty(n_shots)
    cdef double[::1] iv = i_out
    cdef double[::1] qv = q_out
    cdef Py_ssize_t s, k
    cdef double acc_i, acc_q, x
    with nogil:
        for s in range(n_shots):
            acc_i = 0.0
            acc_q = 0.0
            for k in range(n):
                x = sig[s, k]
                acc_i = acc_i + x * ref_i[k]
                acc_q = acc_q + x * ref_q[k]
            iv[s] = acc_i
            qv[s] = acc_q
    return i_out, q_out


def shot_iq(
    const double[::1] tmpl_g,
    const double[::1] tmpl_e,
    const unsigned char[::1] states,
    const double[:, ::1] noise,
    double noise_sigma,
    const double[::1] ref_i,
    const double[::1] ref_q,
):
    cdef Py_ssize_t n_shots = states.shape[0]
    cdef Py_ssize_t n = tmpl_g.shape[0]
    cdef cnp.ndarray[double, ndim=1] i_out = np.empty(n_shots)
    cdef cnp.ndarray[double, ndim=1] q_out = np.empty(n_shots)
    cdef double[::1] iv = i_out
    cdef double[::1] qv = q_out
    cdef Py_ssize_t s, k
    cdef double acc_i, acc_q, x
    with nogil:
        for s in range(n_shots):
            acc_i = 0.0
            acc_q = 0.0
            if states[s]:
                for k in range(n):
                    x = tmpl_e[k] + noise_sigma * noise[s, k]
                    acc_i = acc_i + x * ref_i[k]
                    acc_q = acc_q + x * ref_q[k]
            else:
                for k in range(n):
                    x = tmpl_g[k] + noise_sigma * noise[s, k]
                    acc_i = acc_i + x * ref_i[k]
                    acc_q = acc_q + x * ref_q[k]
            iv[s] = acc_i
            qv[s] = acc_q
    return i_out, q_out

"""Independent oracles the test suite checks the implementation against.

Everything here is deliberately written from first principles (grids,
direct enumeration, plain transition matrices) rather than by calling the
code paths under test.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from qfsim.discriminate import BlobModel, Discriminant
from qfsim.physics import QubitParams


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 1e-300) / n)


def bayes_error_bruteforce(m: BlobModel, half_width_sigmas: float = 9.0, step: float = 0.004):
    """2-D midpoint-rule integral of min(prior_g * pdf_g, prior_e * pdf_e).

    step is in units of sigma; 0.004 keeps the quadrature error well below
    1e-6 for the geometries used in the tests.
    """
    s = m.sigma
    mus = np.array([[m.mu_g.i, m.mu_g.q], [m.mu_e.i, m.mu_e.q]])
    lo = mus.min(axis=0) - half_width_sigmas * s
    hi = mus.max(axis=0) + half_width_sigmas * s
    h = step * s
    x = np.arange(lo[0] + h / 2, hi[0], h)
    y = np.arange(lo[1] + h / 2, hi[1], h)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    norm = 1.0 / (2.0 * math.pi * s * s)
    pdf_g = norm * np.exp(-((xx - mus[0, 0]) ** 2 + (yy - mus[0, 1]) ** 2) / (2 * s * s))
    pdf_e = norm * np.exp(-((xx - mus[1, 0]) ** 2 + (yy - mus[1, 1]) ** 2) / (2 * s * s))
    integrand = np.minimum((1.0 - m.prior_e) * pdf_g, m.prior_e * pdf_e)
    return float(integrand.sum() * h * h)


def classifier_class_errors(disc: Discriminant, m: BlobModel) -> tuple[float, float]:
    """(false-excited rate given g, false-ground rate given e), closed form.

    The linear score of an isotropic Gaussian input is itself Gaussian, so
    each error rate is one normal CDF evaluation.
    """
    w = np.array(disc.w)
    scale = m.sigma * math.hypot(*disc.w)
    score_g = w @ [m.mu_g.i, m.mu_g.q] + disc.b
    score_e = w @ [m.mu_e.i, m.mu_e.q] + disc.b
    eps_false_e = float(ndtr(score_g / scale))  # P(score > 0 | g)
    delta_false_g = float(ndtr(-score_e / scale))  # P(score <= 0 | e)
    return eps_false_e, delta_false_g


def two_level_matrix(dt: float, t1: float, p1_eq: float) -> np.ndarray:
    relax = 1.0 - math.exp(-dt / t1)
    return np.array(
        [
            [1.0 - p1_eq * relax, p1_eq * relax],
            [(1.0 - p1_eq) * relax, 1.0 - (1.0 - p1_eq) * relax],
        ]
    )


def reset_path_probability(
    qubit: QubitParams,
    eps_false_e: float,
    delta_false_g: float,
    window: float,
    gap: float,
) -> float:
    """Closed-form excited population at the verification readout.

    Enumerates the eight discrete paths (initial state x detection x pi
    success) of the reset protocol: the decision comes from the state
    entering the readout, the state then relaxes across the window and the
    latency + pi slot, and a detected |1> triggers a flip at the join.
    """
    t_join = two_level_matrix(window, qubit.t1, qubit.p1_eq) @ two_level_matrix(
        gap, qubit.t1, qubit.p1_eq
    )
    p_after = 0.0
    for s0, weight in ((0, 1.0 - qubit.p1_eq), (1, qubit.p1_eq)):
        p_detect_e = (1.0 - delta_false_g) if s0 == 1 else eps_false_e
        p_join_e = t_join[s0, 1]
        # detected |1>: pi pulse fires, flipping unless it fails
        p_after += weight * p_detect_e * (
            qubit.pi_error * p_join_e + (1.0 - qubit.pi_error) * (1.0 - p_join_e)
        )
        # detected |0>: nothing played
        p_after += weight * (1.0 - p_detect_e) * p_join_e
    return p_after

"""State discrimination in the IQ plane.

A linear boundary splits the plane into a ground and an excited region.
For equal isotropic Gaussian clusters this is the Bayes-optimal classifier,
so the module also provides the closed-form Bayes error and a
mixture-weight population estimator that corrects for blob overlap.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .demod import IQPoint
from .errors import TrainingError
from .physics import QubitState, as_generator


@dataclass(frozen=True)
class Discriminant:
    """Linear decision boundary: label_positive wherever w . x + b > 0.

    Scaling (w, b) by any positive constant leaves every decision
    unchanged. A point exactly on the boundary is assigned the ground
    state, so a boundary shot never triggers a spurious pi pulse.
    """

    w: tuple[float, float]
    b: float
    label_positive: QubitState = QubitState.E

    def __post_init__(self):
        if self.w == (0.0, 0.0):
            raise TrainingError("w must be non-zero")

    def score(self, p: IQPoint) -> float:
        return self.w[0] * p.i + self.w[1] * p.q + self.b


@dataclass(frozen=True)
class BlobModel:
    """Two isotropic Gaussian IQ clusters with a shared per-axis sigma."""

    mu_g: IQPoint
    mu_e: IQPoint
    sigma: float
    prior_e: float = 0.5

    def __post_init__(self):
        if self.sigma < 0:
            raise TrainingError(f"sigma must be non-negative, got {self.sigma}")
        if (self.mu_g.i, self.mu_g.q) == (self.mu_e.i, self.mu_e.q):
            raise TrainingError("mu_g and mu_e must differ")
        if not 0.0 <= self.prior_e <= 1.0:
            raise TrainingError(f"prior_e must be in [0, 1], got {self.prior_e}")

    @property
    def separation(self) -> float:
        return math.hypot(self.mu_e.i - self.mu_g.i, self.mu_e.q - self.mu_g.q)


def train_lda(
    shots,
    priors: tuple[float, float] | None = None,
    intercept: str = "prior",
) -> Discriminant:
    """Fit a linear discriminant to labeled (IQPoint, QubitState) shots.

    w is pooled-covariance^-1 (mean_e - mean_g). The intercept places the
    boundary at the class midpoint plus, in "prior" mode, the log-odds
    shift that makes the rule Bayes-optimal for the class weights (taken
    from `priors` when given, else from the label counts). "midpoint"
    drops the log-odds term; useful for comparison on balanced data.
    """
    pts = np.array([(p.i, p.q) for p, _ in shots])
    labels = np.array([s is QubitState.E for _, s in shots], dtype=bool)
    return train_lda_arrays(pts[:, 0], pts[:, 1], labels, priors=priors, intercept=intercept)


def train_lda_arrays(
    i: np.ndarray,
    q: np.ndarray,
    excited: np.ndarray,
    priors: tuple[float, float] | None = None,
    intercept: str = "prior",
) -> Discriminant:
    """Array form of train_lda: I/Q components plus a boolean excited mask."""
    if intercept not in ("prior", "midpoint"):
        raise TrainingError(f"unknown intercept mode {intercept!r}")
    pts = np.column_stack([np.asarray(i, dtype=np.float64), np.asarray(q, dtype=np.float64)])
    labels = np.asarray(excited).astype(bool)
    n_e = int(labels.sum())
    n_g = labels.size - n_e
    if n_g < 2 or n_e < 2:
        raise TrainingError(f"need at least 2 shots per state, got g={n_g}, e={n_e}")

    x_g = pts[~labels]
    x_e = pts[labels]
    mean_g = x_g.mean(axis=0)
    mean_e = x_e.mean(axis=0)
    diff = mean_e - mean_g
    if not diff.any():
        raise TrainingError("class means coincide")
    centered_g = x_g - mean_g
    centered_e = x_e - mean_e
    pooled = (centered_g.T @ centered_g + centered_e.T @ centered_e) / (labels.size - 2)

    sep2 = float(diff @ diff)
    if float(np.abs(pooled).max()) <= 1e-24 * sep2:
        # Noise-free limit: every point sits on its class mean, so the
        # boundary degenerates to the perpendicular bisector.
        w = diff / sep2
    else:
        det = pooled[0, 0] * pooled[1, 1] - pooled[0, 1] * pooled[1, 0]
        scale = float(np.abs(pooled).max()) ** 2
        if not math.isfinite(det) or abs(det) <= 1e-12 * max(scale, 1e-300):
            raise TrainingError("pooled covariance is singular (collinear data)")
        w = np.linalg.solve(pooled, mean_e - mean_g)

    b = -float(w @ (mean_g + mean_e)) / 2.0
    if intercept == "prior":
        if priors is not None:
            prior_g, prior_e = priors
            if prior_g <= 0 or prior_e <= 0:
                raise TrainingError("priors must be positive")
            b += math.log(prior_e / prior_g)
        else:
            b += math.log(n_e / n_g)
    return Discriminant(w=(float(w[0]), float(w[1])), b=b)


def classify(d: Discriminant, p: IQPoint) -> QubitState:
    """Assign a state to one IQ point; exact ties go to the ground state."""
    score = d.score(p)
    if score == 0.0:
        return QubitState.G
    if score > 0.0:
        return d.label_positive
    return QubitState.G if d.label_positive is QubitState.E else QubitState.E


def classify_batch(d: Discriminant, i: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Vectorized classify: uint8 array, 1 where the excited state is assigned."""
    score = d.w[0] * np.asarray(i) + d.w[1] * np.asarray(q) + d.b
    if d.label_positive is QubitState.E:
        excited = score > 0.0  # ties (== 0) go to ground
    else:
        excited = score < 0.0
    return excited.astype(np.uint8)


def bayes_error(m: BlobModel) -> float:
    """Minimum achievable misclassification probability for the model.

    Reduces to 1-D along the inter-mean axis: with s = d/sigma and
    L = ln(prior_g/prior_e), the optimal threshold sits at s/2 + L/s from
    the ground mean and the error is
    prior_g Phi(-s/2 - L/s) + prior_e Phi(-s/2 + L/s).
    """
    if m.prior_e == 0.0 or m.prior_e == 1.0:
        return 0.0
    prior_g = 1.0 - m.prior_e
    if m.sigma == 0.0:
        return 0.0
    s = m.separation / m.sigma
    shift = math.log(prior_g / m.prior_e) / s
    return float(prior_g * ndtr(-s / 2.0 - shift) + m.prior_e * ndtr(-s / 2.0 + shift))


def estimate_populations(points, m: BlobModel, tol: float = 1e-10) -> tuple[float, float]:
    """(p_g, p_e) via a one-parameter Gaussian-mixture weight fit.

    Means and sigma stay fixed at the model values; only the excited-state
    weight is iterated (closed-form EM), which corrects for blob overlap
    that plain classification counts cannot.
    """
    pts = np.asarray(
        [(p.i, p.q) for p in points] if not isinstance(points, np.ndarray) else points,
        dtype=np.float64,
    )
    if pts.size == 0:
        raise TrainingError("cannot estimate populations from an empty set")
    pts = pts.reshape(-1, 2)
    if m.sigma == 0.0:
        at_e = (pts[:, 0] == m.mu_e.i) & (pts[:, 1] == m.mu_e.q)
        p_e = float(at_e.mean())
        return 1.0 - p_e, p_e

    inv2s2 = 1.0 / (2.0 * m.sigma**2)
    d2_g = (pts[:, 0] - m.mu_g.i) ** 2 + (pts[:, 1] - m.mu_g.q) ** 2
    d2_e = (pts[:, 0] - m.mu_e.i) ** 2 + (pts[:, 1] - m.mu_e.q) ** 2
    # log phi_e - log phi_g; shared normalization cancels in the ratio
    log_ratio = (d2_g - d2_e) * inv2s2

    w = 0.5
    for _ in range(10000):
        # responsibilities r = w phi_e / (w phi_e + (1-w) phi_g), in log space
        with np.errstate(over="ignore"):
            r = 1.0 / (1.0 + np.exp(np.log1p(-w) - math.log(w) - log_ratio))
        w_new = float(r.mean())
        if abs(w_new - w) <= tol:
            w = w_new
            break
        w = w_new
        if w <= 0.0 or w >= 1.0:
            break
    w = min(max(w, 0.0), 1.0)
    return 1.0 - w, w


def sample_blob(m: BlobModel, n: int, rng, prior_e: float | None = None):
    """Draw labeled IQ samples from the model (labels as uint8, 1 = excited)."""
    gen = as_generator(rng)
    p_e = m.prior_e if prior_e is None else prior_e
    labels = (gen.random(n) < p_e).astype(np.uint8)
    noise = gen.standard_normal((n, 2)) * m.sigma
    mu = np.where(
        labels[:, None],
        np.array([[m.mu_e.i, m.mu_e.q]]),
        np.array([[m.mu_g.i, m.mu_g.q]]),
    )
    return mu + noise, labels


def discriminant_to_json(d: Discriminant) -> str:
    return json.dumps(
        {
            "w": [d.w[0], d.w[1]],
            "b": d.b,
            "positive": "e" if d.label_positive is QubitState.E else "g",
        }
    )


def discriminant_from_json(text: str) -> Discriminant:
    data = json.loads(text)
    return Discriminant(
        w=(float(data["w"][0]), float(data["w"][1])),
        b=float(data["b"]),
        label_positive=QubitState.E if data["positive"] == "e" else QubitState.G,
    )

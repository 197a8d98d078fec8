import json
import math

import numpy as np
import pytest

from oracles import bayes_error_bruteforce
from qfsim.demod import IQPoint
from qfsim.discriminate import (
    BlobModel,
    Discriminant,
    bayes_error,
    classify,
    classify_batch,
    discriminant_from_json,
    discriminant_to_json,
    estimate_populations,
    sample_blob,
    train_lda,
    train_lda_arrays,
)
from qfsim.errors import TrainingError
from qfsim.physics import QubitState, RngStream


def make_blob(d_over_sigma=5.151658607097802, sigma=1.0, prior_e=0.5, angle=0.0):
    d = d_over_sigma * sigma
    dx, dy = d / 2 * math.cos(angle), d / 2 * math.sin(angle)
    return BlobModel(
        mu_g=IQPoint(-dx, -dy), mu_e=IQPoint(dx, dy), sigma=sigma, prior_e=prior_e
    )


# -- training -----------------------------------------------------------------


def test_mirror_symmetric_clusters_give_axis_boundary():
    rng = RngStream(5, 0).generator()
    e_pts = np.column_stack([3.0 + rng.standard_normal(4000), rng.standard_normal(4000)])
    g_pts = np.column_stack([-e_pts[:, 0], e_pts[:, 1]])  # exact mirror about I = 0
    i = np.concatenate([g_pts[:, 0], e_pts[:, 0]])
    q = np.concatenate([g_pts[:, 1], e_pts[:, 1]])
    labels = np.concatenate([np.zeros(4000, bool), np.ones(4000, bool)])
    disc = train_lda_arrays(i, q, labels)
    assert abs(disc.w[1]) <= 1e-9 * abs(disc.w[0])
    assert disc.w[0] > 0
    assert abs(disc.b) <= 1e-9 * abs(disc.w[0]) * 3.0


def test_label_swap_negates_discriminant():
    rng = RngStream(6, 0).generator()
    pts, labels = sample_blob(make_blob(), 2000, rng)
    disc = train_lda_arrays(pts[:, 0], pts[:, 1], labels == 1)
    swapped = train_lda_arrays(pts[:, 0], pts[:, 1], labels == 0)
    ratio = disc.w[0] / swapped.w[0]
    assert ratio < 0
    assert swapped.w[1] * ratio == pytest.approx(disc.w[1], rel=1e-9, abs=1e-12)
    assert swapped.b * ratio == pytest.approx(disc.b, rel=1e-9, abs=1e-12)
    test_pts = pts[:50]
    for row in test_pts:
        p = IQPoint(row[0], row[1])
        assert classify(disc, p) is not classify(swapped, p)


def test_trained_error_close_to_bayes_limit():
    m = make_blob(angle=0.3)
    rng = RngStream(7, 0).generator()
    train_pts, train_labels = sample_blob(m, 100_000, rng)
    disc = train_lda_arrays(train_pts[:, 0], train_pts[:, 1], train_labels == 1)
    test_pts, test_labels = sample_blob(m, 100_000, rng)
    decisions = classify_batch(disc, test_pts[:, 0], test_pts[:, 1])
    err = float((decisions != test_labels).mean())
    assert abs(err - bayes_error(m)) <= 1e-3  # within 0.1 pp


def test_training_data_requirements():
    with pytest.raises(TrainingError):
        train_lda([(IQPoint(0, 0), QubitState.G), (IQPoint(1, 1), QubitState.G)])
    # collinear spread: zero variance perpendicular to the separation axis
    i = np.concatenate([np.full(10, -1.0), np.full(10, 1.0)]) + np.linspace(0, 1e-3, 20)
    q = i * 2.0  # every point on one line, means also on it
    with pytest.raises(TrainingError):
        train_lda_arrays(i, q, np.arange(20) >= 10)


def test_zero_noise_training_falls_back_to_bisector():
    i = np.array([-1.0, -1.0, 1.0, 1.0])
    q = np.array([0.5, 0.5, 1.5, 1.5])
    disc = train_lda_arrays(i, q, np.array([False, False, True, True]), intercept="midpoint")
    assert classify(disc, IQPoint(1.0, 1.5)) is QubitState.E
    assert classify(disc, IQPoint(-1.0, 0.5)) is QubitState.G
    assert classify(disc, IQPoint(0.0, 1.0)) is QubitState.G  # midpoint tie -> ground


def test_priors_must_be_positive():
    rng = RngStream(8, 0).generator()
    pts, labels = sample_blob(make_blob(), 100, rng)
    with pytest.raises(TrainingError):
        train_lda_arrays(pts[:, 0], pts[:, 1], labels == 1, priors=(1.0, 0.0))


# -- classification -----------------------------------------------------------


def test_classify_blob_means():
    m = make_blob()
    disc = Discriminant(w=(1.0, 0.0), b=0.0)
    assert classify(disc, m.mu_e) is QubitState.E
    assert classify(disc, m.mu_g) is QubitState.G


def test_boundary_tie_goes_to_ground():
    disc = Discriminant(w=(1.0, 0.0), b=-1.0)
    assert classify(disc, IQPoint(1.0, 5.0)) is QubitState.G
    assert classify_batch(disc, np.array([1.0]), np.array([5.0]))[0] == 0


def test_per_class_error_of_midpoint_discriminant():
    # balanced-intercept boundary on the 5.1517-separation geometry: 0.5%
    # per class, independent of the test priors
    m = make_blob(prior_e=0.117, angle=1.1)
    disc = Discriminant(
        w=(m.mu_e.i - m.mu_g.i, m.mu_e.q - m.mu_g.q),
        b=-0.5
        * (
            (m.mu_e.i**2 - m.mu_g.i**2) + (m.mu_e.q**2 - m.mu_g.q**2)
        ),
    )
    rng = RngStream(9, 0).generator()
    pts, labels = sample_blob(m, 1_000_000, rng)
    decisions = classify_batch(disc, pts[:, 0], pts[:, 1])
    err_g = float(decisions[labels == 0].mean())
    err_e = float((decisions[labels == 1] == 0).mean())
    assert err_g == pytest.approx(0.005, abs=5e-4)
    assert err_e == pytest.approx(0.005, abs=5e-4)


def test_argmax_invariance_under_positive_scaling():
    disc = Discriminant(w=(0.3, -1.2), b=0.7)
    rng = RngStream(10, 0).generator()
    pts = rng.standard_normal((500, 2)) * 5
    for c in (1e-6, 0.5, 3.0, 1e6):
        scaled = Discriminant(w=(c * disc.w[0], c * disc.w[1]), b=c * disc.b)
        for row in pts[:100]:
            p = IQPoint(row[0], row[1])
            assert classify(disc, p) is classify(scaled, p)
        assert np.array_equal(
            classify_batch(disc, pts[:, 0], pts[:, 1]),
            classify_batch(scaled, pts[:, 0], pts[:, 1]),
        )


def test_rotation_equivariance():
    m = make_blob(prior_e=0.3)
    rng = RngStream(11, 0).generator()
    train_pts, train_labels = sample_blob(m, 20_000, rng)
    test_pts, _ = sample_blob(m, 2_000, rng)
    theta = 0.77
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    disc = train_lda_arrays(train_pts[:, 0], train_pts[:, 1], train_labels == 1)
    train_r = train_pts @ rot.T
    test_r = test_pts @ rot.T
    disc_r = train_lda_arrays(train_r[:, 0], train_r[:, 1], train_labels == 1)
    assert np.array_equal(
        classify_batch(disc, test_pts[:, 0], test_pts[:, 1]),
        classify_batch(disc_r, test_r[:, 0], test_r[:, 1]),
    )


# -- bayes error ---------------------------------------------------------------


def test_bayes_error_reference_value():
    assert bayes_error(make_blob()) == pytest.approx(0.005, abs=1e-5)


def test_bayes_error_degenerate_limits():
    separable = BlobModel(mu_g=IQPoint(-1.0, 0.0), mu_e=IQPoint(1.0, 0.0), sigma=0.0)
    assert bayes_error(separable) == 0.0
    for prior in (0.0, 1.0):
        assert bayes_error(make_blob(prior_e=prior)) == 0.0
    # vanishing separation: the better prior wins
    nearly = BlobModel(
        mu_g=IQPoint(0.0, 0.0), mu_e=IQPoint(1e-12, 0.0), sigma=1.0, prior_e=0.117
    )
    assert bayes_error(nearly) == pytest.approx(0.117, abs=1e-9)


@pytest.mark.parametrize(
    "d_over_sigma,prior_e,angle",
    [
        (5.151658607097802, 0.5, 0.0),
        (5.151658607097802, 0.117, 0.3),
        (3.0, 0.5, 1.0),
        (3.0, 0.2, 0.0),
        (2.0, 0.883, 0.5),
    ],
)
def test_bayes_error_matches_bruteforce_integration(d_over_sigma, prior_e, angle):
    m = make_blob(d_over_sigma=d_over_sigma, prior_e=prior_e, angle=angle, sigma=1.3)
    assert bayes_error(m) == pytest.approx(bayes_error_bruteforce(m), abs=1e-6)


# -- population estimation ------------------------------------------------------


@pytest.mark.parametrize("p_true,tol", [(0.117, 1e-3), (0.006, 5e-4)])
def test_estimate_populations_recovers_truth(p_true, tol):
    m = make_blob(prior_e=p_true)
    rng = RngStream(12, 0).generator()
    pts, _ = sample_blob(m, 1_000_000, rng)
    p_g, p_e = estimate_populations(pts, m)
    assert p_g + p_e == pytest.approx(1.0, abs=1e-12)
    assert p_e == pytest.approx(p_true, abs=tol)


def test_estimate_populations_zero_noise_limit():
    m = BlobModel(mu_g=IQPoint(-2.0, 0.5), mu_e=IQPoint(2.0, 0.5), sigma=0.0)
    pts = np.tile([m.mu_g.i, m.mu_g.q], (100, 1))
    assert estimate_populations(pts, m)[1] == 0.0
    tiny = BlobModel(mu_g=IQPoint(-2.0, 0.5), mu_e=IQPoint(2.0, 0.5), sigma=1e-9)
    assert estimate_populations(pts, tiny)[1] <= 1e-12


def test_estimate_populations_accepts_iqpoints_and_rejects_empty():
    m = make_blob()
    pts = [m.mu_g, m.mu_e, m.mu_g, m.mu_g]
    p_g, p_e = estimate_populations(pts, m)
    assert 0.0 < p_e < 0.5
    with pytest.raises(TrainingError):
        estimate_populations(np.empty((0, 2)), m)


def test_estimate_populations_unbiased():
    m = make_blob(prior_e=0.117)
    estimates = []
    n = 20_000
    for run in range(100):
        pts, _ = sample_blob(m, n, RngStream(100, run).generator())
        estimates.append(estimate_populations(pts, m)[1])
    se_mean = np.std(estimates, ddof=1) / math.sqrt(len(estimates))
    assert np.mean(estimates) == pytest.approx(0.117, abs=2 * se_mean + 1e-4)


# -- serialization ---------------------------------------------------------------


def test_discriminant_json_round_trip():
    disc = Discriminant(w=(0.25, -1.5), b=3.75)
    text = discriminant_to_json(disc)
    data = json.loads(text)
    assert set(data) == {"w", "b", "positive"}
    assert data["positive"] == "e"
    restored = discriminant_from_json(text)
    assert restored == disc

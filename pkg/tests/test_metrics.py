"""Metric definitions against brute-force oracles and closed forms."""

import numpy as np
import pytest

from brainvis_forge.metrics import (
    GaConfig,
    MetricsReport,
    f1_macro,
    fid,
    fid_from_moments,
    inception_score,
    n_way_top_k,
    ssim,
    top_k_accuracy,
)


# --- top-k ----------------------------------------------------------------------


def test_top_k_equal_to_class_count_is_one():
    rng = np.random.default_rng(0)
    logits = rng.standard_normal((20, 6))
    labels = rng.integers(0, 6, 20)
    assert top_k_accuracy(logits, labels, 6) == 1.0


def test_top_one_perfect_on_one_hot_logits():
    labels = np.array([2, 0, 1])
    logits = np.eye(3)[labels]
    assert top_k_accuracy(logits, labels, 1) == 1.0


def test_top_k_matches_full_sort_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        logits = rng.standard_normal((8, 7))
        labels = rng.integers(0, 7, 8)
        for k in (1, 3, 5):
            # oracle: stable descending sort ranks ties by lower class index
            hits = 0
            for row, lab in zip(logits, labels):
                order = np.argsort(-row, kind="stable")
                hits += int(lab in order[:k])
            assert top_k_accuracy(logits, labels, k) == pytest.approx(hits / 8)


def test_top_k_out_of_range_rejected():
    with pytest.raises(ValueError):
        top_k_accuracy(np.zeros((2, 4)), np.zeros(2, dtype=int), 5)


# --- f1 -------------------------------------------------------------------------


def test_f1_perfect_predictions():
    labels = np.array([0, 1, 2, 0, 1, 2])
    assert f1_macro(labels, labels, 3) == 1.0


def test_f1_single_class_collapse_hand_value():
    # two balanced classes, everything predicted as class 0:
    # class 0 has P=0.5, R=1 -> F1=2/3; class 1 has F1=0; macro = 1/3.
    labels = np.array([0, 0, 1, 1])
    preds = np.zeros(4, dtype=int)
    assert f1_macro(preds, labels, 2) == pytest.approx(1 / 3)


def test_f1_matches_confusion_matrix_oracle():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n_classes = 5
        labels = rng.integers(0, n_classes, 40)
        preds = rng.integers(0, n_classes, 40)
        cm = np.zeros((n_classes, n_classes), dtype=int)
        for p, t in zip(preds, labels):
            cm[t, p] += 1
        scores = []
        for c in range(n_classes):
            tp = cm[c, c]
            fp = cm[:, c].sum() - tp
            fn = cm[c, :].sum() - tp
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            scores.append(2 * p * r / (p + r) if p + r else 0.0)
        assert f1_macro(preds, labels, n_classes) == pytest.approx(np.mean(scores))


# --- n-way top-k -------------------------------------------------------------------


def test_n_way_equal_to_all_classes_reduces_to_plain_top_k():
    rng = np.random.default_rng(3)
    probs = rng.dirichlet(np.ones(6), size=30)
    labels = rng.integers(0, 6, 30)
    cfg = GaConfig(n_way=6, top_k=1, n_trials=1, seed=0)
    assert n_way_top_k(probs, labels, cfg) == pytest.approx(top_k_accuracy(probs, labels, 1))


def test_n_way_global_max_always_hits():
    probs = np.zeros((10, 8))
    labels = np.arange(8).tolist() + [0, 1]
    probs[np.arange(10), labels] = 1.0
    cfg = GaConfig(n_way=4, top_k=1, n_trials=10, seed=1)
    assert n_way_top_k(probs, np.array(labels), cfg) == 1.0


def test_n_way_matches_exhaustive_subset_enumeration():
    from itertools import combinations

    rng = np.random.default_rng(4)
    n_classes, n_way = 6, 3
    probs = rng.dirichlet(np.ones(n_classes), size=4)
    labels = rng.integers(0, n_classes, 4)

    exact_hits = []
    for row, lab in zip(probs, labels):
        wrong = [c for c in range(n_classes) if c != lab]
        hits = 0
        total = 0
        for subset in combinations(wrong, n_way - 1):
            cands = sorted((lab,) + subset)
            scores = row[cands]
            target = row[lab]
            pos = cands.index(lab)
            stronger = np.sum(scores > target) + np.sum((scores == target) & (np.arange(len(cands)) < pos))
            hits += int(stronger < 1)
            total += 1
        exact_hits.append(hits / total)
    exact = float(np.mean(exact_hits))

    cfg = GaConfig(n_way=n_way, top_k=1, n_trials=4000, seed=5)
    mc = n_way_top_k(probs, labels, cfg)
    sigma = np.sqrt(exact * (1 - exact) / (4000 * len(labels))) + 1e-9
    assert abs(mc - exact) < 3 * sigma + 5e-3


def test_n_way_monotone_in_k():
    rng = np.random.default_rng(6)
    probs = rng.dirichlet(np.ones(10), size=20)
    labels = rng.integers(0, 10, 20)
    rates = [
        n_way_top_k(probs, labels, GaConfig(n_way=6, top_k=k, n_trials=50, seed=7))
        for k in (1, 2, 3, 4, 5)
    ]
    assert all(a <= b + 1e-12 for a, b in zip(rates, rates[1:]))


def test_n_way_exceeding_class_count_rejected():
    with pytest.raises(ValueError, match="exceeds"):
        n_way_top_k(np.full((2, 4), 0.25), np.array([0, 1]), GaConfig(n_way=5, top_k=1, n_trials=1))


# --- inception score -----------------------------------------------------------------


def test_is_uniform_rows_give_one():
    mean, std = inception_score(np.full((12, 5), 0.2))
    assert mean == pytest.approx(1.0, abs=1e-6)
    assert std == 0.0


def test_is_distinct_one_hots_give_class_count():
    mean, _ = inception_score(np.eye(7))
    assert mean == pytest.approx(7.0, abs=1e-6)


def test_is_matches_double_loop_kl_oracle():
    rng = np.random.default_rng(8)
    probs = rng.dirichlet(np.ones(6), size=20)
    marginal = probs.mean(axis=0)
    kls = [sum(p[j] * np.log(p[j] / marginal[j]) for j in range(6) if p[j] > 0) for p in probs]
    expected = float(np.exp(np.mean(kls)))
    mean, _ = inception_score(probs)
    assert mean == pytest.approx(expected, rel=1e-9)


def test_is_rejects_unnormalized_rows():
    bad = np.full((3, 4), 0.3)
    with pytest.raises(ValueError, match="sum to 1"):
        inception_score(bad)


def test_is_split_statistics():
    rng = np.random.default_rng(9)
    probs = rng.dirichlet(np.ones(5), size=30)
    mean, std = inception_score(probs, splits=3)
    assert mean >= 1.0 and std >= 0.0


# --- fid ------------------------------------------------------------------------------


def test_fid_identical_sets_is_zero():
    a = np.random.default_rng(10).standard_normal((60, 5))
    assert abs(fid(a, a)) < 1e-8


def test_fid_symmetry():
    rng = np.random.default_rng(11)
    a, b = rng.standard_normal((50, 4)), rng.standard_normal((40, 4)) + 0.5
    assert fid(a, b) == pytest.approx(fid(b, a), abs=1e-8)


def test_fid_mean_offset_gaussians():
    rng = np.random.default_rng(12)
    delta = np.array([1.0, -2.0, 0.5])
    a = rng.standard_normal((20000, 3))
    b = rng.standard_normal((20000, 3)) + delta
    assert fid(a, b) == pytest.approx(delta @ delta, rel=0.1)


def test_fid_closed_form_commuting_covariances():
    mu_a, mu_b = np.array([0.0, 0.0]), np.array([1.0, 1.0])
    sig_a, sig_b = np.diag([2.0, 3.0]), np.diag([1.0, 5.0])
    expected = 2.0 + (2 + 1 - 2 * np.sqrt(2)) + (3 + 5 - 2 * np.sqrt(15))
    assert fid_from_moments(mu_a, sig_a, mu_b, sig_b) == pytest.approx(expected, abs=1e-6)


def test_fid_dim_mismatch_rejected():
    with pytest.raises(ValueError):
        fid(np.zeros((10, 3)), np.zeros((10, 4)))


def test_fid_small_sample_warns():
    rng = np.random.default_rng(13)
    with pytest.warns(UserWarning, match="rank-deficient"):
        fid(rng.standard_normal((4, 8)), rng.standard_normal((20, 8)))


# --- ssim ----------------------------------------------------------------------------


def test_ssim_self_is_one():
    img = np.random.default_rng(14).uniform(-1, 1, (3, 16, 16))
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)


def test_ssim_symmetric():
    rng = np.random.default_rng(15)
    a, b = rng.uniform(-1, 1, (3, 16, 16)), rng.uniform(-1, 1, (3, 16, 16))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_constant_images_closed_form():
    # constant a vs a + delta: contrast and structure terms are 1, so SSIM
    # equals the luminance ratio (2 m1 m2 + C1) / (m1^2 + m2^2 + C1).
    a_val, delta, L = 0.2, 0.3, 2.0
    c1 = (0.01 * L) ** 2
    m1, m2 = a_val, a_val + delta
    expected = (2 * m1 * m2 + c1) / (m1**2 + m2**2 + c1)
    a = np.full((1, 8, 8), m1)
    b = np.full((1, 8, 8), m2)
    assert ssim(a, b, dynamic_range=L) == pytest.approx(expected, rel=1e-12)


def test_ssim_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        ssim(np.zeros((3, 16, 16)), np.zeros((3, 8, 8)))


def test_ssim_within_range_on_random_pairs():
    rng = np.random.default_rng(16)
    for _ in range(20):
        a, b = rng.uniform(-1, 1, (1, 12, 12)), rng.uniform(-1, 1, (1, 12, 12))
        assert -1.0 <= ssim(a, b) <= 1.0


# --- report --------------------------------------------------------------------------


def test_metrics_report_json_roundtrip():
    report = MetricsReport(
        top1_ca=0.5, top3_ca=0.8, top5_ca=0.9, f1_macro=0.4, ga=0.45,
        is_mean=3.2, is_std=0.1, fid=12.5, ssim_mean=0.7,
        per_class={"0": 1.0, "1": 0.0}, config={"seed": 7},
    )
    report.validate_ranges()
    again = MetricsReport.from_json(report.to_json())
    assert again == report
    assert again.to_json() == report.to_json()


def test_metrics_report_range_validation():
    report = MetricsReport(
        top1_ca=1.5, top3_ca=0.8, top5_ca=0.9, f1_macro=0.4, ga=0.45,
        is_mean=3.2, is_std=0.1, fid=12.5, ssim_mean=0.7,
    )
    with pytest.raises(ValueError, match="top1_ca"):
        report.validate_ranges()


def test_evaluate_generation_perfect_bound():
    # Feeding the ground-truth images back as "generated" must score
    # perfectly: GA 1, FID ~0, SSIM 1 (given an overfit surrogate).
    from brainvis_forge.data import make_image_set
    from brainvis_forge.metrics import evaluate_generation, train_surrogate

    image_set = make_image_set(4, 6, size=8, seed=3)
    images = np.stack([img for img, _ in image_set.values()])
    labels = np.array([lab for _, lab in image_set.values()])
    surrogate = train_surrogate(images, labels, 4, hidden=32, epochs=200, seed=0)
    assert surrogate.train_accuracy == 1.0

    block = evaluate_generation(
        images, labels, images, images, surrogate.model,
        GaConfig(n_way=4, top_k=1, n_trials=10, seed=1),
    )
    assert block["ga"] == 1.0
    assert abs(block["fid"]) < 1e-4  # eigendecomposition noise scales with feature magnitude
    assert block["ssim_mean"] == pytest.approx(1.0, abs=1e-9)

import numpy as np
import pytest

from symsur import metrics


# ---------------------------------------------------------------------------
# AUC


def test_auc_perfectly_separable():
    scores = np.array([0.1, 0.2, 0.8, 0.9])
    labels = np.array([0, 0, 1, 1])
    assert metrics.auc_binary(scores, labels) == 1.0


def test_auc_constant_scores_is_half():
    scores = np.ones(10)
    labels = np.array([0, 1] * 5)
    assert metrics.auc_binary(scores, labels) == 0.5


def _pairwise_auc_oracle(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def test_auc_macro_matches_pairwise_oracle(rng):
    n, K = 50, 3
    y = rng.integers(0, K, size=n)
    while len(np.unique(y)) < K:
        y = rng.integers(0, K, size=n)
    probs = rng.random((n, K))
    probs[np.arange(n), y] += rng.random(n)  # informative but noisy
    probs /= probs.sum(axis=1, keepdims=True)
    got = metrics.auc_macro_ovr(probs, y, K)
    want = np.mean([_pairwise_auc_oracle(probs[:, c], (y == c).astype(int)) for c in range(K)])
    assert abs(got - want) < 1e-12


def test_auc_binary_equals_macro_for_two_classes(rng):
    y = rng.integers(0, 2, size=40)
    y[:2] = [0, 1]
    p1 = rng.random(40)
    probs = np.column_stack([1 - p1, p1])
    assert abs(metrics.auc_macro_ovr(probs, y, 2) - metrics.auc_binary(p1, y)) < 1e-12


def test_auc_invariant_to_monotone_transform(rng):
    y = rng.integers(0, 2, size=60)
    y[:2] = [0, 1]
    s = rng.random(60)
    a = metrics.auc_binary(s, y)
    b = metrics.auc_binary(np.exp(3 * s) + 7, y)
    assert abs(a - b) < 1e-12


def test_auc_skips_absent_class(rng):
    y = np.array([0, 0, 1, 1])
    probs = rng.random((4, 3))
    with pytest.warns(UserWarning):
        out = metrics.auc_macro_ovr(probs, y, 3)
    assert 0.0 <= out <= 1.0


def test_auc_requires_both_classes():
    with pytest.raises(ValueError):
        metrics.auc_binary([0.4, 0.6], [1, 1])


def test_midrank_ties():
    assert metrics.midrank([10, 20, 20, 30]).tolist() == [1.0, 2.5, 2.5, 4.0]


# ---------------------------------------------------------------------------
# t intervals


def test_t_interval_constant_values():
    mean, half = metrics.t_interval([0.7] * 10)
    assert mean == 0.7
    assert half == 0.0


def test_t_interval_df29_quantile():
    # R = 30 with sample std sqrt(30) collapses the halfwidth to the quantile
    values = np.zeros(30)
    values[0] = 1.0  # placeholder, replaced below
    rng = np.random.default_rng(0)
    v = rng.normal(size=30)
    v = (v - v.mean()) / v.std(ddof=1) * np.sqrt(30)  # sample std = sqrt(30)
    mean, half = metrics.t_interval(v + 5.0)
    assert abs(half - 2.045) < 1e-9
    assert metrics.t_quantile_975(29) == 2.045


def test_t_interval_matches_direct_formula(rng):
    v = rng.normal(size=30)
    mean, half = metrics.t_interval(v)
    m = v.sum() / 30
    s = np.sqrt(((v - m) ** 2).sum() / 29)
    assert abs(mean - m) < 1e-12
    assert abs(half - 2.045 * s / np.sqrt(30)) < 1e-9


def test_t_interval_needs_two_values():
    with pytest.raises(ValueError):
        metrics.t_interval([1.0])


def test_t_quantile_fallback_to_normal():
    assert metrics.t_quantile_975(500) == 1.960
    assert metrics.t_quantile_975(1) == 12.706
    with pytest.raises(ValueError):
        metrics.t_quantile_975(0)


def test_summarize_runs():
    s = metrics.summarize_runs([1.0, 2.0, 3.0])
    assert s.mean == 2.0
    assert "+/-" in str(s)

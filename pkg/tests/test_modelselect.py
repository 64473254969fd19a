import math
from types import SimpleNamespace

import numpy as np
import pytest

from symsur import modelselect as ms


def stub_run(seed, m, C, D=3, dims=5, digest=0):
    return SimpleNamespace(
        seed=seed,
        val_macro_f1=m,
        complexity=C,
        depth=D,
        unique_dims=dims,
        canonical_digest=lambda d=digest: d,
    )


# ---------------------------------------------------------------------------
# macro F1


def test_macro_f1_perfect():
    y = np.array([0, 1, 2, 0, 1, 2])
    assert ms.macro_f1(y, y, 3) == 1.0


def test_macro_f1_all_one_class_balanced():
    truth = np.array([0, 0, 1, 1])
    pred = np.zeros(4, dtype=int)
    # class 0: prec 0.5, rec 1 -> F1 2/3; class 1: 0 -> macro = 1/3
    assert abs(ms.macro_f1(pred, truth, 2) - 1.0 / 3.0) < 1e-12


def _confusion_oracle(pred, truth, K):
    conf = np.zeros((K, K))
    for t, p in zip(truth, pred):
        conf[t, p] += 1
    total = 0.0
    for c in range(K):
        tp = conf[c, c]
        fp = conf[:, c].sum() - tp
        fn = conf[c, :].sum() - tp
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        total += 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return total / K


def test_macro_f1_matches_confusion_oracle(rng):
    for _ in range(30):
        truth = rng.integers(0, 4, size=200)
        pred = rng.integers(0, 4, size=200)
        assert abs(ms.macro_f1(pred, truth, 4) - _confusion_oracle(pred, truth, 4)) < 1e-12


def test_macro_f1_label_range():
    with pytest.raises(ValueError):
        ms.macro_f1([0, 5], [0, 1], 2)


# ---------------------------------------------------------------------------
# standard error


def test_se_constant_scores():
    assert ms.se_of_runs([0.5, 0.5, 0.5]) == 0.0


def test_se_two_points():
    assert abs(ms.se_of_runs([0.0, 1.0]) - 0.5) < 1e-15


def test_se_matches_direct_formula(rng):
    scores = rng.random(30)
    mean = scores.sum() / 30
    want = math.sqrt(sum((s - mean) ** 2 for s in scores) / (30 * 29))
    assert abs(ms.se_of_runs(scores) - want) < 1e-12


def test_se_needs_two():
    with pytest.raises(ValueError):
        ms.se_of_runs([0.5])


# ---------------------------------------------------------------------------
# canonical selection


def test_canonical_prefers_simpler_feasible():
    # filler run widens the SE band so both leaders are feasible
    runs = [stub_run(0, 0.90, 100), stub_run(1, 0.89, 50), stub_run(2, 0.84, 200)]
    _, m_star, se = ms.feasible_set(runs)
    assert m_star - se < 0.89  # both leaders inside the band
    assert ms.canonical(runs).seed == 1


def test_canonical_excludes_infeasible():
    runs = [stub_run(0, 0.90, 100), stub_run(1, 0.80, 10)]
    # SE = 0.05; threshold 0.85; second run infeasible
    assert ms.canonical(runs).seed == 0


def test_canonical_single_run():
    run = stub_run(7, 0.5, 10)
    assert ms.canonical([run]) is run


def test_canonical_permutation_invariant(rng):
    runs = [stub_run(i, 0.9 + 0.01 * (i % 3), 50 + i, D=i % 4, dims=i % 6, digest=i)
            for i in range(8)]
    chosen = ms.canonical(runs)
    for _ in range(10):
        perm = list(runs)
        rng.shuffle(perm)
        assert ms.canonical(perm).seed == chosen.seed


def _brute_force_canonical(runs):
    scores = [r.val_macro_f1 for r in runs]
    m_star = max(scores)
    if len(runs) >= 2:
        mean = sum(scores) / len(scores)
        se = math.sqrt(sum((s - mean) ** 2 for s in scores) / (len(scores) * (len(scores) - 1)))
    else:
        se = 0.0
    feasible = [r for r in runs if r.val_macro_f1 >= m_star - se]
    best = None
    for r in feasible:
        key = (r.complexity, r.depth, r.unique_dims, r.canonical_digest())
        if best is None or key < best[0]:
            best = (key, r)
    return best[1]


def test_canonical_matches_brute_force_on_random_sets():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        runs = [
            stub_run(
                seed=i,
                m=float(rng.choice([0.7, 0.8, 0.85, 0.9, rng.random()])),
                C=int(rng.integers(10, 40)),
                D=int(rng.integers(1, 8)),
                dims=int(rng.integers(1, 10)),
                digest=int(rng.integers(0, 5)),
            )
            for i in range(n)
        ]
        assert ms.canonical(runs) is _brute_force_canonical(runs)


def test_canonical_needs_runs():
    with pytest.raises(ValueError):
        ms.canonical([])


def test_selected_run_is_feasible_and_minimal(rng):
    for _ in range(100):
        n = int(rng.integers(2, 10))
        runs = [
            stub_run(i, float(rng.random()), int(rng.integers(5, 50)),
                     D=int(rng.integers(1, 6)), dims=int(rng.integers(1, 9)),
                     digest=int(rng.integers(0, 3)))
            for i in range(n)
        ]
        chosen = ms.canonical(runs)
        feasible, m_star, se = ms.feasible_set(runs)
        assert chosen in feasible
        key = (chosen.complexity, chosen.depth, chosen.unique_dims, chosen.canonical_digest())
        for r in feasible:
            assert key <= (r.complexity, r.depth, r.unique_dims, r.canonical_digest())


# ---------------------------------------------------------------------------
# FNV-1a


def test_fnv1a64_known_vectors():
    # standard reference values for the 64-bit FNV-1a
    assert ms.fnv1a64(b"") == 0xCBF29CE484222325
    assert ms.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert ms.fnv1a64(b"foobar") == 0x85944171F73967E8


def test_selection_report_structure():
    runs = [stub_run(0, 0.9, 30), stub_run(1, 0.89, 20), stub_run(2, 0.5, 5)]
    report = ms.selection_report(runs)
    assert report["chosen_seed"] == 1
    assert [r["feasible"] for r in report["runs"]] == [True, True, False]
    assert report["m_star"] == 0.9

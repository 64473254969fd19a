"""Canonical model selection: one-standard-error rule on validation macro-F1
with lexicographic parsimony tie-breaks."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

__all__ = ["canonical", "feasible_set", "fnv1a64", "macro_f1", "se_of_runs"]

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def macro_f1(pred, truth, n_classes: int) -> float:
    """Unweighted mean of per-class F1; a class with prec+rec = 0 contributes 0."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have the same length")
    for arr in (pred, truth):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"labels outside [0, {n_classes})")
    total = 0.0
    for c in range(n_classes):
        tp = np.sum((pred == c) & (truth == c))
        fp = np.sum((pred == c) & (truth != c))
        fn = np.sum((pred != c) & (truth == c))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        if prec + rec > 0:
            total += 2 * prec * rec / (prec + rec)
    return total / n_classes


def se_of_runs(scores: Sequence[float]) -> float:
    """Standard error of the mean: sqrt(sum((m - mean)^2) / (R (R - 1)))."""
    scores = np.asarray(scores, dtype=np.float64)
    R = len(scores)
    if R < 2:
        raise ValueError("need at least 2 runs for a standard error")
    mean = scores.mean()
    return math.sqrt(float(np.sum((scores - mean) ** 2)) / (R * (R - 1)))


def feasible_set(runs: Sequence) -> tuple[list, float, float]:
    """Runs whose validation score is within one SE of the best."""
    scores = [r.val_macro_f1 for r in runs]
    m_star = max(scores)
    se = se_of_runs(scores) if len(scores) >= 2 else 0.0
    keep = [r for r in runs if r.val_macro_f1 >= m_star - se]
    return keep, m_star, se


def _sort_key(run) -> tuple:
    return (run.complexity, run.depth, run.unique_dims, run.canonical_digest())


def canonical(runs: Sequence):
    """Pick the canonical run: among the 1-SE feasible set, minimize
    (complexity, depth, unique dims, 64-bit digest of the serialized
    programs)."""
    if not runs:
        raise ValueError("need at least one run")
    keep, _, _ = feasible_set(runs)
    return min(keep, key=_sort_key)


def selection_report(runs: Sequence) -> dict:
    keep, m_star, se = feasible_set(runs)
    chosen = min(keep, key=_sort_key)
    feasible_seeds = {r.seed for r in keep}
    return {
        "m_star": m_star,
        "se": se,
        "threshold": m_star - se,
        "chosen_seed": chosen.seed,
        "runs": [
            {
                "seed": r.seed,
                "val_macro_f1": r.val_macro_f1,
                "complexity": r.complexity,
                "depth": r.depth,
                "unique_dims": r.unique_dims,
                "feasible": r.seed in feasible_seeds,
            }
            for r in runs
        ],
    }

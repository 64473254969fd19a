"""Discrimination metrics and across-run uncertainty aggregation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["RunSummary", "auc_binary", "auc_macro_ovr", "midrank", "t_interval", "t_quantile_975"]

# two-sided 95% t quantiles, df 1..120 (textbook precision); normal beyond
_T_TABLE = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
    2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
    2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    2.040, 2.037, 2.035, 2.032, 2.030, 2.028, 2.026, 2.024, 2.023, 2.021,
    2.020, 2.018, 2.017, 2.015, 2.014, 2.013, 2.012, 2.011, 2.010, 2.009,
    2.008, 2.007, 2.006, 2.005, 2.004, 2.003, 2.002, 2.002, 2.001, 2.000,
    2.000, 1.999, 1.998, 1.998, 1.997, 1.997, 1.996, 1.995, 1.995, 1.994,
    1.994, 1.993, 1.993, 1.993, 1.992, 1.992, 1.991, 1.991, 1.990, 1.990,
    1.990, 1.989, 1.989, 1.989, 1.988, 1.988, 1.988, 1.987, 1.987, 1.987,
    1.986, 1.986, 1.986, 1.986, 1.985, 1.985, 1.985, 1.984, 1.984, 1.984,
    1.984, 1.983, 1.983, 1.983, 1.983, 1.983, 1.982, 1.982, 1.982, 1.982,
    1.982, 1.981, 1.981, 1.981, 1.981, 1.981, 1.980, 1.980, 1.980, 1.980,
]
_NORMAL_975 = 1.960


def t_quantile_975(df: int) -> float:
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if df <= len(_T_TABLE):
        return _T_TABLE[df - 1]
    return _NORMAL_975


@dataclass(frozen=True)
class RunSummary:
    values: tuple[float, ...]
    mean: float
    halfwidth: float

    def __str__(self) -> str:
        return f"{self.mean:.4f} +/- {self.halfwidth:.4f}"


def t_interval(values: Sequence[float]) -> tuple[float, float]:
    """Mean and halfwidth of the 95% t confidence interval."""
    values = np.asarray(values, dtype=np.float64)
    R = len(values)
    if R < 2:
        raise ValueError("need at least 2 values")
    mean = float(values.mean())
    s = float(np.sqrt(np.sum((values - mean) ** 2) / (R - 1)))
    half = t_quantile_975(R - 1) * s / np.sqrt(R)
    return mean, float(half)


def summarize_runs(values: Sequence[float]) -> RunSummary:
    mean, half = t_interval(values)
    return RunSummary(tuple(float(v) for v in values), mean, half)


def midrank(values) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    values = np.asarray(values)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc_binary(scores, labels) -> float:
    """Rank-based AUC with midrank tie handling."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need both positive and negative examples")
    ranks = midrank(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc_macro_ovr(probs, y, n_classes: int) -> float:
    """One-vs-rest AUC per class, averaged unweighted. Classes absent from
    y are skipped with a warning."""
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y)
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    per_class = []
    skipped = []
    for c in range(n_classes):
        pos = y == c
        if not pos.any() or pos.all():
            skipped.append(c)
            continue
        per_class.append(auc_binary(probs[:, c], pos))
    if skipped:
        warnings.warn(f"classes absent from labels skipped in AUC: {skipped}")
    if not per_class:
        raise ValueError("no class had both positives and negatives")
    return float(np.mean(per_class))

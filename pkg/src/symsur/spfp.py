"""Semantic-preserving feature partitioning: greedy relevance-redundancy
growth of disjoint, exhaustive views over embedding coordinates.

Relevance is a one-way ANOVA F statistic against the labels; redundancy is
the mean absolute Pearson correlation with coordinates already in the view.
Both are computed on training rows only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_X_y

from .modelselect import fnv1a64

__all__ = [
    "F_MAX",
    "SpfpConfig",
    "SpfpPartitioner",
    "ViewPartition",
    "grow_view",
    "partition",
    "redundancy",
    "relevance",
    "relevance_scores",
]

F_MAX = 1e12


@dataclass(frozen=True)
class SpfpConfig:
    budget: int | None = None  # None: ceil(0.1 * d)
    removal_fraction: float = 0.2  # recorded; tie-break jitter stays off
    theta: float = 0.9  # information-preservation threshold

    def __post_init__(self):
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be at least 1")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if not 0.0 <= self.removal_fraction <= 1.0:
            raise ValueError("removal_fraction must lie in [0, 1]")

    def resolve_budget(self, d: int) -> int:
        return self.budget if self.budget is not None else int(np.ceil(0.1 * d))

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "removal_fraction": self.removal_fraction,
            "theta": self.theta,
        }


@dataclass
class ViewPartition:
    """Ordered, pairwise-disjoint coordinate sets whose union is [0, d)."""

    views: list[np.ndarray]
    d: int
    config: SpfpConfig = field(default_factory=SpfpConfig)

    def __post_init__(self):
        self.views = [np.asarray(sorted(int(i) for i in v), dtype=np.int64) for v in self.views]
        self.validate()

    def validate(self) -> None:
        seen: set[int] = set()
        for k, view in enumerate(self.views):
            if len(view) == 0:
                raise ValueError(f"view {k} is empty")
            members = set(int(i) for i in view)
            if members & seen:
                raise ValueError(f"view {k} overlaps an earlier view")
            seen |= members
        if seen != set(range(self.d)):
            raise ValueError("views do not cover [0, d) exactly")

    @property
    def n_views(self) -> int:
        return len(self.views)

    def sizes(self) -> list[int]:
        return [len(v) for v in self.views]

    def to_dict(self) -> dict:
        return {
            "views": [[int(i) for i in v] for v in self.views],
            "d": self.d,
            "config": self.config.to_dict(),
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return format(fnv1a64(payload.encode()), "016x")

    def save(self, path: str | Path) -> None:
        doc = self.to_dict()
        doc["digest"] = self.digest()
        Path(path).write_text(json.dumps(doc, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "ViewPartition":
        doc = json.loads(Path(path).read_text())
        config = SpfpConfig(**doc.get("config", {}))
        part = cls([np.asarray(v) for v in doc["views"]], doc["d"], config)
        want = doc.get("digest")
        if want is not None and part.digest() != want:
            raise ValueError("partition digest mismatch; file was edited or corrupted")
        return part


def relevance_scores(X, y) -> np.ndarray:
    """One-way ANOVA F statistic of every column against the class labels.

    Degenerate columns score 0; a zero within-class variance with real
    between-class spread saturates at F_MAX.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n, d = X.shape
    classes = np.unique(y)
    K = len(classes)
    if K < 2 or n <= K:
        return np.zeros(d)
    grand = X.mean(axis=0)
    ss_between = np.zeros(d)
    ss_within = np.zeros(d)
    for c in classes:
        block = X[y == c]
        mu = block.mean(axis=0)
        ss_between += len(block) * (mu - grand) ** 2
        ss_within += ((block - mu) ** 2).sum(axis=0)
    ms_between = ss_between / (K - 1)
    ms_within = ss_within / (n - K)
    out = np.zeros(d)
    ok = ms_within > 0
    out[ok] = np.minimum(ms_between[ok] / ms_within[ok], F_MAX)
    out[~ok & (ms_between > 0)] = F_MAX
    return out


def relevance(j: int, X_train, y) -> float:
    X = np.asarray(X_train)
    return float(relevance_scores(X[:, [j]], y)[0])


def _abs_corr(X, j: int, others: np.ndarray) -> np.ndarray:
    """|Pearson correlation| of column j with each listed column; pairs with
    a zero-variance side contribute 0."""
    X = np.asarray(X, dtype=np.float64)
    xj = X[:, j] - X[:, j].mean()
    sj = np.sqrt((xj**2).sum())
    block = X[:, others]
    block = block - block.mean(axis=0)
    norms = np.sqrt((block**2).sum(axis=0))
    denom = sj * norms
    out = np.zeros(len(others))
    ok = denom > 0
    if sj > 0:
        out[ok] = np.abs(xj @ block[:, ok]) / denom[ok]
    return np.clip(out, 0.0, 1.0)


def redundancy(j: int, view, X_train) -> float:
    members = np.asarray(sorted(view), dtype=np.int64)
    if len(members) == 0:
        return 0.0
    return float(_abs_corr(X_train, j, members).mean())


def grow_view(
    pool,
    X_train,
    y,
    budget: int,
    theta: float = 0.9,
    rel: np.ndarray | None = None,
    scale: float | None = None,
) -> np.ndarray:
    """Grow one view greedily from the pool.

    Each step adds argmax of relevance(j) - mean_redundancy(j, view) * scale,
    ties broken by smallest index. Growth runs until the view has reached
    min(budget, pool size) AND its cumulative relevance covers theta of the
    best relevance mass a budget-sized view could capture from this pool.
    """
    pool = np.asarray(sorted(int(i) for i in pool), dtype=np.int64)
    if len(pool) == 0:
        raise ValueError("pool is empty")
    X_train = np.asarray(X_train, dtype=np.float64)
    if rel is None:
        rel = relevance_scores(X_train, y)
    if scale is None:
        scale = float(rel.mean())

    target = min(budget, len(pool))
    pool_rel = np.sort(rel[pool])[::-1]
    rel_target = theta * pool_rel[:target].sum()

    candidates = list(pool)  # kept ascending for deterministic ties
    red_sums = {j: 0.0 for j in candidates}
    view: list[int] = []
    cum_rel = 0.0
    while candidates:
        best_j, best_score = None, None
        k = len(view)
        for j in candidates:
            score = rel[j] - (red_sums[j] / k) * scale if k else rel[j]
            if best_score is None or score > best_score:
                best_j, best_score = j, score
        view.append(best_j)
        cum_rel += rel[best_j]
        candidates.remove(best_j)
        if len(view) >= target and cum_rel >= rel_target:
            break
        if candidates:
            corr = _abs_corr(X_train, best_j, np.asarray(candidates))
            for j, r in zip(candidates, corr):
                red_sums[j] += r
    return np.asarray(sorted(view), dtype=np.int64)


def partition(X_train, y, config: SpfpConfig | None = None) -> ViewPartition:
    """Grow views until the pool is exhausted. Every finalized view leaves
    the pool whole, which guarantees disjoint, exhaustive output; the last
    view absorbs any remainder."""
    config = config or SpfpConfig()
    X_train = np.asarray(X_train, dtype=np.float64)
    d = X_train.shape[1]
    if d < 1:
        raise ValueError("need at least one feature")
    budget = config.resolve_budget(d)
    rel = relevance_scores(X_train, y)
    scale = float(rel.mean())

    pool = np.arange(d)
    views: list[np.ndarray] = []
    while len(pool):
        view = grow_view(pool, X_train, y, budget, config.theta, rel=rel, scale=scale)
        views.append(view)
        pool = np.setdiff1d(pool, view)
    return ViewPartition(views, d, config)


class SpfpPartitioner(BaseEstimator):
    """Estimator-style wrapper: fit(X, y) learns a ViewPartition on the
    given rows (callers pass training rows only)."""

    def __init__(self, budget: int | None = None, removal_fraction: float = 0.2, theta: float = 0.9):
        self.budget = budget
        self.removal_fraction = removal_fraction
        self.theta = theta

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        config = SpfpConfig(self.budget, self.removal_fraction, self.theta)
        self.partition_ = partition(X, y, config)
        self.views_ = self.partition_.views
        return self

    def transform(self, X):
        """Split columns by view: returns one matrix per view."""
        if not hasattr(self, "partition_"):
            raise RuntimeError("SpfpPartitioner is not fitted")
        X = np.asarray(X)
        return [X[:, view] for view in self.partition_.views]

"""Behavioral audit of a surrogate model: term-contribution importance,
partial-dependence and accumulated-local-effect curves, monotonicity,
dimension usage histograms, and logit-overlap sets."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exprcore import BinOp, Const, Dim, Node, Program, evaluate_matrix, stats
from .megp import SurrogateModel
from .metrics import midrank

__all__ = [
    "AdditiveTerm",
    "EffectCurve",
    "ImportanceTable",
    "additive_terms",
    "ale",
    "effect_magnitude",
    "importance",
    "monotonicity",
    "overlap_sets",
    "pdp",
    "usage_histogram",
]

GRID_KNOTS = 20


@dataclass(frozen=True)
class AdditiveTerm:
    """One top-level additive term of a logit: sign * subtree."""

    tree: Program
    sign: int  # +1 or -1
    dims: frozenset[int]


def additive_terms(logit: Program) -> list[AdditiveTerm]:
    """Flatten the top-level plus/minus structure of a logit into signed
    atomic terms; times/divide subtrees stay whole."""
    out: list[AdditiveTerm] = []

    def rec(node: Node, sign: int):
        if type(node) is BinOp and node.op == "plus":
            rec(node.left, sign)
            rec(node.right, sign)
        elif type(node) is BinOp and node.op == "minus":
            rec(node.left, sign)
            rec(node.right, -sign)
        else:
            prog = Program(node)
            out.append(AdditiveTerm(prog, sign, stats(prog).used_dims))

    rec(logit.root, +1)
    return out


def _max_multiplicative_power(node: Node, dim: int) -> int:
    """Largest count of multiplicative occurrences of one coordinate along
    any additive branch (a syntactic stand-in for its exponent)."""
    if type(node) is Dim:
        return 1 if node.index == dim else 0
    if type(node) is Const:
        return 0
    l = _max_multiplicative_power(node.left, dim)
    r = _max_multiplicative_power(node.right, dim)
    if node.op in ("times", "divide"):
        return l + r
    return max(l, r)


@dataclass
class ImportanceTable:
    dims: np.ndarray  # coordinate ids, sorted by descending score
    scores: np.ndarray  # mean absolute term contribution
    pct_logits: np.ndarray  # fraction of logits using the coordinate
    max_power: np.ndarray  # largest syntactic multiplicative power

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["dim", "importance", "pct_logits", "max_power"])
        for d, s, p, m in zip(self.dims, self.scores, self.pct_logits, self.max_power):
            w.writerow([int(d), repr(float(s)), repr(float(p)), int(m)])
        return buf.getvalue()

    def top(self, k: int) -> list[int]:
        return [int(d) for d in self.dims[:k]]


def _logit_programs(model: SurrogateModel) -> list[Program]:
    return [model.combined_logit(c) for c in range(model.n_classes)]


def importance(model: SurrogateModel, X) -> ImportanceTable:
    """Mean absolute term contribution per coordinate, pooled over every
    logit's additive terms; also reports per-coordinate logit coverage and
    the largest syntactic power."""
    X = np.asarray(X)
    logits = _logit_programs(model)
    score: dict[int, float] = {}
    for logit in logits:
        for term in additive_terms(logit):
            if not term.dims:
                continue
            mean_abs = float(np.abs(term.sign * evaluate_matrix(term.tree, X, model.epsilon)).mean())
            for j in term.dims:
                score[j] = score.get(j, 0.0) + mean_abs
    logit_dims = [stats(lg).used_dims for lg in logits]
    dims = np.asarray(sorted(score, key=lambda j: (-score[j], j)), dtype=np.int64)
    scores = np.asarray([score[j] for j in dims])
    pct = np.asarray([np.mean([j in s for s in logit_dims]) for j in dims])
    power = np.asarray(
        [max(_max_multiplicative_power(lg.root, j) for lg in logits) for j in dims],
        dtype=np.int64,
    )
    return ImportanceTable(dims, scores, pct, power)


@dataclass
class EffectCurve:
    dim: int
    target_class: int
    kind: str  # "pdp" | "ale"
    grid: np.ndarray  # knots (quantiles of the coordinate)
    values: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray

    def to_rows(self) -> list[list]:
        return [
            [self.kind, self.dim, self.target_class, repr(float(g)), repr(float(v)),
             repr(float(lo)), repr(float(hi))]
            for g, v, lo, hi in zip(self.grid, self.values, self.ci_lo, self.ci_hi)
        ]


def effect_magnitude(curve: EffectCurve) -> float:
    """PDP: range of the curve. ALE: integral of |values| over the grid."""
    if curve.kind == "pdp":
        return float(curve.values.max() - curve.values.min())
    return float(np.trapezoid(np.abs(curve.values), curve.grid))


def _bootstrap_ci(per_row: np.ndarray, point: np.ndarray, boots: int, rng, reducer):
    """Percentile CI of reducer(rows) under row resampling."""
    n = per_row.shape[0]
    if boots <= 0:
        return point.copy(), point.copy()
    samples = np.empty((boots, point.shape[0]))
    for b in range(boots):
        idx = rng.integers(n, size=n)
        samples[b] = reducer(idx)
    return np.percentile(samples, 2.5, axis=0), np.percentile(samples, 97.5, axis=0)


def _warn_if_unused(model: SurrogateModel, dim: int) -> None:
    used: set[int] = set()
    for row in model.genes:
        for g in row:
            used |= stats(g).used_dims
    if dim not in used:
        warnings.warn(f"coordinate d{dim} is not used by the model; curve will be flat")


def pdp(
    model: SurrogateModel,
    X,
    dim: int,
    target_class: int,
    temperature: float = 1.0,
    boots: int = 200,
    seed: int = 0,
) -> EffectCurve:
    """Partial dependence of the calibrated target-class probability on one
    coordinate, over 20 empirical quantile knots."""
    _warn_if_unused(model, dim)
    X = np.asarray(X, dtype=np.float64)
    grid = np.quantile(X[:, dim], np.linspace(0.0, 1.0, GRID_KNOTS))
    per_row = np.empty((X.shape[0], GRID_KNOTS))
    work = X.copy()
    for k, g in enumerate(grid):
        work[:, dim] = g
        per_row[:, k] = model.predict_proba(work, temperature)[:, target_class]
    values = per_row.mean(axis=0)
    rng = np.random.default_rng(seed)
    lo, hi = _bootstrap_ci(per_row, values, boots, rng, lambda idx: per_row[idx].mean(axis=0))
    return EffectCurve(dim, target_class, "pdp", grid, values, lo, hi)


def ale(
    model: SurrogateModel,
    X,
    dim: int,
    target_class: int,
    temperature: float = 1.0,
    boots: int = 200,
    seed: int = 0,
) -> EffectCurve:
    """Centered one-dimensional accumulated local effects on quantile bins.

    Per-bin mean of f(upper edge) - f(lower edge) over the rows falling in
    the bin, accumulated, then centered so the data-weighted mean of the
    interpolated curve is zero. CIs are percentile bootstrap over rows.
    """
    _warn_if_unused(model, dim)
    X = np.asarray(X, dtype=np.float64)
    x = X[:, dim]
    edges = np.unique(np.quantile(x, np.linspace(0.0, 1.0, GRID_KNOTS + 1)))
    if len(edges) < 2:
        flat = np.full(GRID_KNOTS, float(x[0]) if len(x) else 0.0)
        zeros = np.zeros(GRID_KNOTS)
        return EffectCurve(dim, target_class, "ale", flat, zeros, zeros.copy(), zeros.copy())

    n_bins = len(edges) - 1
    bin_of = np.clip(np.searchsorted(edges, x, side="left"), 1, n_bins) - 1
    work = X.copy()
    f_at_edge = np.empty((X.shape[0], len(edges)))
    for k, g in enumerate(edges):
        work[:, dim] = g
        f_at_edge[:, k] = model.predict_proba(work, temperature)[:, target_class]
    local = f_at_edge[np.arange(len(x)), bin_of + 1] - f_at_edge[np.arange(len(x)), bin_of]

    def curve_for(idx: np.ndarray) -> np.ndarray:
        sums = np.zeros(n_bins)
        counts = np.zeros(n_bins)
        np.add.at(sums, bin_of[idx], local[idx])
        np.add.at(counts, bin_of[idx], 1.0)
        deltas = np.divide(sums, counts, out=np.zeros(n_bins), where=counts > 0)
        values = np.cumsum(deltas)
        center = np.interp(x[idx], edges[1:], values).mean()
        return values - center

    all_rows = np.arange(len(x))
    values = curve_for(all_rows)
    rng = np.random.default_rng(seed)
    lo, hi = _bootstrap_ci(local[:, None], values, boots, rng, lambda idx: curve_for(idx))
    return EffectCurve(dim, target_class, "ale", edges[1:].copy(), values, lo, hi)


def monotonicity(curve: EffectCurve) -> float:
    """Absolute Spearman rank correlation between knot positions and curve
    values, midrank ties; constant curves score 0."""
    if len(curve.grid) < 3:
        raise ValueError("need at least 3 knots")
    rg = midrank(curve.grid)
    rv = midrank(curve.values)
    sg, sv = rg.std(), rv.std()
    if sg == 0.0 or sv == 0.0:
        return 0.0
    rho = np.corrcoef(rg, rv)[0, 1]
    return float(abs(rho))


def usage_histogram(model: SurrogateModel) -> list[tuple[int, int]]:
    """(coordinate, number of logits using it), most-used first."""
    counts: dict[int, int] = {}
    for logit in _logit_programs(model):
        for j in stats(logit).used_dims:
            counts[j] = counts.get(j, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def overlap_sets(model: SurrogateModel) -> dict[tuple[int, ...], int]:
    """For each observed logit-membership pattern, the number of
    coordinates shared by exactly that set of logits."""
    membership: dict[int, list[int]] = {}
    for c, logit in enumerate(_logit_programs(model)):
        for j in stats(logit).used_dims:
            membership.setdefault(j, []).append(c)
    patterns: dict[tuple[int, ...], int] = {}
    for logits in membership.values():
        key = tuple(sorted(logits))
        patterns[key] = patterns.get(key, 0) + 1
    return patterns


# ---------------------------------------------------------------------------
# CSV emitters (plot-ready, no figure rendering here)


def write_importance_csv(table: ImportanceTable, path: str | Path) -> None:
    Path(path).write_text(table.to_csv())


def write_curves_csv(curves: list[EffectCurve], path: str | Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["kind", "dim", "target_class", "knot", "value", "ci_lo", "ci_hi"])
    for curve in curves:
        w.writerows(curve.to_rows())
    Path(path).write_text(buf.getvalue())


def write_histogram_csv(hist: list[tuple[int, int]], path: str | Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["dim", "n_logits"])
    w.writerows(hist)
    Path(path).write_text(buf.getvalue())


def write_overlap_csv(patterns: dict[tuple[int, ...], int], path: str | Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["logits", "n_dims"])
    for key in sorted(patterns, key=lambda k: (-patterns[k], k)):
        w.writerow(["+".join(str(c) for c in key), patterns[key]])
    Path(path).write_text(buf.getvalue())

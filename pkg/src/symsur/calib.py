"""Temperature scaling, reliability diagrams, and probability-quality
metrics (ECE, Brier, log-loss)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc
from sklearn.base import BaseEstimator

__all__ = [
    "CLIP",
    "CalibrationReport",
    "ReliabilityBin",
    "TemperatureScaler",
    "apply_temperature",
    "brier",
    "clopper_pearson",
    "ece",
    "fit_temperature",
    "log_loss",
    "reliability",
    "softmax",
]

CLIP = 1e-6
_T_LO, _T_HI = 0.05, 20.0
_GOLDEN_TOL = 1e-4  # in ln T


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def nll(probs, y, clip: float = CLIP) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y)
    p_true = np.clip(probs[np.arange(len(y)), y], clip, 1.0 - clip)
    return float(-np.log(p_true).mean())


def log_loss(probs, y) -> float:
    """Mean negative log of the true-class probability, clipped."""
    return nll(probs, y)


def brier(probs, y) -> float:
    """Multiclass Brier score, mean_i sum_c (p_ic - 1[y_i = c])^2, without
    the 1/K normalization."""
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y)
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(y)), y] = 1.0
    return float(((probs - onehot) ** 2).sum(axis=1).mean())


def ece(probs, y, bins: int = 20) -> float:
    """Expected calibration error over equal-width top-label confidence bins."""
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y)
    conf = probs.max(axis=1)
    correct = probs.argmax(axis=1) == y
    idx = np.minimum((conf * bins).astype(int), bins - 1)
    total = len(y)
    out = 0.0
    for b in range(bins):
        mask = idx == b
        n_b = int(mask.sum())
        if n_b == 0:
            continue
        out += (n_b / total) * abs(correct[mask].mean() - conf[mask].mean())
    return float(out)


def apply_temperature(z, T: float) -> np.ndarray:
    """softmax(z / T); rows sum to 1."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    return softmax(np.asarray(z, dtype=np.float64) / T)


def fit_temperature(z_val, y_val) -> float:
    """Scalar T > 0 minimizing validation NLL, by golden-section search on
    ln T over [0.05, 20]. Degenerate all-equal logits return T = 1."""
    z_val = np.asarray(z_val, dtype=np.float64)
    if z_val.shape[1] < 2:
        raise ValueError("need at least 2 classes")
    if np.allclose(z_val, z_val[:, :1]):
        return 1.0

    def objective(ln_t: float) -> float:
        return nll(apply_temperature(z_val, math.exp(ln_t)), y_val)

    a, b = math.log(_T_LO), math.log(_T_HI)
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > _GOLDEN_TOL:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = objective(d)
    best = math.exp(0.5 * (a + b))
    # never hand back a temperature that fits worse than the identity
    if objective(math.log(best)) > objective(0.0):
        return 1.0
    return best


def _beta_ppf(q: float, a: float, b: float, tol: float = 1e-10) -> float:
    """Quantile of Beta(a, b) by bisecting the regularized incomplete beta."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if betainc(a, b, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def clopper_pearson(successes: int, count: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact binomial confidence interval; (0, ...) at zero successes and
    (..., 1) at full success."""
    if not 0 <= successes <= count or count <= 0:
        raise ValueError("need 0 <= successes <= count, count > 0")
    lo = 0.0 if successes == 0 else _beta_ppf(alpha / 2, successes, count - successes + 1)
    hi = 1.0 if successes == count else _beta_ppf(1 - alpha / 2, successes + 1, count - successes)
    return lo, hi


@dataclass(frozen=True)
class ReliabilityBin:
    lower: float
    upper: float
    count: int
    mean_confidence: float
    accuracy: float
    ci_lo: float
    ci_hi: float


def reliability(probs, y, bins: int = 20, alpha: float = 0.05) -> list[ReliabilityBin]:
    """Equal-width confidence bins over [0, 1]; empty bins omitted; accuracy
    intervals are Clopper-Pearson."""
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y)
    conf = probs.max(axis=1)
    correct = probs.argmax(axis=1) == y
    idx = np.minimum((conf * bins).astype(int), bins - 1)
    out = []
    for b in range(bins):
        mask = idx == b
        n_b = int(mask.sum())
        if n_b == 0:
            continue
        successes = int(correct[mask].sum())
        lo, hi = clopper_pearson(successes, n_b, alpha)
        out.append(
            ReliabilityBin(
                lower=b / bins,
                upper=(b + 1) / bins,
                count=n_b,
                mean_confidence=float(conf[mask].mean()),
                accuracy=successes / n_b,
                ci_lo=lo,
                ci_hi=hi,
            )
        )
    return out


@dataclass
class CalibrationReport:
    temperature: float
    pre: dict[str, float]
    post: dict[str, float]
    bins_pre: list[ReliabilityBin] = field(default_factory=list)
    bins_post: list[ReliabilityBin] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "pre": self.pre,
            "post": self.post,
            "bins_pre": [vars(b) for b in self.bins_pre],
            "bins_post": [vars(b) for b in self.bins_post],
        }


def calibration_report(z, y, T: float, bins: int = 20) -> CalibrationReport:
    """Pre- vs post-scaling probability quality on one split."""
    p_pre = apply_temperature(z, 1.0)
    p_post = apply_temperature(z, T)
    metrics = lambda p: {
        "log_loss": log_loss(p, y),
        "brier": brier(p, y),
        "ece": ece(p, y, bins),
    }
    return CalibrationReport(
        temperature=T,
        pre=metrics(p_pre),
        post=metrics(p_post),
        bins_pre=reliability(p_pre, y, bins),
        bins_post=reliability(p_post, y, bins),
    )


class TemperatureScaler(BaseEstimator):
    """Estimator-style wrapper around fit_temperature/apply_temperature.
    fit() consumes validation logits; transform() maps logits to calibrated
    probabilities."""

    def fit(self, z, y):
        self.temperature_ = fit_temperature(z, y)
        return self

    def transform(self, z) -> np.ndarray:
        if not hasattr(self, "temperature_"):
            raise RuntimeError("TemperatureScaler is not fitted")
        return apply_temperature(z, self.temperature_)

    predict_proba = transform

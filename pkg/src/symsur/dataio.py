"""Embedding dataset container, EMBD/CSV file formats, standardization,
within-tower pooling, and split management."""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "SPLIT_TRAIN",
    "SPLIT_VAL",
    "SPLIT_TEST",
    "SPLIT_NAMES",
    "DatasetMeta",
    "EmbeddingDataset",
    "ZScoreStats",
    "load",
    "save",
    "zscore_fit",
    "zscore_apply",
    "pool_2to1",
    "pool_dataset",
    "make_splits",
    "synthetic_blobs",
]

MAGIC = b"EMBD"
VERSION = 1
_HEADER = struct.Struct("<4sHQIII")  # magic, version, n, d, K, tower_boundary

SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST = 0, 1, 2
SPLIT_NAMES = {SPLIT_TRAIN: "train", SPLIT_VAL: "val", SPLIT_TEST: "test"}
_SPLIT_CODES = {v: k for k, v in SPLIT_NAMES.items()}

# hard ceiling on n*d so corrupt headers cannot trigger giant allocations
_MAX_CELLS = 1 << 33


class FormatError(ValueError):
    """Corrupt or inconsistent dataset file."""


@dataclass(frozen=True)
class DatasetMeta:
    name: str
    d: int
    n_classes: int
    tower_boundary: int = 0  # 0 = single tower


@dataclass
class EmbeddingDataset:
    """n x d embedding matrix with labels and frozen split tags.

    Read-only after load; operations that change tags return a new dataset.
    """

    X: np.ndarray  # (n, d) float32
    y: np.ndarray  # (n,) int64 in [0, K)
    split: np.ndarray  # (n,) int8, codes SPLIT_*
    meta: DatasetMeta

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return self.meta.n_classes

    def mask(self, split_code: int) -> np.ndarray:
        return self.split == split_code

    def rows(self, split_code: int) -> tuple[np.ndarray, np.ndarray]:
        m = self.mask(split_code)
        return self.X[m], self.y[m]

    def split_counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.split == code)) for code, name in SPLIT_NAMES.items()}


def _validate(ds: EmbeddingDataset) -> EmbeddingDataset:
    n, d = ds.X.shape
    if ds.y.shape != (n,) or ds.split.shape != (n,):
        raise FormatError("labels/split length does not match row count")
    K = ds.meta.n_classes
    if K < 1:
        raise FormatError("class count must be positive")
    if ds.y.size and (ds.y.min() < 0 or ds.y.max() >= K):
        raise FormatError(f"label outside [0, {K})")
    present = np.unique(ds.y)
    if ds.y.size and len(present) != K:
        missing = sorted(set(range(K)) - set(int(c) for c in present))
        raise FormatError(f"labels do not cover [0, {K}): missing classes {missing}")
    if not np.isin(ds.split, list(SPLIT_NAMES)).all():
        raise FormatError("split tags must be 0 (train), 1 (val) or 2 (test)")
    b = ds.meta.tower_boundary
    if b and not 0 < b < d:
        raise FormatError(f"tower boundary {b} outside (0, {d})")
    if ds.meta.d != d:
        raise FormatError("metadata d does not match matrix width")
    return ds


def save(ds: EmbeddingDataset, path: str | Path) -> None:
    """Write the little-endian EMBD binary format."""
    path = Path(path)
    _validate(ds)
    n, d = ds.X.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, d, ds.meta.n_classes, ds.meta.tower_boundary))
        fh.write(np.ascontiguousarray(ds.X, dtype="<f4").tobytes())
        fh.write(ds.y.astype("<u4").tobytes())
        fh.write(ds.split.astype("u1").tobytes())


def load(path: str | Path) -> EmbeddingDataset:
    """Load an EMBD file, or fall back to CSV (header ``y,split,x0..``)."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return _load_embd(path)
    return _load_csv(path)


def _load_embd(path: Path) -> EmbeddingDataset:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file too short for EMBD header")
    magic, version, n, d, K, boundary = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError("bad magic")
    if version != VERSION:
        raise FormatError(f"unsupported EMBD version {version}")
    if n * d > _MAX_CELLS:
        raise FormatError(f"n*d = {n * d} exceeds sane limits")
    expected = _HEADER.size + n * d * 4 + n * 4 + n
    if len(raw) != expected:
        raise FormatError(f"file size {len(raw)} != expected {expected}")
    off = _HEADER.size
    X = np.frombuffer(raw, dtype="<f4", count=n * d, offset=off).reshape(n, d).copy()
    off += n * d * 4
    y = np.frombuffer(raw, dtype="<u4", count=n, offset=off).astype(np.int64)
    off += n * 4
    split = np.frombuffer(raw, dtype="u1", count=n, offset=off).astype(np.int8)
    meta = DatasetMeta(path.stem, d, K, boundary)
    return _validate(EmbeddingDataset(X, y, split, meta))


def _load_csv(path: Path) -> EmbeddingDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV") from None
        if header[:2] != ["y", "split"]:
            raise FormatError("CSV header must start with y,split")
        d = len(header) - 2
        ys, splits, rows = [], [], []
        for line in reader:
            if not line:
                continue
            if len(line) != d + 2:
                raise FormatError(f"CSV row has {len(line)} fields, expected {d + 2}")
            ys.append(int(line[0]))
            tag = line[1].strip()
            if tag in _SPLIT_CODES:
                splits.append(_SPLIT_CODES[tag])
            elif tag.isdigit():
                splits.append(int(tag))
            else:
                raise FormatError(f"bad split tag {tag!r}")
            rows.append(line[2:])
    X = np.asarray(rows, dtype=np.float32)
    y = np.asarray(ys, dtype=np.int64)
    split = np.asarray(splits, dtype=np.int8)
    K = int(y.max()) + 1 if y.size else 0
    meta = DatasetMeta(path.stem, d, K, 0)
    return _validate(EmbeddingDataset(X, y, split, meta))


def save_csv(ds: EmbeddingDataset, path: str | Path) -> None:
    _validate(ds)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["y", "split"] + [f"x{i}" for i in range(ds.d)])
    for yi, si, row in zip(ds.y, ds.split, ds.X):
        writer.writerow([int(yi), SPLIT_NAMES[int(si)]] + [repr(float(v)) for v in row])
    Path(path).write_text(buf.getvalue())


@dataclass(frozen=True)
class ZScoreStats:
    mu: np.ndarray
    sigma: np.ndarray  # population standard deviation
    epsilon: float = 1e-8


def zscore_fit(ds: EmbeddingDataset, epsilon: float = 1e-8) -> ZScoreStats:
    """Per-dimension mean and population std over training rows only."""
    X_train = ds.X[ds.mask(SPLIT_TRAIN)].astype(np.float64)
    if X_train.shape[0] < 2:
        raise ValueError("need at least 2 training rows to fit standardization")
    mu = X_train.mean(axis=0)
    sigma = np.sqrt(np.mean((X_train - mu) ** 2, axis=0))
    return ZScoreStats(mu, sigma, epsilon)


def zscore_apply(stats: ZScoreStats, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != stats.mu.shape[0]:
        raise ValueError(f"matrix has {X.shape[1]} columns, stats expect {stats.mu.shape[0]}")
    return (X - stats.mu) / (stats.sigma + stats.epsilon)


def pool_2to1(X, tower_boundary: int = 0) -> np.ndarray:
    """Non-overlapping 2:1 average pooling along the feature axis, applied
    independently within each tower; tower order is preserved."""
    X = np.asarray(X)
    d = X.shape[1]
    spans = [(0, tower_boundary), (tower_boundary, d)] if tower_boundary else [(0, d)]
    out = []
    for lo, hi in spans:
        width = hi - lo
        if width % 2:
            raise ValueError(f"tower [{lo}, {hi}) has odd width {width}")
        block = X[:, lo:hi]
        out.append((block[:, 0::2] + block[:, 1::2]) / 2)
    return np.concatenate(out, axis=1)


def pool_dataset(ds: EmbeddingDataset) -> EmbeddingDataset:
    """Pool a dataset 2:1 within its towers, halving d and the boundary."""
    pooled = pool_2to1(ds.X, ds.meta.tower_boundary).astype(ds.X.dtype)
    meta = replace(ds.meta, d=pooled.shape[1], tower_boundary=ds.meta.tower_boundary // 2)
    return EmbeddingDataset(pooled, ds.y, ds.split, meta)


def make_splits(ds: EmbeddingDataset, val_fraction: float, seed: int) -> EmbeddingDataset:
    """Re-tag a class-stratified ceil(val_fraction * n_train) of the training
    rows as validation. Deterministic for a given seed."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must lie in (0, 1)")
    if np.any(ds.split == SPLIT_VAL):
        raise ValueError("dataset already has validation tags")
    rng = np.random.default_rng(seed)
    train_idx = np.flatnonzero(ds.split == SPLIT_TRAIN)
    n_train = len(train_idx)
    target = int(np.ceil(val_fraction * n_train))

    y_train = ds.y[train_idx]
    classes = np.unique(y_train)
    quotas = {}
    fracs = []
    for c in classes:
        exact = val_fraction * np.sum(y_train == c)
        quotas[int(c)] = int(np.floor(exact))
        fracs.append((-(exact - np.floor(exact)), int(c)))
    remainder = target - sum(quotas.values())
    for _, c in sorted(fracs)[:remainder]:
        quotas[c] += 1

    split = ds.split.copy()
    for c in classes:
        members = train_idx[y_train == c]
        chosen = rng.permutation(members)[: quotas[int(c)]]
        split[chosen] = SPLIT_VAL
    return EmbeddingDataset(ds.X, ds.y, split, ds.meta)


def synthetic_blobs(
    n: int = 1200,
    d: int = 64,
    n_classes: int = 3,
    n_informative: int = 8,
    separation: float = 3.0,
    test_fraction: float = 1.0 / 3.0,
    seed: int = 0,
    name: str = "blobs",
) -> EmbeddingDataset:
    """Gaussian class blobs living in a few informative coordinates, the
    rest pure noise. The desk-scale stand-in for a real embedding corpus."""
    if not 0 < n_informative <= d:
        raise ValueError("need 0 < n_informative <= d")
    rng = np.random.default_rng(seed)
    informative = np.sort(rng.choice(d, size=n_informative, replace=False))
    means = rng.normal(scale=separation, size=(n_classes, n_informative))
    y = rng.permutation(np.arange(n) % n_classes)
    X = rng.normal(size=(n, d))
    X[:, informative] += means[y]

    split = np.full(n, SPLIT_TRAIN, dtype=np.int8)
    for c in range(n_classes):
        members = np.flatnonzero(y == c)
        n_test = int(round(test_fraction * len(members)))
        split[rng.permutation(members)[:n_test]] = SPLIT_TEST

    meta = DatasetMeta(name, d, n_classes, 0)
    return _validate(
        EmbeddingDataset(X.astype(np.float32), y.astype(np.int64), split, meta)
    )

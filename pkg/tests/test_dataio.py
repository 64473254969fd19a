import numpy as np
import pytest

from symsur import dataio
from symsur.dataio import (
    SPLIT_TEST,
    SPLIT_TRAIN,
    SPLIT_VAL,
    DatasetMeta,
    EmbeddingDataset,
    FormatError,
)


def tiny_dataset(n=6, d=3, K=2, seed=0, with_val=True):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)).astype(np.float32)
    y = (np.arange(n) % K).astype(np.int64)
    split = np.zeros(n, dtype=np.int8)
    split[-2:] = SPLIT_TEST
    if with_val:
        split[-3] = SPLIT_VAL
    return EmbeddingDataset(X, y, split, DatasetMeta("tiny", d, K, 0))


# ---------------------------------------------------------------------------
# EMBD / CSV formats


def test_embd_roundtrip_bit_exact(tmp_path):
    ds = tiny_dataset(n=2, d=3, K=2, with_val=False)
    path = tmp_path / "tiny.embd"
    dataio.save(ds, path)
    back = dataio.load(path)
    assert back.X.tobytes() == ds.X.tobytes()
    assert back.y.tolist() == ds.y.tolist()
    assert back.split.tolist() == ds.split.tolist()
    assert back.meta.n_classes == 2
    assert back.meta.tower_boundary == 0


def test_csv_and_embd_load_identically(tmp_path):
    ds = tiny_dataset(n=8, d=4, K=2)
    dataio.save(ds, tmp_path / "a.embd")
    dataio.save_csv(ds, tmp_path / "a.csv")
    a = dataio.load(tmp_path / "a.embd")
    b = dataio.load(tmp_path / "a.csv")
    assert a.X.tobytes() == b.X.tobytes()
    assert a.y.tolist() == b.y.tolist()
    assert a.split.tolist() == b.split.tolist()


def test_load_rejects_label_out_of_range(tmp_path):
    ds = tiny_dataset(n=4, d=2, K=2)
    ds.y[0] = 5
    ds.meta = DatasetMeta("tiny", 2, 2, 0)
    with pytest.raises(FormatError):
        dataio.save(ds, tmp_path / "bad.embd")


def test_load_rejects_bad_version(tmp_path):
    ds = tiny_dataset()
    path = tmp_path / "v.embd"
    dataio.save(ds, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 99  # version word
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        dataio.load(path)


def test_load_rejects_truncation(tmp_path):
    ds = tiny_dataset()
    path = tmp_path / "t.embd"
    dataio.save(ds, path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FormatError):
        dataio.load(path)


def test_load_rejects_missing_class(tmp_path):
    ds = tiny_dataset(n=4, d=2, K=2)
    ds.y[:] = 0  # class 1 never appears
    with pytest.raises(FormatError):
        dataio.save(ds, tmp_path / "m.embd")


def test_csv_requires_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(FormatError):
        dataio.load(p)


def test_csv_rejects_bad_split_tag(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("y,split,x0\n0,train,1.0\n1,banana,2.0\n")
    with pytest.raises(FormatError):
        dataio.load(p)


def test_csv_accepts_numeric_split_codes(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("y,split,x0\n0,0,1.0\n1,2,2.0\n")
    ds = dataio.load(p)
    assert ds.split.tolist() == [0, 2]


# ---------------------------------------------------------------------------
# z-scoring


def test_zscore_fit_simple():
    X = np.array([[0.0], [2.0]], dtype=np.float32)
    ds = EmbeddingDataset(X, np.array([0, 1]), np.zeros(2, dtype=np.int8), DatasetMeta("z", 1, 2))
    stats = dataio.zscore_fit(ds)
    assert stats.mu.tolist() == [1.0]
    assert stats.sigma.tolist() == [1.0]  # population std


def test_zscore_constant_column_stays_finite():
    X = np.ones((4, 2), dtype=np.float32)
    ds = EmbeddingDataset(
        X, np.array([0, 1, 0, 1]), np.zeros(4, dtype=np.int8), DatasetMeta("c", 2, 2)
    )
    stats = dataio.zscore_fit(ds)
    assert stats.sigma.tolist() == [0.0, 0.0]
    out = dataio.zscore_apply(stats, X)
    assert np.isfinite(out).all()


def test_zscore_matches_two_pass_oracle(rng):
    X = rng.normal(size=(100, 16)).astype(np.float32)
    ds = EmbeddingDataset(
        X, (np.arange(100) % 3).astype(np.int64), np.zeros(100, dtype=np.int8),
        DatasetMeta("o", 16, 3),
    )
    stats = dataio.zscore_fit(ds)
    X64 = X.astype(np.float64)
    mu = np.array([X64[:, j].sum() / 100 for j in range(16)])
    sigma = np.array(
        [np.sqrt(((X64[:, j] - mu[j]) ** 2).sum() / 100) for j in range(16)]
    )
    np.testing.assert_allclose(stats.mu, mu, atol=1e-12)
    np.testing.assert_allclose(stats.sigma, sigma, atol=1e-12)


def test_zscore_apply_centers_training_rows(rng):
    ds = dataio.synthetic_blobs(n=120, d=8, n_classes=2, n_informative=3, seed=4)
    stats = dataio.zscore_fit(ds)
    out = dataio.zscore_apply(stats, ds.X[ds.mask(SPLIT_TRAIN)])
    assert np.abs(out.mean(axis=0)).max() < 1e-9


def test_zscore_apply_row_equal_to_mu_is_zero():
    X = np.array([[1.0, 5.0], [3.0, 7.0]], dtype=np.float32)
    ds = EmbeddingDataset(X, np.array([0, 1]), np.zeros(2, dtype=np.int8), DatasetMeta("m", 2, 2))
    stats = dataio.zscore_fit(ds)
    out = dataio.zscore_apply(stats, stats.mu[None, :])
    assert np.abs(out).max() < 1e-12


def test_zscore_apply_matches_direct_formula(rng):
    train = rng.normal(size=(10, 4)).astype(np.float32)
    val = rng.normal(size=(10, 4)).astype(np.float32)
    ds = EmbeddingDataset(
        train, (np.arange(10) % 2).astype(np.int64), np.zeros(10, dtype=np.int8),
        DatasetMeta("d", 4, 2),
    )
    stats = dataio.zscore_fit(ds)
    got = dataio.zscore_apply(stats, val)
    want = (val.astype(np.float64) - stats.mu) / (stats.sigma + stats.epsilon)
    np.testing.assert_allclose(got, want, atol=0)


def test_zscore_fit_needs_two_rows():
    ds = tiny_dataset(n=4)
    ds.split[:] = SPLIT_TEST
    with pytest.raises(ValueError):
        dataio.zscore_fit(ds)


def test_zscore_apply_shape_mismatch():
    X = np.zeros((3, 2), dtype=np.float32)
    ds = EmbeddingDataset(
        X, np.array([0, 1, 0]), np.zeros(3, dtype=np.int8), DatasetMeta("s", 2, 2)
    )
    stats = dataio.zscore_fit(ds)
    with pytest.raises(ValueError):
        dataio.zscore_apply(stats, np.zeros((3, 5)))


def test_zscore_ignores_poisoned_val_and_test_rows():
    ds = tiny_dataset(n=10, d=3, K=2)
    ds.X[ds.split != SPLIT_TRAIN] = np.nan
    stats = dataio.zscore_fit(ds)
    assert np.isfinite(stats.mu).all() and np.isfinite(stats.sigma).all()


# ---------------------------------------------------------------------------
# pooling


def test_pool_single_tower():
    out = dataio.pool_2to1(np.array([[1.0, 3.0, 5.0, 7.0]]))
    assert out.tolist() == [[2.0, 6.0]]


def test_pool_two_towers():
    out = dataio.pool_2to1(np.array([[1.0, 3.0, 10.0, 20.0]]), tower_boundary=2)
    assert out.tolist() == [[2.0, 15.0]]


def test_pool_matches_index_arithmetic_oracle(rng):
    X = rng.normal(size=(5, 1152))
    out = dataio.pool_2to1(X, tower_boundary=576)
    assert out.shape == (5, 576)
    for j in range(288):
        np.testing.assert_allclose(out[:, j], (X[:, 2 * j] + X[:, 2 * j + 1]) / 2)
    for j in range(288):
        src = 576 + 2 * j
        np.testing.assert_allclose(out[:, 288 + j], (X[:, src] + X[:, src + 1]) / 2)


def test_pool_rejects_odd_tower():
    with pytest.raises(ValueError):
        dataio.pool_2to1(np.zeros((2, 5)))
    with pytest.raises(ValueError):
        dataio.pool_2to1(np.zeros((2, 6)), tower_boundary=3)


def test_pool_dataset_halves_boundary():
    X = np.arange(16, dtype=np.float32).reshape(2, 8)
    ds = EmbeddingDataset(
        X, np.array([0, 1]), np.zeros(2, dtype=np.int8), DatasetMeta("p", 8, 2, 4)
    )
    pooled = dataio.pool_dataset(ds)
    assert pooled.d == 4
    assert pooled.meta.tower_boundary == 2


# ---------------------------------------------------------------------------
# splits


def _train_only(n=100, K=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3)).astype(np.float32)
    y = (np.arange(n) % K).astype(np.int64)
    return EmbeddingDataset(X, y, np.zeros(n, dtype=np.int8), DatasetMeta("s", 3, K))


def test_make_splits_exact_count():
    ds = dataio.make_splits(_train_only(100), 0.1, seed=0)
    assert int(np.sum(ds.split == SPLIT_VAL)) == 10


def test_make_splits_deterministic():
    a = dataio.make_splits(_train_only(100), 0.1, seed=5)
    b = dataio.make_splits(_train_only(100), 0.1, seed=5)
    assert a.split.tolist() == b.split.tolist()
    c = dataio.make_splits(_train_only(100), 0.1, seed=6)
    assert a.split.tolist() != c.split.tolist()


def test_make_splits_stratified_within_one_row():
    ds = dataio.make_splits(_train_only(103, K=5, seed=2), 0.17, seed=1)
    y_val = ds.y[ds.split == SPLIT_VAL]
    y_all = ds.y[(ds.split == SPLIT_VAL) | (ds.split == SPLIT_TRAIN)]
    for c in range(5):
        exact = 0.17 * np.sum(y_all == c)
        got = np.sum(y_val == c)
        assert abs(got - exact) < 1.0


def test_make_splits_validation():
    with pytest.raises(ValueError):
        dataio.make_splits(_train_only(), 0.0, seed=0)
    with pytest.raises(ValueError):
        dataio.make_splits(_train_only(), 1.0, seed=0)
    ds = dataio.make_splits(_train_only(), 0.1, seed=0)
    with pytest.raises(ValueError):
        dataio.make_splits(ds, 0.1, seed=0)


def test_make_splits_does_not_mutate_input():
    ds = _train_only(50)
    before = ds.split.copy()
    dataio.make_splits(ds, 0.2, seed=0)
    assert ds.split.tolist() == before.tolist()


# ---------------------------------------------------------------------------
# synthetic generator


def test_synthetic_blobs_shape_and_coverage():
    ds = dataio.synthetic_blobs(n=300, d=10, n_classes=3, n_informative=4, seed=0)
    assert ds.X.shape == (300, 10)
    assert set(np.unique(ds.y)) == {0, 1, 2}
    counts = ds.split_counts()
    assert counts["train"] > 0 and counts["test"] > 0
    assert counts["train"] + counts["test"] == 300


def test_synthetic_blobs_deterministic():
    a = dataio.synthetic_blobs(n=50, d=6, n_informative=3, seed=9)
    b = dataio.synthetic_blobs(n=50, d=6, n_informative=3, seed=9)
    assert a.X.tobytes() == b.X.tobytes()
    assert a.split.tolist() == b.split.tolist()


def test_synthetic_blobs_rejects_bad_informative_count():
    with pytest.raises(ValueError):
        dataio.synthetic_blobs(n=50, d=6, n_informative=8)

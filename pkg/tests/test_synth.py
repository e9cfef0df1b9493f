import numpy as np
import pytest

from malvis.prs import derive_layout, encode_batch
from malvis.synth import SynthConfig, gen_dataset, split_train_test


def test_full_scale_shape():
    X, y = gen_dataset(SynthConfig(n_benign=3000, n_malign=1465))
    assert X.shape == (4465, 128)
    assert (y == 0).sum() == 3000 and (y == 1).sum() == 1465
    assert X.min() >= 0 and X.max() < 2**32
    assert X.dtype == np.int64


def test_empty():
    X, y = gen_dataset(SynthConfig(n_benign=0, n_malign=0))
    assert X.shape == (0, 128) and y.shape == (0,)


def test_malign_has_more_nonzero_windows():
    X, y = gen_dataset(SynthConfig(n_benign=1000, n_malign=1000, rng_seed=4))
    nz_b = (X[y == 0] > 0).sum(axis=1).mean()
    nz_m = (X[y == 1] > 0).sum(axis=1).mean()
    assert nz_m >= 2 * nz_b


def test_malign_images_carry_more_ink():
    X, y = gen_dataset(SynthConfig(n_benign=500, n_malign=500, rng_seed=5))
    ink = encode_batch(X, derive_layout(128))
    black = ink.sum(axis=(1, 2))
    assert black[y == 1].mean() > black[y == 0].mean()


def test_deterministic():
    a = gen_dataset(SynthConfig(n_benign=20, n_malign=20, rng_seed=3))
    b = gen_dataset(SynthConfig(n_benign=20, n_malign=20, rng_seed=3))
    assert all(np.array_equal(u, v) for u, v in zip(a, b))


@pytest.mark.parametrize("kwargs", [
    {"benign_sparsity": 0.5, "malign_sparsity": 0.4},
    {"benign_scale": 50.0, "malign_scale": 10.0},
    {"malign_sparsity": 1.5},
    {"n_benign": -1},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def test_split():
    X, y = gen_dataset(SynthConfig(n_benign=3228, n_malign=1693))
    (Xtr, ytr), (Xte, yte) = split_train_test(X, y, 228, rng_seed=1)
    assert len(yte) == 456 and (yte == 1).sum() == 228
    assert (ytr == 0).sum() == 3000 and (ytr == 1).sum() == 1465
    (_, _), (_, ye) = split_train_test(X, y, 0)
    assert len(ye) == 0
    with pytest.raises(ValueError):
        split_train_test(X[:10], y[:10], 228)


def test_split_is_a_partition():
    ids = np.arange(60).reshape(-1, 1)
    y = np.array([0] * 40 + [1] * 20)
    (tr, _), (te, _) = split_train_test(ids, y, 5, rng_seed=2)
    assert not set(tr.ravel()) & set(te.ravel())
    assert set(tr.ravel()) | set(te.ravel()) == set(range(60))

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malvis.prs import SampleRecord
from malvis.smote import (SmoteConfig, balance, interpolate, nearest_neighbors, smote_arrays,
                          smote_oversample, to_counts)


def brute_knn(X, i, k):
    """Neighbours of row i by exact Python arithmetic, ties to the lower index."""
    dists = [(math.dist(X[i], X[j]), j) for j in range(len(X)) if j != i]
    dists.sort()
    kth = dists[k - 1][0]
    # anything tied with the k-th distance is an acceptable neighbour
    return {j for d, j in dists if d <= kth}


def test_alpha_endpoints():
    a, b = np.array([1, 5, 9]), np.array([4, 0, 9])
    assert np.array_equal(interpolate(a, b, 0.0), a)
    assert np.array_equal(interpolate(a, b, 1.0), b)


def test_midpoint():
    assert np.array_equal(to_counts(interpolate(np.zeros(6), np.full(6, 4), 0.5)), np.full(6, 2))


def test_counts_full_scale_balance():
    rng = np.random.default_rng(0)
    minority = [SampleRecord(tuple(r), 1) for r in rng.integers(0, 50, size=(1465, 8))]
    new = smote_oversample(minority, SmoteConfig(k_neighbors=5, target_count=3000, rng_seed=1))
    assert len(new) == 1535
    assert len(minority) + len(new) == 3000
    assert {s.label for s in new} == {1}


def test_errors():
    few = [SampleRecord((i, i), 1) for i in range(5)]
    with pytest.raises(ValueError):
        smote_oversample(few, SmoteConfig(k_neighbors=5, target_count=10))
    mixed = [SampleRecord((1, 2), 1), SampleRecord((1, 2, 3), 1)] * 4
    with pytest.raises(ValueError):
        smote_oversample(mixed, SmoteConfig(k_neighbors=2, target_count=10))
    with pytest.raises(ValueError):
        SmoteConfig(k_neighbors=0)
    with pytest.raises(ValueError):
        smote_oversample([SampleRecord((i,), 1) for i in range(8)],
                         SmoteConfig(k_neighbors=2, target_count=3))


def test_knn_tie_break_lower_index():
    X = np.array([[0, 0], [1, 0], [0, 1], [-1, 0]])
    assert list(nearest_neighbors(X, 3)[0]) == [1, 2, 3]


@given(st.integers(0, 2**31), st.integers(6, 40), st.integers(1, 5))
@settings(max_examples=25, deadline=None)
def test_segment_and_neighbor_properties(seed, n, k):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 30, size=(n, 4))
    out, (base, neigh, alpha) = smote_arrays(X, 3 * n, k, seed, return_trace=True)
    assert len(out) == 3 * n
    assert np.all(out >= 0)
    assert np.all((alpha >= 0) & (alpha <= 1))
    for row, b, t, a in zip(out, base, neigh, alpha):
        assert t in brute_knn(X, b, k)
        exact = X[b] + (X[t] - X[b]) * a
        assert np.all(np.abs(row - exact) <= 0.5 + 1e-9)
        lo, hi = np.minimum(X[b], X[t]), np.maximum(X[b], X[t])
        assert np.all((exact >= lo - 1e-9) & (exact <= hi + 1e-9))


def test_round_robin_bases():
    X = np.arange(40).reshape(10, 4)
    _, (base, _, _) = smote_arrays(X, 25, 3, 0, return_trace=True)
    assert list(base[:12]) == list(range(10)) + [0, 1]


def test_determinism():
    X = np.random.default_rng(1).integers(0, 100, size=(30, 5))
    assert np.array_equal(smote_arrays(X, 40, 5, 9), smote_arrays(X, 40, 5, 9))
    assert not np.array_equal(smote_arrays(X, 40, 5, 9), smote_arrays(X, 40, 5, 10))


def test_zero_new_samples():
    X = np.ones((10, 3), dtype=np.int64)
    assert smote_arrays(X, 0, 3, 0).shape == (0, 3)


def test_balance():
    rng = np.random.default_rng(2)
    X = rng.integers(0, 10, size=(30, 4))
    y = np.array([0] * 20 + [1] * 10)
    Xb, yb = balance(X, y, 3, 0)
    assert (yb == 0).sum() == (yb == 1).sum() == 20
    assert np.array_equal(Xb[:30], X)

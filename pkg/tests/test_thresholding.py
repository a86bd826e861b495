import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nnsparse.thresholding import (SparseSignal, hard_threshold, negative_part, relu,
                                   relu_threshold, restrict, top_k_indices)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def sort_oracle(v, k):
    keyed = sorted(range(len(v)), key=lambda i: (-abs(v[i]), i))
    return sorted(keyed[:k])


def test_relu_examples():
    np.testing.assert_array_equal(relu([1, -2, 0, 3]), [1, 0, 0, 3])
    np.testing.assert_array_equal(relu([0.5, 2.0]), [0.5, 2.0])
    np.testing.assert_array_equal(relu([-1.0, -3.0]), [0.0, 0.0])


@given(arrays(np.float64, st.integers(1, 30), elements=finite))
def test_relu_splits_vector(v):
    assert np.all(relu(v) >= 0)
    np.testing.assert_array_equal(relu(v) + negative_part(v), v)


def test_top_k_examples():
    assert list(top_k_indices([5, -7, 2], 2)) == [0, 1]
    assert list(top_k_indices([1, 1, 1], 2)) == [0, 1]


def test_top_k_random_vs_sort(rng):
    for _ in range(50):
        v = rng.integers(-3, 4, size=12).astype(float)
        assert list(top_k_indices(v, 4)) == sort_oracle(list(v), 4)


@pytest.mark.parametrize("k", [0, 4])
def test_top_k_range(k):
    with pytest.raises(ValueError):
        top_k_indices([1.0, 2.0, 3.0], k)


def test_hard_threshold_examples():
    np.testing.assert_array_equal(hard_threshold([3, -1, 2, 0, 5], 2).values, [3, 0, 0, 0, 5])
    v = np.array([0, 4.0, 0, -1.0])
    np.testing.assert_array_equal(hard_threshold(v, 2).values, v)


def test_hard_threshold_best_approximation(rng):
    for _ in range(30):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, n + 1))
        v = rng.standard_normal(n)
        best = min(np.linalg.norm(v - restrict(v, S))
                   for S in itertools.combinations(range(n), k))
        assert np.linalg.norm(v - hard_threshold(v, k).values) <= best + 1e-12


@settings(max_examples=100)
@given(arrays(np.float64, st.integers(1, 25), elements=finite), st.data())
def test_hard_threshold_properties(v, data):
    k = data.draw(st.integers(1, v.size))
    h = hard_threshold(v, k)
    assert h.nnz <= k
    kept = np.abs(v[h.support])
    dropped = np.abs(np.delete(v, h.support))
    if kept.size and dropped.size:
        assert kept.min() >= dropped.max()


def test_relu_threshold_short_support():
    S = relu_threshold([-1.0, 2.0, -3.0, 0.0], 3)
    assert list(S) == [1]


@given(arrays(np.float64, st.integers(1, 25), elements=finite), st.data())
def test_relu_threshold_properties(u, data):
    k = data.draw(st.integers(1, u.size))
    S = relu_threshold(u, k)
    assert S.size <= k and np.all(u[S] > 0)
    assert S.size == min(k, int(np.sum(u > 0)))


def test_restrict():
    np.testing.assert_array_equal(restrict([1, 2, 3], [1]), [0, 2, 0])
    np.testing.assert_array_equal(restrict([1, 2, 3], [0, 1, 2]), [1, 2, 3])
    np.testing.assert_array_equal(restrict([1, 2, 3], []), [0, 0, 0])
    with pytest.raises(IndexError):
        restrict([1, 2, 3], [3])


def test_sparse_signal_invariants():
    s = SparseSignal.from_dense([0.0, 1.5, 0.0, 2.0])
    assert list(s.support) == [1, 3] and s.nonneg and s.nnz == 2 and s.n == 4
    np.testing.assert_array_equal(np.asarray(s), s.values)
    assert not SparseSignal.from_dense([-1.0, 0.0]).nonneg
    with pytest.raises(ValueError):
        SparseSignal.from_dense([-1.0], nonneg=True)

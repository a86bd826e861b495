"""Support-manipulation primitives: ReLU, top-k selection, hard thresholding."""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SparseSignal",
    "hard_threshold",
    "negative_part",
    "positive_part",
    "relu",
    "relu_threshold",
    "restrict",
    "support",
    "top_k_indices",
]


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """Dense vector with its support precomputed.

    ``support`` is the sorted array of indices of nonzero entries.
    """

    values: np.ndarray
    support: np.ndarray
    nonneg: bool

    @classmethod
    def from_dense(cls, values, nonneg=None):
        v = np.asarray(values, dtype=np.float64)
        if nonneg is None:
            nonneg = bool(np.all(v >= 0))
        elif nonneg and np.any(v < 0):
            raise ValueError("nonneg flag set on a vector with negative entries")
        return cls(v, np.flatnonzero(v), bool(nonneg))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def nnz(self):
        return int(self.support.size)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def relu(v):
    return np.maximum(np.asarray(v, dtype=np.float64), 0.0)


positive_part = relu


def negative_part(v):
    """``v - relu(v)``, i.e. the entrywise ``min(v, 0)``."""
    return np.minimum(np.asarray(v, dtype=np.float64), 0.0)


def support(v):
    return np.flatnonzero(v)


def _check_k(k, n):
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")


def top_k_indices(v, k):
    """Sorted indices of the ``k`` largest-magnitude entries.

    Ties are broken in favour of the smaller index.
    """
    v = np.asarray(v, dtype=np.float64)
    _check_k(k, v.shape[0])
    # stable sort on -|v| keeps ascending index order among equal magnitudes
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:k])


def hard_threshold(v, k):
    """Best k-term approximation: keep the top-k magnitudes, zero the rest."""
    v = np.asarray(v, dtype=np.float64)
    idx = top_k_indices(v, k)
    out = np.zeros_like(v)
    out[idx] = v[idx]
    return SparseSignal.from_dense(out)


def relu_threshold(u, k):
    """Indices kept by ``H_k(relu(u))`` restricted to strictly positive entries.

    When fewer than ``k`` entries of ``u`` are positive, all of them are
    returned and the support is smaller than ``k``.
    """
    p = relu(u)
    idx = top_k_indices(p, k)
    return idx[p[idx] > 0]


def restrict(v, S):
    """``v`` with entries outside ``S`` set to zero."""
    v = np.asarray(v, dtype=np.float64)
    S = np.asarray(S, dtype=np.intp).ravel()
    if S.size and (S.min() < 0 or S.max() >= v.shape[0]):
        raise IndexError("support index out of range")
    out = np.zeros_like(v)
    out[S] = v[S]
    return out

"""Exact k-nearest-neighbor index sets.

Both query strategies return the same :class:`NeighborhoodIndex`: row ``i``
starts with ``i`` itself, followed by the remaining ``k - 1`` points ordered by
squared Euclidean distance, ties broken by the smaller index. Squared
distances are computed by one shared routine and compared exactly, which is
what makes the tree path reproduce the brute-force path bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dataset import as_data_matrix
from .errors import NeighborhoodError

__all__ = [
    "TREE_MAX_DIM",
    "NeighborhoodIndex",
    "knn",
    "knn_bruteforce",
    "knn_tree",
    "nearest_index",
]

#: Above this input dimension :func:`knn_tree` falls back to brute force.
TREE_MAX_DIM = 15


@dataclass(frozen=True)
class NeighborhoodIndex:
    """``sets[i]`` lists the ``k`` neighbors of point ``i`` (0-based), self first.

    ``sqdist[i, j]`` is the squared distance from point ``i`` to ``sets[i, j]``.
    """

    k: int
    sets: np.ndarray
    sqdist: np.ndarray

    @property
    def N(self) -> int:
        return self.sets.shape[0]

    def __len__(self):
        return self.N

    def __getitem__(self, i):
        return self.sets[i]

    def __eq__(self, other):
        if not isinstance(other, NeighborhoodIndex):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.sets, other.sets)

    __hash__ = None

    def membership_counts(self) -> np.ndarray:
        """Number of neighborhoods each point belongs to."""
        return np.bincount(self.sets.ravel(), minlength=self.N)


def _points(X):
    # points as rows, contiguous, so every distance reduction runs the same way
    return np.ascontiguousarray(as_data_matrix(X).T)


def _sqdist(P, i, cand):
    diff = P[cand] - P[i]
    return np.einsum("ij,ij->i", diff, diff)


def _select(i, cand, d2, k):
    """Self first, then the ``k - 1`` closest others by (distance, index)."""
    mask = cand != i
    cand, d2 = cand[mask], d2[mask]
    if k > 1 and len(cand) > 4 * k:
        # keep everything up to the (k-1)-th smallest distance, ties included
        keep = d2 <= np.partition(d2, k - 2)[k - 2]
        cand, d2 = cand[keep], d2[keep]
    order = np.lexsort((cand, d2))[: k - 1]
    return np.concatenate(([i], cand[order])), np.concatenate(([0.0], d2[order]))


def _check_k(k, N):
    if not isinstance(k, (int, np.integer)):
        raise NeighborhoodError(f"k must be an integer, got {k!r}")
    if k < 1:
        raise NeighborhoodError(f"k must be at least 1, got {k}")
    if k > N:
        raise NeighborhoodError(f"k={k} exceeds the number of points N={N}")


def knn_bruteforce(X, k: int, block: int = 512) -> NeighborhoodIndex:
    """Exhaustive k-NN over all pairs.

    A BLAS Gram product ranks every pair approximately; all points that can
    still be among the ``k`` nearest once its rounding error is accounted for
    are re-scored with the exact squared-distance routine.
    """
    P = _points(X)
    N, m = P.shape
    _check_k(k, N)
    sets = np.empty((N, k), dtype=np.intp)
    dist = np.empty((N, k))
    norms = np.einsum("ij,ij->i", P, P)
    # |approx - exact| <= err_i for every pair in row i (generous constant)
    err = 4.0 * (m + 4) * np.finfo(float).eps * (norms + norms.max())
    for start in range(0, N, block):
        rows = np.arange(start, min(start + block, N))
        approx = norms[rows, np.newaxis] + norms[np.newaxis, :] - 2.0 * (P[rows] @ P.T)
        kth = np.partition(approx, k - 1, axis=1)[:, k - 1]
        for r, i in enumerate(rows):
            cand = np.flatnonzero(approx[r] <= kth[r] + 2.0 * err[i])
            sets[i], dist[i] = _select(i, cand, _sqdist(P, i, cand), k)
    return NeighborhoodIndex(k, sets, dist)


def knn_tree(X, k: int, max_dim: int = TREE_MAX_DIM) -> NeighborhoodIndex:
    """k-NN through a k-d tree, identical to :func:`knn_bruteforce`.

    The tree only proposes candidates: every point within the (slightly
    inflated) k-th tree distance is re-scored with the exact squared distance
    and the usual tie rule. For input dimension above ``max_dim`` the tree is
    skipped entirely.
    """
    P = _points(X)
    N, m = P.shape
    _check_k(k, N)
    if m > max_dim or k == N:
        return knn_bruteforce(X, k)
    tree = cKDTree(P)
    radius, _ = tree.query(P, k=k)
    radius = radius.reshape(N, -1)[:, -1]
    sets = np.empty((N, k), dtype=np.intp)
    dist = np.empty((N, k))
    for i in range(N):
        r = radius[i] * (1 + 1e-9) + 1e-300
        cand = np.asarray(tree.query_ball_point(P[i], r), dtype=np.intp)
        sets[i], dist[i] = _select(i, cand, _sqdist(P, i, cand), k)
    return NeighborhoodIndex(k, sets, dist)


def knn(X, k: int, method: str = "auto", max_dim: int = TREE_MAX_DIM) -> NeighborhoodIndex:
    """Dispatch to the tree (``auto``/``tree``) or the brute-force path."""
    if method == "brute":
        return knn_bruteforce(X, k)
    if method in ("auto", "tree"):
        return knn_tree(X, k, max_dim=max_dim)
    raise NeighborhoodError(f"unknown neighbor method {method!r}")


def nearest_index(P, q) -> int:
    """Index of the row of ``P`` closest to ``q``; ties go to the smaller index."""
    diff = P - q
    d2 = np.einsum("ij,ij->i", diff, diff)
    return int(np.flatnonzero(d2 == d2.min())[0])

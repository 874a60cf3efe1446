"""Exact Euclidean k-nearest-neighbor search.

Neighbors are ranked by squared distance with ties broken by ascending row
index, so every backend returns identical tables and the K-list is always a
prefix of the (K+1)-list. The anchor itself is excluded; duplicate rows are
kept at distance zero and flagged.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._accel import resolve_backend
from .errors import ContractError, KTooLarge
from .linalg import as_matrix


@dataclass(frozen=True)
class NeighborList:
    anchor: int
    indices: np.ndarray
    distances: np.ndarray

    @property
    def has_duplicates(self):
        return bool(self.distances.size and self.distances[0] == 0.0)


@dataclass(frozen=True)
class NeighborTable:
    anchors: np.ndarray  # (A,)
    indices: np.ndarray  # (A, K)
    distances: np.ndarray  # (A, K), ascending per row
    K: int

    @property
    def duplicate_mask(self):
        """Anchors whose neighborhood contains a zero distance."""
        return self.distances[:, 0] == 0.0

    def row(self, i):
        return NeighborList(int(self.anchors[i]), self.indices[i], self.distances[i])

    def prefix(self, K):
        """Table restricted to the first ``K`` neighbors."""
        if not 1 <= K <= self.K:
            raise ContractError(f"prefix K={K} outside 1..{self.K}")
        return NeighborTable(self.anchors, self.indices[:, :K], self.distances[:, :K], K)


def _check_k(n, K, what="K"):
    if K < 1:
        raise ContractError(f"{what} must be >= 1")
    if K > n - 1:
        raise KTooLarge(f"{what}={K} exceeds N-1={n - 1}")


def knn_all(Z, K, anchors=None, backend=None):
    """Exact K nearest neighbors of every anchor (default: all rows).

    Parameters
    ----------
    Z : array (N, d)
    K : int
        Neighbors per anchor, ``1 <= K <= N - 1``.
    anchors : sequence of int, optional
    backend : {"numpy", "numba", "kdtree"}, optional
        Defaults to numba unless ``REPGEOM_DISABLE_NUMBA`` is set.
    """
    Z = as_matrix(Z, "Z")
    n = Z.shape[0]
    _check_k(n, K)
    if anchors is None:
        anchors = np.arange(n, dtype=np.int64)
    else:
        anchors = np.asarray(anchors, dtype=np.int64).ravel()
        if anchors.size and (anchors.min() < 0 or anchors.max() >= n):
            raise ContractError("anchor index out of range")
    idx, sq = _kernels.knn_sq(Z, anchors, K, resolve_backend(backend))
    return NeighborTable(anchors=anchors, indices=idx, distances=np.sqrt(sq), K=K)


def knn_query(Z, anchor, K, backend=None):
    """Neighbor list of a single anchor row."""
    Z = as_matrix(Z, "Z")
    if not 0 <= anchor < Z.shape[0]:
        raise ContractError(f"anchor {anchor} out of range")
    return knn_all(Z, K, anchors=[anchor], backend=backend).row(0)


def neighborhood_extract(Z, anchor, m, backend=None):
    """The anchor row followed by its ``m`` nearest neighbors, shape (m+1, d)."""
    Z = as_matrix(Z, "Z")
    _check_k(Z.shape[0], m, "m")
    nl = knn_query(Z, anchor, m, backend=backend)
    return Z[np.concatenate(([anchor], nl.indices))]


"""Hot loops: exact k-NN selection and pair-distance counting.

Each kernel has a numba version and a numpy version. Both evaluate the
squared Euclidean distance as a left-to-right sum over columns of
``(z_j - z_a) ** 2``, so they agree bit for bit. Neighbor order is the
total order (squared distance, row index).
"""
import numpy as np

from ._accel import NUMBA_AVAILABLE, njit

if NUMBA_AVAILABLE:
    from numba import prange
else:  # pragma: no cover
    prange = range

# cap on the (anchors x rows) distance block held by the numpy path
_BLOCK_ELEMS = 1 << 21


# ---------------------------------------------------------------- k-NN


@njit(parallel=True)
def _knn_numba(Z, anchors, K):
    n, d = Z.shape
    A = anchors.shape[0]
    out_idx = np.empty((A, K), dtype=np.int64)
    out_sq = np.empty((A, K), dtype=np.float64)
    for a in prange(A):
        ai = anchors[a]
        bd = np.full(K, np.inf)
        bi = np.full(K, -1, dtype=np.int64)
        for j in range(n):
            if j == ai:
                continue
            s = 0.0
            for c in range(d):
                diff = Z[j, c] - Z[ai, c]
                s += diff * diff
            if s < bd[K - 1]:
                pos = K - 1
                while pos > 0 and bd[pos - 1] > s:
                    bd[pos] = bd[pos - 1]
                    bi[pos] = bi[pos - 1]
                    pos -= 1
                bd[pos] = s
                bi[pos] = j
        out_idx[a, :] = bi
        out_sq[a, :] = bd
    return out_idx, out_sq


def _block_sq(Z, rows):
    """Squared distances from ``Z[rows]`` to every row, summed column by column."""
    ZT = np.ascontiguousarray(Z.T)
    acc = np.zeros((rows.shape[0], Z.shape[0]))
    tmp = np.empty_like(acc)
    for c in range(Z.shape[1]):
        np.subtract(ZT[c][None, :], ZT[c, rows][:, None], out=tmp)
        np.multiply(tmp, tmp, out=tmp)
        acc += tmp
    return acc


def _knn_numpy(Z, anchors, K):
    n, d = Z.shape
    A = anchors.shape[0]
    out_idx = np.empty((A, K), dtype=np.int64)
    out_sq = np.empty((A, K), dtype=np.float64)
    block = max(1, _BLOCK_ELEMS // max(n, 1))
    for start in range(0, A, block):
        rows = anchors[start:start + block]
        acc = _block_sq(Z, rows)
        acc[np.arange(rows.shape[0]), rows] = np.inf
        order = _select_k(acc, K)
        out_idx[start:start + rows.shape[0]] = order
        out_sq[start:start + rows.shape[0]] = np.take_along_axis(acc, order, axis=1)
    return out_idx, out_sq


def _select_k(acc, K):
    """Row-wise K smallest under (value, column) order."""
    n = acc.shape[1]
    if K >= n:
        return np.argsort(acc, axis=1, kind="stable")[:, :K]
    part = np.argpartition(acc, K - 1, axis=1)[:, :K]
    vals = np.take_along_axis(acc, part, axis=1)
    kth = vals.max(axis=1)
    # argpartition may pick any of several entries tied with the K-th value
    tied = (acc <= kth[:, None]).sum(axis=1) > K
    for r in np.flatnonzero(tied):
        part[r] = np.argsort(acc[r], kind="stable")[:K]
        vals[r] = acc[r, part[r]]
    order = np.lexsort((part, vals), axis=-1)
    return np.take_along_axis(part, order, axis=1)


def _sq_dist_to(Z, a, cand):
    acc = np.zeros(cand.shape[0])
    for c in range(Z.shape[1]):
        diff = Z[cand, c] - Z[a, c]
        acc += diff * diff
    return acc


def _knn_kdtree(Z, anchors, K):
    """Tree prunes candidates; exact distances and tie order are recomputed."""
    from scipy.spatial import cKDTree

    tree = cKDTree(Z)
    n = Z.shape[0]
    kq = min(K + 1, n)
    tree_d, _ = tree.query(Z[anchors], k=kq)
    tree_d = np.asarray(tree_d).reshape(anchors.shape[0], kq)
    out_idx = np.empty((anchors.shape[0], K), dtype=np.int64)
    out_sq = np.empty((anchors.shape[0], K), dtype=np.float64)
    for r, a in enumerate(anchors):
        radius = tree_d[r, -1]
        radius = radius * (1.0 + 1e-9) + 1e-300
        cand = np.asarray(tree.query_ball_point(Z[a], radius), dtype=np.int64)
        cand = cand[cand != a]
        sq = _sq_dist_to(Z, a, cand)
        order = np.lexsort((cand, sq))[:K]
        out_idx[r] = cand[order]
        out_sq[r] = sq[order]
    return out_idx, out_sq


def knn_sq(Z, anchors, K, backend):
    """Indices and squared distances of the K nearest rows of each anchor."""
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    anchors = np.ascontiguousarray(anchors, dtype=np.int64)
    if backend == "numba":
        return _knn_numba(Z, anchors, K)
    if backend == "kdtree":
        return _knn_kdtree(Z, anchors, K)
    return _knn_numpy(Z, anchors, K)


# ---------------------------------------------------------- pair counts


@njit(parallel=True)
def _pair_hist_numba(Z, eps):
    n, d = Z.shape
    E = eps.shape[0]
    hist = np.zeros((n, E + 1), dtype=np.int64)
    for i in prange(n):
        for j in range(i + 1, n):
            s = 0.0
            for c in range(d):
                diff = Z[j, c] - Z[i, c]
                s += diff * diff
            b = np.searchsorted(eps, np.sqrt(s), side="right")
            hist[i, b] += 1
    return hist.sum(axis=0)


def _pair_hist_numpy(Z, eps):
    n, d = Z.shape
    hist = np.zeros(eps.shape[0] + 1, dtype=np.int64)
    block = max(1, _BLOCK_ELEMS // max(n, 1))
    for start in range(0, n, block):
        rows = np.arange(start, min(n, start + block))
        acc = _block_sq(Z, rows)
        upper = np.arange(n)[None, :] > rows[:, None]
        dist = np.sqrt(acc[upper])
        b = np.searchsorted(eps, dist, side="right")
        hist += np.bincount(b, minlength=eps.shape[0] + 1)
    return hist


@njit(parallel=True)
def _sampled_hist_numba(Z, pi, pj, eps):
    P = pi.shape[0]
    d = Z.shape[1]
    E = eps.shape[0]
    bins = np.empty(P, dtype=np.int64)
    for p in prange(P):
        s = 0.0
        for c in range(d):
            diff = Z[pj[p], c] - Z[pi[p], c]
            s += diff * diff
        bins[p] = np.searchsorted(eps, np.sqrt(s), side="right")
    hist = np.zeros(E + 1, dtype=np.int64)
    for p in range(P):
        hist[bins[p]] += 1
    return hist


def _sampled_hist_numpy(Z, pi, pj, eps):
    hist = np.zeros(eps.shape[0] + 1, dtype=np.int64)
    chunk = 1 << 20
    for start in range(0, pi.shape[0], chunk):
        a = pi[start:start + chunk]
        b = pj[start:start + chunk]
        acc = np.zeros(a.shape[0])
        for c in range(Z.shape[1]):
            diff = Z[b, c] - Z[a, c]
            acc += diff * diff
        hist += np.bincount(np.searchsorted(eps, np.sqrt(acc), side="right"),
                            minlength=eps.shape[0] + 1)
    return hist


def pairs_within(Z, eps, backend, pairs=None):
    """Number of pairs with distance strictly below each ``eps`` value.

    ``pairs`` optionally restricts counting to an explicit (i, j) sample.
    """
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    use_numba = backend == "numba"
    if pairs is None:
        hist = _pair_hist_numba(Z, eps) if use_numba else _pair_hist_numpy(Z, eps)
    else:
        pi = np.ascontiguousarray(pairs[0], dtype=np.int64)
        pj = np.ascontiguousarray(pairs[1], dtype=np.int64)
        if use_numba:
            hist = _sampled_hist_numba(Z, pi, pj, eps)
        else:
            hist = _sampled_hist_numpy(Z, pi, pj, eps)
    # bin b holds pairs with exactly b thresholds <= distance
    return np.cumsum(hist)[:-1]

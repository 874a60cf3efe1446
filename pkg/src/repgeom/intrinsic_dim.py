"""Local intrinsic-dimension estimators and their dataset-level modes.

Point estimators take the ascending distances ``T_1 <= ... <= T_K`` from an
anchor to its K nearest neighbors:

* ``mle``  -- Levina-Bickel: ``(K - 1) / sum_{j<K} log(T_K / T_j)``
* ``mom``  -- method of moments: ``mu / (T_K - mu)``, ``mu = mean(T)``
* ``mada`` -- two-scale ratio: ``log 2 / log(T_K / T_ceil(K/2))``

The dataset value at scale K is the arithmetic mean of the per-point
estimates. Points whose neighborhood is degenerate (a zero distance, or no
spread in the distances the estimator uses) are left out of the mean and
counted.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._accel import resolve_backend
from ._seeding import derive_rng
from .errors import (
    AllDegenerate,
    ContractError,
    DegenerateNeighborhood,
    InsufficientRange,
    KTooLarge,
)
from .linalg import as_matrix
from .neighbors import knn_all, knn_query

ESTIMATORS = ("mle", "mom", "mada")
AGGREGATES = ("mean", "harmonic")

# all pairs are counted up to this many points, a seeded sample beyond
CORRDIM_EXACT_MAX_N = 5000
CORRDIM_SAMPLED_PAIRS = 10_000_000


def _mle(D):
    K = D.shape[1]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        logs = np.log(D[:, -1:] / D[:, :-1])
        s = logs.sum(axis=1)
        est = (K - 1) / s
    ok = (D[:, 0] > 0) & (s > 0) & np.isfinite(est) & (est > 0)
    return est, ok


def _mom(D):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        mu = D.mean(axis=1)
        gap = D[:, -1] - mu
        est = mu / gap
    ok = (D[:, 0] > 0) & (D[:, -1] > D[:, 0]) & (gap > 0) & np.isfinite(est)
    return est, ok


def _mada(D):
    K = D.shape[1]
    half = D[:, math.ceil(K / 2) - 1]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        est = math.log(2.0) / np.log(D[:, -1] / half)
    ok = (D[:, 0] > 0) & (D[:, -1] > half) & np.isfinite(est) & (est > 0)
    return est, ok


_POINT = {"mle": _mle, "mom": _mom, "mada": _mada}


def _check_estimator(estimator):
    if estimator not in _POINT:
        raise ContractError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")


def point_estimates(distances, estimator="mle"):
    """Per-row estimates for an (A, K) distance table.

    Returns ``(values, ok)``; ``values`` is NaN where ``ok`` is False.
    """
    _check_estimator(estimator)
    D = np.ascontiguousarray(distances, dtype=np.float64)
    if D.ndim != 2 or D.shape[1] < 2:
        raise ContractError("need at least K=2 distances per point")
    est, ok = _POINT[estimator](D)
    est = np.where(ok, est, np.nan)
    return est, ok


def _single(distances, estimator):
    d = np.asarray(distances, dtype=np.float64).ravel()
    if d.size < 2:
        raise ContractError("need at least K=2 distances")
    if np.any(np.diff(d) < 0):
        raise ContractError("distances must be ascending")
    est, ok = point_estimates(d[None, :], estimator)
    if not ok[0]:
        raise DegenerateNeighborhood(f"{estimator} undefined for distances {d.tolist()}")
    return float(est[0])


def mle_point(distances):
    return _single(distances, "mle")


def mom_point(distances):
    return _single(distances, "mom")


def mada_point(distances):
    return _single(distances, "mada")


@dataclass
class IdEstimate:
    estimator: str
    K: int
    mode: str
    value: float
    per_point: np.ndarray | None = None
    n_evaluated: int = 0
    n_excluded: int = 0
    meta: dict = field(default_factory=dict)


@dataclass
class IdCurve:
    K_values: np.ndarray
    estimates: np.ndarray
    details: list = field(default_factory=list)


def aggregate(values, how="mean"):
    """Mean of per-point estimates, exact and independent of row order."""
    values = [float(v) for v in values]
    if how == "mean":
        return math.fsum(values) / len(values)
    if how == "harmonic":
        return len(values) / math.fsum(1.0 / v for v in values)
    raise ContractError(f"unknown aggregate {how!r}; expected one of {AGGREGATES}")


def id_from_distances(distances, estimator="mle", how="mean", mode="global", meta=None):
    """Dataset estimate from a precomputed (N, K) neighbor-distance table."""
    est, ok = point_estimates(distances, estimator)
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise AllDegenerate(f"every point has a degenerate neighborhood for {estimator}")
    return IdEstimate(
        estimator=estimator,
        K=int(np.shape(distances)[1]),
        mode=mode,
        value=aggregate(est[ok], how),
        per_point=est,
        n_evaluated=n_ok,
        n_excluded=int(ok.size - n_ok),
        meta=dict(meta or {}, aggregate=how),
    )


def id_dataset(Z, K, estimator="mle", how="mean", backend=None):
    """Scale-K intrinsic dimension averaged over all rows of ``Z``."""
    _check_estimator(estimator)
    Z = as_matrix(Z, "Z")
    if K < 2:
        raise ContractError("K must be >= 2")
    table = knn_all(Z, K, backend=backend)
    return id_from_distances(table.distances, estimator, how)


def scale_sweep(Z, K_list, estimator="mle", how="mean", backend=None):
    """Dataset estimates at several scales from one neighbor table."""
    _check_estimator(estimator)
    K_values = np.asarray(K_list, dtype=np.int64).ravel()
    if K_values.size == 0:
        raise ContractError("K_list is empty")
    if np.any(np.diff(K_values) <= 0):
        raise ContractError("K_list must be strictly increasing")
    if K_values[0] < 2:
        raise ContractError("K must be >= 2")
    Z = as_matrix(Z, "Z")
    table = knn_all(Z, int(K_values[-1]), backend=backend)
    details = [id_from_distances(table.distances[:, :k], estimator, how) for k in K_values]
    return IdCurve(K_values=K_values, estimates=np.array([d.value for d in details]),
                   details=details)


def local_id(Z, seed, neighborhood=1000, K=20, estimator="mle", how="mean", backend=None):
    """Estimate inside the neighborhood of one randomly drawn anchor.

    The anchor is drawn uniformly from the rows of ``Z``; the anchor plus its
    ``neighborhood`` nearest neighbors form the point set that is averaged.
    """
    _check_estimator(estimator)
    Z = as_matrix(Z, "Z")
    n = Z.shape[0]
    if neighborhood > n - 1:
        raise KTooLarge(f"neighborhood={neighborhood} exceeds N-1={n - 1}")
    if K > neighborhood:
        raise KTooLarge(f"K={K} exceeds neighborhood={neighborhood}")
    anchor = int(derive_rng(seed, "local_id.anchor").integers(n))
    rows = np.concatenate(([anchor], knn_query(Z, anchor, neighborhood, backend=backend).indices))
    est = id_dataset(Z[rows], K, estimator, how, backend=backend)
    est.mode = "local_knn"
    est.meta.update(anchor=anchor, neighborhood=neighborhood, seed=int(seed), indices=rows)
    return est


def subsample_id(Z, n_sub=1000, seed=0, K=20, estimator="mle", how="mean", backend=None):
    """Estimate on a uniform without-replacement subsample of rows."""
    _check_estimator(estimator)
    Z = as_matrix(Z, "Z")
    n = Z.shape[0]
    if n_sub > n:
        raise KTooLarge(f"n_sub={n_sub} exceeds N={n}")
    if K > n_sub - 1:
        raise KTooLarge(f"K={K} exceeds n_sub-1={n_sub - 1}")
    idx = np.sort(derive_rng(seed, "subsample_id.rows").choice(n, size=n_sub, replace=False))
    est = id_dataset(Z[idx], K, estimator, how, backend=backend)
    est.mode = "random_subsample"
    est.meta.update(indices=idx, n_sub=n_sub, seed=int(seed))
    return est


@dataclass
class CorrelationDimension:
    slope: float
    intercept: float
    epsilons: np.ndarray
    C: np.ndarray
    used: np.ndarray  # mask of epsilons inside the fit range
    n_pairs: int
    sampled: bool


def correlation_integral(Z, epsilons, seed=0, backend=None):
    """Fraction of point pairs closer than each epsilon.

    Returns ``(C, n_pairs, sampled)``.
    """
    Z = as_matrix(Z, "Z")
    eps = np.asarray(epsilons, dtype=np.float64).ravel()
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
        raise ContractError("epsilons must be positive and strictly ascending")
    backend = resolve_backend(backend)
    if backend == "kdtree":
        backend = "numpy"
    n = Z.shape[0]
    if n <= CORRDIM_EXACT_MAX_N:
        counts = _kernels.pairs_within(Z, eps, backend)
        total = n * (n - 1) // 2
        return counts / total, total, False
    rng = derive_rng(seed, "correlation_dimension.pairs")
    counts = np.zeros(eps.size, dtype=np.int64)
    chunk = 1_000_000
    for start in range(0, CORRDIM_SAMPLED_PAIRS, chunk):
        m = min(chunk, CORRDIM_SAMPLED_PAIRS - start)
        i = rng.integers(n, size=m)
        j = rng.integers(n - 1, size=m)
        j += j >= i
        counts += _kernels.pairs_within(Z, eps, backend, pairs=(i, j))
    return counts / CORRDIM_SAMPLED_PAIRS, CORRDIM_SAMPLED_PAIRS, True


def correlation_dimension(Z, epsilons, seed=0, backend=None):
    """Slope of ``log C(eps)`` against ``log eps`` by least squares.

    Only epsilons with ``0 < C(eps) < 1`` enter the fit; at least three are
    required.
    """
    Z = as_matrix(Z, "Z")
    if Z.shape[0] < 10:
        raise ContractError("correlation dimension needs N >= 10")
    eps = np.asarray(epsilons, dtype=np.float64).ravel()
    C, n_pairs, sampled = correlation_integral(Z, eps, seed=seed, backend=backend)
    used = (C > 0) & (C < 1)
    if used.sum() < 3:
        raise InsufficientRange(
            f"only {int(used.sum())} epsilons give 0 < C(eps) < 1; need 3")
    slope, intercept = np.polyfit(np.log(eps[used]), np.log(C[used]), 1)
    return CorrelationDimension(float(slope), float(intercept), eps, C, used, n_pairs, sampled)


def default_epsilons(Z, n=12, seed=0, lo_q=0.001, hi_q=0.1):
    """Log-spaced radii between low quantiles of a sample of pair distances."""
    Z = as_matrix(Z, "Z")
    N = Z.shape[0]
    rng = derive_rng(seed, "default_epsilons")
    m = min(200_000, N * (N - 1) // 2)
    i = rng.integers(N, size=m)
    j = rng.integers(N - 1, size=m)
    j += j >= i
    d = np.sqrt(((Z[i] - Z[j]) ** 2).sum(axis=1))
    d = d[d > 0]
    if d.size == 0:
        raise InsufficientRange("all points coincide")
    lo, hi = np.quantile(d, [lo_q, hi_q])
    if not hi > lo:
        raise InsufficientRange("pair distances have no spread")
    return np.geomspace(lo, hi, n)

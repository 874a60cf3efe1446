"""Dense primitives shared by the alignment pipelines: centering, PCA,
closed-form ridge regression and R^2 scoring.

Everything is computed in float64 whatever the input dtype.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantTarget,
    ContractError,
    DegenerateData,
    DimensionMismatch,
    NonFiniteValue,
    SingularSystem,
)

RANK_RTOL = 1e-10


def as_matrix(M, name="matrix"):
    """Validate and return ``M`` as a finite 2-D float64 array."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ContractError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        r, c = np.argwhere(~np.isfinite(M))[0]
        raise NonFiniteValue(f"{name} has a non-finite value at row {r}, column {c}")
    return M


def center_columns(M):
    """Subtract column means.

    Returns
    -------
    centered : ndarray
    means : ndarray, shape (cols,)
    """
    M = as_matrix(M)
    means = M.mean(axis=0)
    return M - means, means


@dataclass(frozen=True)
class PcaModel:
    means: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    singular_values: np.ndarray
    n_samples: int
    scale: np.ndarray | None = None

    @property
    def n_components(self):
        return self.components.shape[0]

    @property
    def explained_variance(self):
        return self.singular_values ** 2 / max(self.n_samples - 1, 1)


def pca_fit(M_train, n_components, standardize=False):
    """Fit PCA by SVD of the column-centered training matrix.

    Keeps ``min(n_components, rows - 1, cols)`` components, ordered by
    descending singular value. Component signs are fixed so the
    largest-magnitude loading of each component is positive.

    ``standardize`` additionally scales columns to unit variance before the
    SVD; off by default.
    """
    M = as_matrix(M_train, "training matrix")
    if n_components < 1:
        raise ContractError("n_components must be >= 1")
    n, d = M.shape
    if n < 2:
        raise ContractError("PCA needs at least 2 rows")
    Mc, means = center_columns(M)
    if not np.any(Mc):
        raise DegenerateData("all rows are identical; total variance is zero")
    scale = None
    if standardize:
        scale = Mc.std(axis=0, ddof=1)
        scale[scale == 0] = 1.0
        Mc = Mc / scale
    k = min(n_components, n - 1, d)
    _, s, Vt = np.linalg.svd(Mc, full_matrices=False)
    Vt = Vt[:k]
    s = s[:k]
    pivot = np.argmax(np.abs(Vt), axis=1)
    signs = np.sign(Vt[np.arange(k), pivot])
    signs[signs == 0] = 1.0
    return PcaModel(means=means, components=Vt * signs[:, None], singular_values=s,
                    n_samples=n, scale=scale)


def pca_project(model, M):
    """Scores ``(M - means) @ components.T``."""
    M = as_matrix(M)
    if M.shape[1] != model.means.shape[0]:
        raise DimensionMismatch(
            f"matrix has {M.shape[1]} columns, PCA model expects {model.means.shape[0]}")
    Mc = M - model.means
    if model.scale is not None:
        Mc = Mc / model.scale
    return Mc @ model.components.T


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray  # (d, m)
    intercepts: np.ndarray  # (m,)
    lam: float | np.ndarray  # scalar, or one value per target

    def predict(self, X):
        X = as_matrix(X)
        if X.shape[1] != self.weights.shape[0]:
            raise DimensionMismatch(
                f"X has {X.shape[1]} columns, model expects {self.weights.shape[0]}")
        return X @ self.weights + self.intercepts


class RidgeSolver:
    """SVD of one centered design, reused for any number of penalties.

    With ``Xc = U S V^T`` the centered ridge solution is
    ``W = V diag(s / (s^2 + lam)) U^T Yc``; the intercept is never penalized.
    """

    def __init__(self, X):
        X = as_matrix(X, "X")
        self.x_mean = X.mean(axis=0)
        Xc = X - self.x_mean
        U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
        self.U, self.s, self.Vt = U, s, Vt
        smax = s[0] if s.size else 0.0
        self.rank = int(np.sum(s > RANK_RTOL * smax)) if smax > 0 else 0
        self.n_rows, self.n_cols = X.shape

    def project_targets(self, Y):
        """Returns ``(U^T Yc, y_mean)``."""
        y_mean = Y.mean(axis=0)
        return self.U.T @ (Y - y_mean), y_mean

    def weights(self, UtY, lam):
        """Weights for a scalar penalty or one penalty per target column."""
        lam = np.asarray(lam, dtype=np.float64)
        s = self.s
        if np.any(lam == 0):
            if self.rank < self.n_cols:
                raise SingularSystem(
                    f"lambda=0 with rank-deficient design (rank {self.rank} of {self.n_cols})")
        if lam.ndim == 0:
            f = s / (s * s + lam)
            return self.Vt.T @ (f[:, None] * UtY)
        f = s[:, None] / (s[:, None] ** 2 + lam[None, :])
        return self.Vt.T @ (f * UtY)


def ridge_fit(X, Y, lam):
    """Closed-form ridge regression on column-centered data.

    Parameters
    ----------
    X : array (n, d)
    Y : array (n, m) or (n,)
    lam : float or array of length m
        Non-negative penalty, shared or per target.

    Raises
    ------
    SingularSystem
        ``lam == 0`` and the centered design is rank-deficient.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    if X.shape[0] < 2:
        raise ContractError("ridge needs at least 2 rows")
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(lam_arr < 0) or not np.all(np.isfinite(lam_arr)):
        raise ContractError("lambda must be finite and >= 0")
    if lam_arr.ndim == 1 and lam_arr.shape[0] != Y.shape[1]:
        raise DimensionMismatch("per-target lambda length must match target count")
    solver = RidgeSolver(X)
    UtY, y_mean = solver.project_targets(Y)
    W = solver.weights(UtY, lam_arr)
    intercepts = y_mean - solver.x_mean @ W
    lam_out = float(lam_arr) if lam_arr.ndim == 0 else lam_arr.copy()
    return RidgeModel(weights=W, intercepts=intercepts, lam=lam_out)


def r2_columns(Y_true, Y_pred):
    """Column-wise R^2; NaN for constant columns (variance below 1e-15)."""
    Y_true = np.asarray(Y_true, dtype=np.float64)
    Y_pred = np.asarray(Y_pred, dtype=np.float64)
    if Y_true.ndim == 1:
        Y_true = Y_true[:, None]
        Y_pred = Y_pred[:, None]
    dev = Y_true - Y_true.mean(axis=0)
    ss_tot = np.einsum("ij,ij->j", dev, dev)
    res = Y_true - Y_pred
    ss_res = np.einsum("ij,ij->j", res, res)
    n = Y_true.shape[0]
    out = np.full(Y_true.shape[1], np.nan)
    ok = ss_tot / n >= 1e-15
    out[ok] = 1.0 - ss_res[ok] / ss_tot[ok]
    return out


def r2_score(y_true, y_pred):
    """Coefficient of determination ``1 - SS_res / SS_tot``; may be negative."""
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape or y_true.size < 2:
        raise ContractError("y_true and y_pred need equal length >= 2")
    if np.var(y_true) < 1e-15:
        raise ConstantTarget("y_true is constant")
    ss_res = np.sum((y_true - y_pred) ** 2)
    ss_tot = np.sum((y_true - y_true.mean()) ** 2)
    return float(1.0 - ss_res / ss_tot)

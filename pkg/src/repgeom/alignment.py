"""Predictive alignment between representations.

Both pipelines share one core. Rows are split into train and test. PCA is
fit on the training rows of the predictor, and both partitions are projected
onto at most ``n_components`` components. A ridge penalty is chosen by
k-fold CV inside the training rows, the model is refit on all training rows,
and R^2 is scored on the held-out rows.

* ``fit_encoding`` / ``score_encoding``: embeddings -> responses, one
  target per voxel.
* ``align_models``: embeddings A -> PCA scores of B and back, averaged.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive_rng
from .errors import ContractError, DimensionMismatch, ManifestError, TooFewSamples
from .linalg import RANK_RTOL, RidgeSolver, as_matrix, pca_fit, pca_project, r2_columns, ridge_fit

DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-3, 5, 13))
LAMBDA_MODES = ("per_target", "shared")


@dataclass(frozen=True)
class SplitSpec:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    test_fraction: float


def split_dataset(N, test_fraction=0.2, seed=0):
    """Seeded shuffle; the first ``round(N * test_fraction)`` rows are held out.

    Rounds half up. Index arrays are returned sorted.
    """
    if not 0 < test_fraction < 1:
        raise ContractError("test_fraction must lie in (0, 1)")
    if N < 5:
        raise TooFewSamples(f"need at least 5 rows to split, got {N}")
    n_test = int(math.floor(N * test_fraction + 0.5))
    if n_test < 1 or n_test > N - 1:
        raise TooFewSamples(f"split of {N} rows at {test_fraction} leaves an empty side")
    perm = derive_rng(seed, "split_dataset").permutation(N)
    return SplitSpec(train_indices=np.sort(perm[n_test:]), test_indices=np.sort(perm[:n_test]),
                     seed=int(seed), test_fraction=float(test_fraction))


@dataclass(frozen=True)
class AlignmentConfig:
    n_components: int = 300
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    outer_folds: int = 5
    inner_folds: int = 5
    test_fraction: float = 0.2
    seed: int = 0
    lambda_mode: str = "per_target"
    standardize: bool = False

    def validate(self):
        grid = np.asarray(self.lambda_grid, dtype=np.float64)
        if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ContractError("lambda_grid must be non-empty, positive and ascending")
        if self.inner_folds < 2 or self.outer_folds < 2:
            raise ContractError("fold counts must be >= 2")
        if self.n_components < 1:
            raise ContractError("n_components must be >= 1")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ContractError(f"lambda_mode must be one of {LAMBDA_MODES}")
        if not 0 < self.test_fraction < 1:
            raise ContractError("test_fraction must lie in (0, 1)")

    def as_dict(self):
        return {
            "n_components": self.n_components,
            "lambda_grid": [float(v) for v in self.lambda_grid],
            "outer_folds": self.outer_folds,
            "inner_folds": self.inner_folds,
            "test_fraction": self.test_fraction,
            "seed": self.seed,
            "lambda_mode": self.lambda_mode,
            "standardize": self.standardize,
            "cv_scheme": "single held-out split; lambda by inner k-fold CV on training rows",
        }


@dataclass
class AlignmentResult:
    per_target_r2: np.ndarray
    mean: float
    median: float
    chosen_lambdas: np.ndarray
    split: SplitSpec | None = None
    constant_targets: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ceiling_normalized: np.ndarray | None = None
    n_ceiling_excluded: int = 0


@dataclass
class EncodingFit:
    pca: object
    ridge: object
    split: SplitSpec
    cv_r2: np.ndarray  # (grid, targets) mean validation R^2
    chosen_lambdas: np.ndarray
    constant_targets: np.ndarray
    config: AlignmentConfig


def _folds(n, k, rng):
    return np.array_split(rng.permutation(n), k)


def cv_ridge_scores(X, Y, lambda_grid, n_folds, seed=0):
    """Validation R^2 per (penalty, target), averaged over folds in fold order."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    grid = np.asarray(lambda_grid, dtype=np.float64)
    n = X.shape[0]
    if n < 2 * n_folds:
        raise TooFewSamples(f"{n} training rows for {n_folds}-fold CV; need {2 * n_folds}")
    folds = _folds(n, n_folds, derive_rng(seed, "cv_ridge_scores.folds"))
    total = np.zeros((grid.size, Y.shape[1]))
    seen = np.zeros((grid.size, Y.shape[1]))
    for val in folds:
        fit = np.setdiff1d(np.arange(n), val)
        solver = RidgeSolver(X[fit])
        UtY, y_mean = solver.project_targets(Y[fit])
        P = (X[val] - solver.x_mean) @ solver.Vt.T
        s = solver.s
        for g, lam in enumerate(grid):
            pred = P @ ((s / (s * s + lam))[:, None] * UtY) + y_mean
            r2 = r2_columns(Y[val], pred)
            ok = ~np.isnan(r2)
            total[g, ok] += r2[ok]
            seen[g, ok] += 1
    with np.errstate(invalid="ignore"):
        return np.where(seen > 0, total / np.maximum(seen, 1), np.nan)


def _choose_lambdas(cv_r2, grid, mode):
    m = cv_r2.shape[1]
    scored = ~np.all(np.isnan(cv_r2), axis=0)
    if mode == "shared":
        if not scored.any():
            return np.full(m, grid[0])
        with np.errstate(invalid="ignore"):
            score = np.nanmean(cv_r2[:, scored], axis=1)
        return np.full(m, grid[int(np.argmax(np.where(np.isnan(score), -np.inf, score)))])
    # argmax takes the first maximum, i.e. the smallest penalty on ties
    return grid[np.argmax(np.where(np.isnan(cv_r2), -np.inf, cv_r2), axis=0)]


def fit_encoding(X, Y, cfg=AlignmentConfig(), split=None):
    """Fit PCA + ridge on the training rows of a split.

    Targets that are constant on the training rows are flagged in
    ``constant_targets``; they get the smallest penalty and do not influence
    other targets.
    """
    cfg.validate()
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    if split is None:
        split = split_dataset(X.shape[0], cfg.test_fraction, cfg.seed)
    tr = split.train_indices
    if tr.size < 2 * cfg.inner_folds:
        raise TooFewSamples(f"{tr.size} training rows; need {2 * cfg.inner_folds}")
    pca = pca_fit(X[tr], cfg.n_components, standardize=cfg.standardize)
    Xtr = pca_project(pca, X[tr])
    Ytr = Y[tr]
    constant = np.flatnonzero(Ytr.var(axis=0) < 1e-15)
    grid = np.asarray(cfg.lambda_grid, dtype=np.float64)
    cv_r2 = cv_ridge_scores(Xtr, Ytr, grid, cfg.inner_folds, cfg.seed)
    cv_r2[:, constant] = np.nan
    lambdas = _choose_lambdas(cv_r2, grid, cfg.lambda_mode)
    ridge = ridge_fit(Xtr, Ytr, lambdas)
    return EncodingFit(pca=pca, ridge=ridge, split=split, cv_r2=cv_r2, chosen_lambdas=lambdas,
                       constant_targets=constant, config=cfg)


def _summarize(r2):
    finite = r2[~np.isnan(r2)]
    if finite.size == 0:
        return float("nan"), float("nan")
    return float(np.mean(finite)), float(np.median(finite))


def score_encoding(fitted, X_test, Y_test):
    """Held-out R^2 per target.

    Constant targets (on training or test rows) score NaN and are left out
    of the summary statistics.
    """
    X_test = as_matrix(X_test, "X_test")
    Y_test = as_matrix(Y_test, "Y_test")
    if X_test.shape[0] != Y_test.shape[0]:
        raise DimensionMismatch("X_test and Y_test row counts differ")
    if Y_test.shape[1] != fitted.ridge.weights.shape[1]:
        raise DimensionMismatch("Y_test target count differs from the fitted model")
    pred = fitted.ridge.predict(pca_project(fitted.pca, X_test))
    r2 = r2_columns(Y_test, pred)
    r2[fitted.constant_targets] = np.nan
    mean, median = _summarize(r2)
    return AlignmentResult(per_target_r2=r2, mean=mean, median=median,
                           chosen_lambdas=fitted.chosen_lambdas, split=fitted.split,
                           constant_targets=np.union1d(fitted.constant_targets,
                                                       np.flatnonzero(np.isnan(r2))))


def encode(X, Y, cfg=AlignmentConfig(), split=None):
    """Fit on the training rows and score on the test rows of one split."""
    fitted = fit_encoding(X, Y, cfg, split)
    te = fitted.split.test_indices
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    return score_encoding(fitted, X[te], Y[te])


def cross_validated_encoding(X, Y, cfg=AlignmentConfig()):
    """Outer ``cfg.outer_folds``-fold evaluation with nested penalty selection.

    Returns per-target R^2 averaged over outer folds, as an AlignmentResult
    without a single split.
    """
    cfg.validate()
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    n = X.shape[0]
    folds = _folds(n, cfg.outer_folds, derive_rng(cfg.seed, "cross_validated_encoding.folds"))
    scores, lambdas = [], []
    for test in folds:
        test = np.sort(test)
        split = SplitSpec(np.setdiff1d(np.arange(n), test), test, cfg.seed, test.size / n)
        res = encode(X, Y, cfg, split)
        scores.append(res.per_target_r2)
        lambdas.append(res.chosen_lambdas)
    S = np.vstack(scores)
    with np.errstate(invalid="ignore"):
        r2 = np.where(np.all(np.isnan(S), axis=0), np.nan,
                      np.nanmean(np.where(np.isnan(S), np.nan, S), axis=0))
    mean, median = _summarize(r2)
    return AlignmentResult(per_target_r2=r2, mean=mean, median=median,
                           chosen_lambdas=np.median(np.vstack(lambdas), axis=0),
                           constant_targets=np.flatnonzero(np.isnan(r2)))


@dataclass
class ModelAlignment:
    score: float
    a_to_b: AlignmentResult
    b_to_a: AlignmentResult


def _pca_targets(Z, split, cfg):
    """Training-fit PCA scores of ``Z``, dropping components with no variance."""
    pca = pca_fit(Z[split.train_indices], cfg.n_components, standardize=cfg.standardize)
    s = pca.singular_values
    keep = s > RANK_RTOL * s[0]
    return pca_project(pca, Z)[:, keep]


def align_models(Za, Zb, cfg=AlignmentConfig()):
    """Mean of the A->B and B->A mean held-out R^2 on one shared split.

    Targets in each direction are the PCA scores of the predicted model,
    with PCA fit on training rows only.
    """
    cfg.validate()
    Za = as_matrix(Za, "Za")
    Zb = as_matrix(Zb, "Zb")
    if Za.shape[0] != Zb.shape[0]:
        raise DimensionMismatch(f"Za has {Za.shape[0]} rows, Zb has {Zb.shape[0]}")
    split = split_dataset(Za.shape[0], cfg.test_fraction, cfg.seed)
    ab = encode(Za, _pca_targets(Zb, split, cfg), cfg, split)
    ba = encode(Zb, _pca_targets(Za, split, cfg), cfg, split)
    return ModelAlignment(score=0.5 * (ab.mean + ba.mean), a_to_b=ab, b_to_a=ba)


def alignment_matrix(embeddings, cfg=AlignmentConfig(), names=None):
    """Symmetric pairwise alignment scores; the diagonal is NaN.

    Returns ``(names, S)``.
    """
    names = sorted(embeddings) if names is None else list(names)
    S = np.full((len(names), len(names)), np.nan)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            S[i, j] = S[j, i] = align_models(embeddings[names[i]], embeddings[names[j]], cfg).score
    return names, S


@dataclass
class ReferenceTable:
    reference: str
    tie: bool
    rows: list  # (name, score) in name order


def pick_reference(accuracies):
    """Highest-accuracy model; ties go to the lexicographically smallest name."""
    if len(accuracies) < 2:
        raise ManifestError(f"reference alignment needs >= 2 models, got {len(accuracies)}")
    for name, acc in accuracies.items():
        if acc is None or not np.isfinite(acc):
            raise ManifestError(f"model {name!r}: missing accuracy")
    best = max(accuracies.values())
    leaders = sorted(n for n, a in accuracies.items() if a == best)
    return leaders[0], len(leaders) > 1


def reference_alignment(accuracies, embeddings, cfg=AlignmentConfig()):
    """Align every model against the highest-accuracy one.

    Parameters
    ----------
    accuracies : mapping name -> accuracy fraction
    embeddings : mapping name -> (N, d) matrix over a shared stimulus set
    """
    ref, tie = pick_reference(accuracies)
    missing = [n for n in accuracies if n not in embeddings]
    if missing:
        raise ManifestError(f"model {missing[0]!r}: no embedding matrix")
    rows = [(name, align_models(embeddings[name], embeddings[ref], cfg).score)
            for name in sorted(accuracies) if name != ref]
    return ReferenceTable(reference=ref, tie=tie, rows=rows)

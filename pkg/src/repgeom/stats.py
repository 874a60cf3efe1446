"""Correlations, quantile binning and grouped summaries for zoo-level analyses."""
import itertools
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from ._seeding import derive_rng
from .errors import ConstantInput, ContractError, MissingField, ShapeMismatch, TieCollapse, TooFewItems

N_PERMUTATIONS = 10_000


@dataclass(frozen=True)
class CorrelationReport:
    r: float
    p: float
    n: int
    method: str
    p_method: str = "t"


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ShapeMismatch(f"x has {x.size} values, y has {y.size}")
    if x.size < 3:
        raise TooFewItems(f"correlation needs n >= 3, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ContractError("correlation inputs must be finite")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ConstantInput("correlation input is constant")
    return x, y


def _r(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    r = np.dot(xc, yc) / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    return float(np.clip(r, -1.0, 1.0))


def _t_pvalue(r, n):
    if abs(r) >= 1.0:
        return 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    return float(min(1.0, 2.0 * sps.t.sf(abs(t), n - 2)))


def _perm_pvalue(x, y, r, seed, n_perm):
    rng = derive_rng(seed, "correlation.permutation")
    hits = sum(abs(_r(x, rng.permutation(y))) >= abs(r) - 1e-12 for _ in range(n_perm))
    return (hits + 1) / (n_perm + 1)


def pearson(x, y, permutation=False, seed=0, n_perm=N_PERMUTATIONS):
    """Pearson r with a two-sided p-value.

    The p-value comes from ``t = r sqrt((n-2)/(1-r^2))`` on ``n - 2`` degrees
    of freedom, or from ``n_perm`` seeded permutations if ``permutation``.
    """
    x, y = _pair(x, y)
    r = _r(x, y)
    if permutation:
        return CorrelationReport(r, _perm_pvalue(x, y, r, seed, n_perm), x.size, "pearson",
                                 "permutation")
    return CorrelationReport(r, _t_pvalue(r, x.size), x.size, "pearson")


def spearman(x, y, permutation=False, seed=0, n_perm=N_PERMUTATIONS):
    """Pearson correlation of average ranks."""
    x, y = _pair(x, y)
    rep = pearson(sps.rankdata(x), sps.rankdata(y), permutation, seed, n_perm)
    return CorrelationReport(rep.r, rep.p, rep.n, "spearman", rep.p_method)


@dataclass(frozen=True)
class GroupAssignment:
    labels: np.ndarray  # bin per item, in input order
    boundaries: np.ndarray  # upper edge (largest value) of each bin
    n_bins: int

    def members(self, b):
        return np.flatnonzero(self.labels == b)


def bin_by(values, n_bins=4):
    """Equal-count bins over sorted values.

    With ``n = q * n_bins + r`` the first ``r`` bins hold ``q + 1`` items.
    Items tied with the last item of a bin are pulled into that lower bin;
    if that leaves a bin empty a TieCollapse is raised.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if n_bins < 1:
        raise ContractError("n_bins must be >= 1")
    if v.size < n_bins:
        raise TooFewItems(f"{v.size} items cannot fill {n_bins} bins")
    order = np.argsort(v, kind="stable")
    sv = v[order]
    q, r = divmod(v.size, n_bins)
    sizes = [q + 1 if b < r else q for b in range(n_bins)]
    labels_sorted = np.empty(v.size, dtype=np.int64)
    start = 0
    boundaries = []
    for b in range(n_bins):
        if start >= v.size:
            raise TieCollapse(f"ties leave bin {b} empty")
        end = v.size if b == n_bins - 1 else min(v.size, start + sizes[b])
        while end < v.size and sv[end] == sv[end - 1]:
            end += 1
        labels_sorted[start:end] = b
        boundaries.append(sv[end - 1])
        start = end
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return GroupAssignment(labels=labels, boundaries=np.array(boundaries), n_bins=n_bins)


def within_group_alignment(S, groups):
    """Off-diagonal scores between members of the same group.

    Returns a list with one ``(values, mean)`` entry per bin; ``values`` holds
    ``S[i, j]`` for within-bin pairs ``i < j``. The diagonal is never read.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeMismatch(f"score matrix must be square, got {S.shape}")
    labels = np.asarray(groups.labels)
    if labels.size != S.shape[0]:
        raise ShapeMismatch(f"{labels.size} labels for a {S.shape[0]}x{S.shape[0]} matrix")
    iu = np.triu_indices(S.shape[0], k=1)
    if np.any(np.abs(S[iu] - S.T[iu]) > 1e-9):
        raise ShapeMismatch("score matrix is not symmetric")
    out = []
    for b in range(groups.n_bins):
        m = np.flatnonzero(labels == b)
        vals = np.array([S[i, j] for i, j in itertools.combinations(m, 2)])
        out.append((vals, float(vals.mean()) if vals.size else float("nan")))
    return out


def _is_number(v):
    if isinstance(v, bool):
        return False
    if isinstance(v, (int, float, np.integer, np.floating)):
        return True
    try:
        float(v)
    except (TypeError, ValueError):
        return False
    return True


def grouped_summary(rows, key):
    """Per-group n, mean and median of every numeric column, plus pairwise
    differences of group means.

    ``rows`` is a sequence of mappings (one per model). A column counts as
    numeric if every row's value parses as a float.

    Returns ``(groups, diffs)``: ``groups[g][col] = {"n", "mean", "median"}``
    and ``diffs[(g1, g2)][col] = mean(g2) - mean(g1)`` for ``g1 < g2``.
    """
    rows = list(rows)
    for i, row in enumerate(rows):
        if key not in row or row[key] in (None, ""):
            label = row.get("name", i) if hasattr(row, "get") else i
            raise MissingField(f"row {label!r} has no field {key!r}")
    cols = [c for c in (rows[0].keys() if rows else []) if c != key]
    numeric = [c for c in cols if all(c in r and _is_number(r[c]) for r in rows)]
    by = {}
    for r in rows:
        by.setdefault(str(r[key]), []).append(r)
    groups = {}
    for g in sorted(by):
        groups[g] = {}
        for c in numeric:
            vals = np.array([float(r[c]) for r in by[g]])
            groups[g][c] = {"n": int(vals.size), "mean": float(vals.mean()),
                            "median": float(np.median(vals))}
    diffs = {}
    for g1, g2 in itertools.combinations(sorted(groups), 2):
        diffs[(g1, g2)] = {c: groups[g2][c]["mean"] - groups[g1][c]["mean"] for c in numeric}
    return groups, diffs

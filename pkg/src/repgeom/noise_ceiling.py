"""Noise ceilings for repeated-presentation response data.

With ``A``, ``B`` and ``C`` images shown three, two and one times, the
effective noise variance (in units of single-trial noise variance) is

    N_eff = (A/3 + B/2 + C) / (A + B + C)

and the ceiling for signal variance ``S2`` in the same units is
``S2 / (S2 + N_eff)``.
"""
import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, EmptyCounts, LengthMismatch, NegativeVariance, NoRepeats

NC_FLOOR = 0.05


@dataclass(frozen=True)
class TrialCounts:
    A: int  # images shown three times
    B: int  # twice
    C: int  # once

    @property
    def total(self):
        return self.A + self.B + self.C

    @classmethod
    def from_repeats(cls, repeat_counts):
        r = np.asarray(repeat_counts)
        if np.any((r < 1) | (r > 3)):
            raise ContractError("repeat counts must be 1, 2 or 3")
        return cls(int(np.sum(r == 3)), int(np.sum(r == 2)), int(np.sum(r == 1)))


@dataclass(frozen=True)
class CeilingResult:
    n_eff: float
    s2: float  # signal variance in units of single-trial noise variance
    nc: float
    noise_var: float = float("nan")  # raw-unit trial noise, when estimated


def effective_noise(counts):
    """Repeat-weighted noise variance, between 1/3 (all triples) and 1 (all singles)."""
    A, B, C = counts.A, counts.B, counts.C
    if min(A, B, C) < 0:
        raise ContractError("counts must be non-negative")
    total = A + B + C
    if total == 0:
        raise EmptyCounts("no images counted")
    # (A/3 + B/2 + C) / total over a common denominator, so the limits are exact
    return (2 * A + 3 * B + 6 * C) / (6 * total)


def ceiling(s2, n_eff):
    if s2 < 0:
        raise NegativeVariance(f"signal variance {s2} < 0")
    if not n_eff > 0:
        raise ContractError("n_eff must be > 0")
    return s2 / (s2 + n_eff)


def _repeat_counts(trials):
    return np.sum(~np.isnan(trials), axis=0)


def decompose_trials(trial_matrix):
    """Split response variance into signal and trial-noise components.

    ``trial_matrix`` is repeats x images with NaN marking absent repeats.
    The per-image means have expected variance ``S2 + sigma2 * mean(1/n_i)``,
    where ``sigma2`` is the pooled within-image variance, so

        S2 = max(0, var(means) - sigma2 / harmonic_mean(n_i)).

    Returns
    -------
    s2, sigma2 : float
        Both in raw response units.
    """
    T = np.asarray(trial_matrix, dtype=np.float64)
    if T.ndim == 1:
        T = T[None, :]
    n_i = _repeat_counts(T)
    if np.any(n_i == 0):
        raise ContractError("every image needs at least one trial")
    if not np.any(n_i >= 2):
        raise NoRepeats("no image was presented more than once")
    if T.shape[1] < 2:
        raise ContractError("need at least 2 images")
    means = np.nanmean(T, axis=0)
    dev = np.where(np.isnan(T), 0.0, T - means)
    sigma2 = float(np.sum(dev * dev) / np.sum(n_i - 1))
    between = float(np.var(means, ddof=1))
    s2 = max(0.0, between - sigma2 * float(np.mean(1.0 / n_i)))
    return s2, sigma2


def estimate_signal_variance(trial_matrix):
    """Signal variance ``S2`` of a repeats x images trial matrix (raw units)."""
    return decompose_trials(trial_matrix)[0]


def ceiling_from_trials(trial_matrix):
    """Noise ceiling of one target from its trial matrix.

    Signal variance is expressed relative to the estimated trial noise, which
    is the unit the effective-noise weights assume.
    """
    T = np.asarray(trial_matrix, dtype=np.float64)
    if T.ndim == 1:
        T = T[None, :]
    s2_raw, sigma2 = decompose_trials(T)
    n_eff = effective_noise(TrialCounts.from_repeats(_repeat_counts(T)))
    if sigma2 == 0:
        return CeilingResult(n_eff=n_eff, s2=np.inf if s2_raw > 0 else 0.0,
                             nc=1.0 if s2_raw > 0 else 0.0, noise_var=0.0)
    s2 = s2_raw / sigma2
    return CeilingResult(n_eff=n_eff, s2=s2, nc=ceiling(s2, n_eff), noise_var=sigma2)


def normalize_alignment(result, nc_per_target, floor=NC_FLOOR):
    """Divide per-target R^2 by the per-target ceiling.

    Targets whose ceiling is below ``floor`` get NaN and are counted in
    ``n_ceiling_excluded``.
    """
    nc = np.asarray(nc_per_target, dtype=np.float64).ravel()
    r2 = np.asarray(result.per_target_r2, dtype=np.float64)
    if nc.shape != r2.shape:
        raise LengthMismatch(f"{nc.size} ceilings for {r2.size} targets")
    if np.any(~(nc > 0) | (nc > 1)):
        raise ContractError("ceilings must lie in (0, 1]")
    keep = nc >= floor
    normalized = np.full(r2.shape, np.nan)
    normalized[keep] = r2[keep] / nc[keep]
    return dataclasses.replace(result, ceiling_normalized=normalized,
                               n_ceiling_excluded=int(np.sum(~keep)))

"""Seeded generators with known ground truth.

Every generator is a pure function of its arguments including the seed;
independent random streams are derived per purpose (points, embedding,
noise, ...) from the one seed.
"""
from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive_rng
from .errors import SpecError
from .linalg import as_matrix
from .noise_ceiling import TrialCounts, ceiling, effective_noise

MANIFOLD_KINDS = ("hypercube", "sphere", "swiss_roll", "gaussian")
SWISS_ROLL_T = (1.5 * np.pi, 4.5 * np.pi)
SWISS_ROLL_HEIGHT = 21.0


@dataclass(frozen=True)
class ManifoldSpec:
    kind: str
    d: int
    ambient: int
    n: int
    noise_sigma: float = 0.0
    seed: int = 0

    @property
    def native_dim(self):
        """Coordinates the manifold is drawn in before embedding."""
        if self.kind == "sphere":
            return self.d + 1
        if self.kind == "swiss_roll":
            return 3
        return self.d

    def validate(self):
        if self.kind not in MANIFOLD_KINDS:
            raise SpecError(f"unknown manifold kind {self.kind!r}; expected one of {MANIFOLD_KINDS}")
        if self.d < 1:
            raise SpecError("intrinsic dimension must be >= 1")
        if self.kind == "swiss_roll" and self.d != 2:
            raise SpecError("swiss_roll is a 2-manifold; d must be 2")
        if self.ambient < self.native_dim:
            raise SpecError(f"ambient={self.ambient} below required {self.native_dim} for {self.kind}")
        if self.n < 1:
            raise SpecError("n must be >= 1")
        if not self.noise_sigma >= 0:
            raise SpecError("noise_sigma must be >= 0")


def random_orthonormal(rows, cols, rng):
    """``rows x cols`` matrix with orthonormal columns (``rows >= cols``)."""
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.sign(np.diag(R))


def manifold_coordinates(spec):
    """Points in native coordinates, before the ambient embedding."""
    spec.validate()
    rng = derive_rng(spec.seed, "manifold.points")
    n, d = spec.n, spec.d
    if spec.kind == "hypercube":
        return rng.random((n, d))
    if spec.kind == "gaussian":
        return rng.standard_normal((n, d))
    if spec.kind == "sphere":
        P = rng.standard_normal((n, d + 1))
        return P / np.linalg.norm(P, axis=1, keepdims=True)
    t = SWISS_ROLL_T[0] + (SWISS_ROLL_T[1] - SWISS_ROLL_T[0]) * rng.random(n)
    h = SWISS_ROLL_HEIGHT * rng.random(n)
    return np.column_stack([t * np.cos(t), h, t * np.sin(t)])


def sample_manifold(spec):
    """Sample ``spec.n`` points and embed them isometrically in ``spec.ambient`` dims.

    The embedding is the identity when the ambient and native dimensions
    match, otherwise a seeded random orthonormal map. Isotropic Gaussian
    noise of scale ``noise_sigma`` is added in the ambient space.
    """
    P = manifold_coordinates(spec)
    if spec.ambient > spec.native_dim:
        Q = random_orthonormal(spec.ambient, spec.native_dim, derive_rng(spec.seed, "manifold.embed"))
        P = P @ Q.T
    if spec.noise_sigma > 0:
        P = P + spec.noise_sigma * derive_rng(spec.seed, "manifold.noise").standard_normal(P.shape)
    return P


@dataclass
class TeacherData:
    Y: np.ndarray
    W_true: np.ndarray
    explainable_fraction: np.ndarray  # var(XW) / var(Y) per target


def linear_teacher(X, n_targets, noise_sigma=0.0, seed=0, fraction=None):
    """Targets ``Y = X @ W_true + noise`` with Gaussian ``W_true``.

    Parameters
    ----------
    noise_sigma : float
        Standard deviation of the additive noise, shared by all targets.
    fraction : float, optional
        If given, overrides ``noise_sigma`` with a per-target noise level
        chosen so that signal variance over total variance equals
        ``fraction``. The noise is centered, decorrelated from each target's
        signal and rescaled, so the sample fraction is exact.
    """
    X = as_matrix(X, "X")
    if n_targets < 1:
        raise SpecError("n_targets must be >= 1")
    d = X.shape[1]
    W = derive_rng(seed, "teacher.weights").standard_normal((d, n_targets)) / np.sqrt(d)
    signal = X @ W
    s_var = signal.var(axis=0)
    if fraction is not None:
        if not 0 < fraction <= 1:
            raise SpecError("fraction must lie in (0, 1]")
        sigma = np.sqrt(s_var * (1.0 - fraction) / fraction)
    else:
        if noise_sigma < 0:
            raise SpecError("noise_sigma must be >= 0")
        sigma = np.full(n_targets, float(noise_sigma))
    noise = derive_rng(seed, "teacher.noise").standard_normal(signal.shape)
    if fraction is not None:
        # calibrate exactly: centered, uncorrelated with the signal, variance sigma^2
        noise -= noise.mean(axis=0)
        sc = signal - signal.mean(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            beta = np.where(s_var > 0, (sc * noise).mean(axis=0) / s_var, 0.0)
        noise -= sc * beta
        noise /= noise.std(axis=0)
    Y = signal + noise * sigma
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = s_var / Y.var(axis=0)
    return TeacherData(Y=Y, W_true=W, explainable_fraction=frac)


def allocate_counts(n_images, proportions):
    """Split ``n_images`` into (A, B, C) by largest remainder."""
    p = np.asarray(proportions, dtype=np.float64)
    if p.shape != (3,) or np.any(p < 0) or p.sum() <= 0:
        raise SpecError("repeat proportions must be three non-negative numbers, not all zero")
    raw = n_images * p / p.sum()
    base = np.floor(raw).astype(np.int64)
    rest = n_images - int(base.sum())
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:rest]] += 1
    return TrialCounts(*(int(v) for v in base))


@dataclass
class TrialSet:
    trials: np.ndarray  # (3, n_images); NaN where an image has fewer repeats
    repeat_counts: np.ndarray  # (n_images,) in {1, 2, 3}
    signal: np.ndarray  # (n_images,)
    counts: TrialCounts
    n_eff: float
    true_ceiling: float


def repeated_trials(n_images, proportions, s2, noise_var, seed=0):
    """Single-target responses to images shown three, two or one times.

    Per-image signal has variance ``s2``; every trial adds independent noise
    of variance ``noise_var``. The returned ceiling applies the effective
    noise weighting to the planted signal-to-noise ratio.
    """
    if n_images < 1:
        raise SpecError("n_images must be >= 1")
    if s2 < 0 or noise_var < 0:
        raise SpecError("variances must be >= 0")
    counts = allocate_counts(n_images, proportions)
    reps = np.repeat([3, 2, 1], [counts.A, counts.B, counts.C])
    reps = derive_rng(seed, "trials.assign").permutation(reps)
    signal = np.sqrt(s2) * derive_rng(seed, "trials.signal").standard_normal(n_images)
    noise = np.sqrt(noise_var) * derive_rng(seed, "trials.noise").standard_normal((3, n_images))
    trials = signal[None, :] + noise
    trials[np.arange(3)[:, None] >= reps[None, :]] = np.nan
    n_eff = effective_noise(counts)
    if noise_var == 0:
        true_nc = 1.0 if s2 > 0 else 0.0
    else:
        true_nc = ceiling(s2 / noise_var, n_eff)
    return TrialSet(trials=trials, repeat_counts=reps, signal=signal, counts=counts,
                    n_eff=n_eff, true_ceiling=true_nc)


@dataclass(frozen=True)
class ZooSpec:
    n_models: int = 20
    base_dim: int = 4
    ambient_dim: int = 12
    id_spread: float | tuple = 0.5
    coupling: float = 1.0
    n_samples: int = 1500
    seed: int = 0

    def noise_levels(self):
        if np.ndim(self.id_spread) == 0:
            return float(self.id_spread) * np.linspace(0.05, 1.0, self.n_models)
        levels = np.asarray(self.id_spread, dtype=np.float64)
        if levels.shape != (self.n_models,):
            raise SpecError("id_spread list must have one level per model")
        return levels

    def validate(self):
        if self.n_models < 3:
            raise SpecError("a zoo needs at least 3 models")
        if not 0 <= self.coupling <= 1:
            raise SpecError("coupling must lie in [0, 1]")
        if self.base_dim < 1 or self.ambient_dim < self.base_dim:
            raise SpecError("need 1 <= base_dim <= ambient_dim")
        if self.n_samples < 10:
            raise SpecError("n_samples must be >= 10")
        if np.any(self.noise_levels() < 0):
            raise SpecError("noise levels must be >= 0")


@dataclass
class Zoo:
    manifest: list  # entries: name, family, accuracy
    embeddings: dict  # name -> (n_samples, ambient_dim)
    truth: list = field(default_factory=list)  # name, noise_level, planted_accuracy


def synth_zoo(spec):
    """A model zoo with planted links between noise, dimension and accuracy.

    All models see one shared latent representation ``G``. Model ``m``
    embeds it by its own random map and adds isotropic noise of level
    ``sigma_m``, which raises its local dimension and weakens its alignment
    with the others. Accuracy is planted as ``1 - u`` where ``u`` is the
    normalized noise level, blended by ``1 - coupling`` with the level of a
    randomly permuted model.
    """
    spec.validate()
    n, M = spec.n_samples, spec.n_models
    G = derive_rng(spec.seed, "zoo.latent").standard_normal((n, spec.base_dim))
    levels = spec.noise_levels()
    span = levels.max() - levels.min()
    u = (levels - levels.min()) / span if span > 0 else np.zeros(M)
    perm = derive_rng(spec.seed, "zoo.shuffle").permutation(M)
    linked = spec.coupling * u + (1.0 - spec.coupling) * u[perm]
    accuracy = 1.0 - linked
    manifest, embeddings, truth = [], {}, []
    for m in range(M):
        name = f"model_{m:02d}"
        rng = derive_rng(spec.seed, f"zoo.model.{m}")
        A = rng.standard_normal((spec.base_dim, spec.ambient_dim)) / np.sqrt(spec.base_dim)
        E = G @ A + levels[m] * rng.standard_normal((n, spec.ambient_dim))
        embeddings[name] = E
        manifest.append({"name": name, "family": "synthetic", "accuracy": float(accuracy[m])})
        truth.append({"name": name, "noise_level": float(levels[m]),
                      "planted_accuracy": float(accuracy[m])})
    return Zoo(manifest=manifest, embeddings=embeddings, truth=truth)

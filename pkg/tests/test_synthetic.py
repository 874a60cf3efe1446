import numpy as np
import pytest
from scipy.spatial.distance import pdist
from scipy.stats import spearmanr

from repgeom.errors import SpecError
from repgeom.intrinsic_dim import id_dataset, local_id
from repgeom.noise_ceiling import TrialCounts
from repgeom.synthetic import (
    ManifoldSpec,
    ZooSpec,
    allocate_counts,
    linear_teacher,
    manifold_coordinates,
    random_orthonormal,
    repeated_trials,
    sample_manifold,
    synth_zoo,
)


def test_hypercube_identity_embedding():
    Z = sample_manifold(ManifoldSpec("hypercube", 1, 1, 500, seed=0))
    assert Z.shape == (500, 1) and Z.min() >= 0 and Z.max() <= 1


def test_sphere_unit_norm():
    P = manifold_coordinates(ManifoldSpec("sphere", 2, 3, 400, seed=1))
    assert np.all(np.abs(np.linalg.norm(P, axis=1) - 1) < 1e-12)


def test_five_cube_dimension():
    Z = sample_manifold(ManifoldSpec("hypercube", 5, 50, 5000, seed=2))
    assert 4.2 <= id_dataset(Z, 20).value <= 5.8


def test_embedding_isometry():
    spec = ManifoldSpec("swiss_roll", 2, 9, 300, seed=3)
    assert np.allclose(pdist(manifold_coordinates(spec)), pdist(sample_manifold(spec)), atol=1e-10)


def test_orthonormal_columns(rng):
    Q = random_orthonormal(12, 4, rng)
    assert np.allclose(Q.T @ Q, np.eye(4), atol=1e-12)


def test_manifold_determinism():
    spec = ManifoldSpec("gaussian", 3, 6, 100, noise_sigma=0.1, seed=5)
    assert np.array_equal(sample_manifold(spec), sample_manifold(spec))


@pytest.mark.parametrize("spec", [ManifoldSpec("torus", 2, 3, 10),
                                  ManifoldSpec("hypercube", 4, 3, 10),
                                  ManifoldSpec("swiss_roll", 2, 2, 10),
                                  ManifoldSpec("hypercube", 2, 3, 10, noise_sigma=-1)])
def test_manifold_bad_specs(spec):
    with pytest.raises(SpecError):
        sample_manifold(spec)


def test_teacher_noiseless(rng):
    X = rng.standard_normal((200, 10))
    t = linear_teacher(X, 5)
    assert np.allclose(t.explainable_fraction, 1.0)
    assert np.allclose(t.Y, X @ t.W_true)


def test_teacher_fraction():
    X = np.random.default_rng(0).standard_normal((2000, 300))
    t = linear_teacher(X, 100, seed=1, fraction=0.8)
    assert np.all((t.explainable_fraction >= 0.78) & (t.explainable_fraction <= 0.82))
    assert np.allclose(t.explainable_fraction, 0.8, atol=1e-12)


def test_teacher_reproducible(rng):
    X = rng.standard_normal((50, 4))
    assert np.array_equal(linear_teacher(X, 3, 0.5, seed=9).W_true,
                          linear_teacher(X, 3, 0.5, seed=9).W_true)


def test_allocate_counts_largest_remainder():
    assert allocate_counts(500, [1, 1, 1]) == TrialCounts(167, 167, 166)
    assert allocate_counts(10, [1, 0, 0]) == TrialCounts(10, 0, 0)


def test_trials_noise_free():
    ts = repeated_trials(50, [1, 0, 0], 1.0, 0.0, seed=0)
    assert np.all(ts.trials == ts.trials[0])
    assert ts.true_ceiling == 1.0


def test_trials_all_triple_ceiling():
    assert repeated_trials(60, [1, 0, 0], 1.0, 1.0).true_ceiling == pytest.approx(0.75, rel=1e-15)


def test_trials_bad_variance():
    with pytest.raises(SpecError):
        repeated_trials(10, [1, 1, 1], -1.0, 1.0)


def test_zoo_deterministic():
    a = synth_zoo(ZooSpec(n_models=4, n_samples=100, seed=3))
    b = synth_zoo(ZooSpec(n_models=4, n_samples=100, seed=3))
    assert a.manifest == b.manifest
    assert all(a.embeddings[k].tobytes() == b.embeddings[k].tobytes() for k in a.embeddings)


def _zoo_ids(spec):
    zoo = synth_zoo(spec)
    ids = [local_id(zoo.embeddings[m["name"]], seed=0, neighborhood=1000, K=20).value
           for m in zoo.manifest]
    return zoo, np.array(ids)


def test_zoo_planted_noise_raises_id():
    zoo, ids = _zoo_ids(ZooSpec(coupling=1.0, seed=0))
    levels = [t["noise_level"] for t in zoo.truth]
    assert spearmanr(levels, ids).statistic > 0.8


def test_zoo_null_coupling():
    # with no coupling the correlation is that of a random permutation
    # (sd about 1/sqrt(19)), so the bound holds for most seeds, not all
    within = 0
    for seed in range(10):
        zoo, ids = _zoo_ids(ZooSpec(coupling=0.0, seed=seed))
        acc = [m["accuracy"] for m in zoo.manifest]
        within += abs(np.corrcoef(acc, ids)[0, 1]) <= 0.4
    assert within >= 8


def test_zoo_bad_spec():
    with pytest.raises(SpecError):
        synth_zoo(ZooSpec(n_models=2))
    with pytest.raises(SpecError):
        synth_zoo(ZooSpec(coupling=1.5))

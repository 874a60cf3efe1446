import numpy as np
import pytest

from repgeom.errors import ConstantInput, MissingField, ShapeMismatch, TieCollapse, TooFewItems
from repgeom.stats import bin_by, grouped_summary, pearson, spearman, within_group_alignment


def test_pearson_perfect():
    x = np.arange(10.0)
    rep = pearson(x, 2 * x + 1)
    assert rep.r == 1.0 and rep.p == 0.0
    assert pearson(x, -x).r == -1.0


def test_pearson_hand_value():
    assert pearson([1, 2, 3], [1, 3, 2]).r == pytest.approx(0.5, rel=1e-14)


def test_pearson_p_against_scipy(rng):
    from scipy.stats import pearsonr

    x = rng.standard_normal(25)
    y = 0.4 * x + rng.standard_normal(25)
    ref = pearsonr(x, y)
    rep = pearson(x, y)
    assert rep.r == pytest.approx(ref.statistic, rel=1e-12)
    assert rep.p == pytest.approx(ref.pvalue, rel=1e-9)


def test_pearson_constant():
    with pytest.raises(ConstantInput):
        pearson([1, 1, 1], [1, 2, 3])


def test_pearson_permutation_seeded(rng):
    x = rng.standard_normal(20)
    y = x + rng.standard_normal(20)
    a = pearson(x, y, permutation=True, seed=1, n_perm=500)
    b = pearson(x, y, permutation=True, seed=1, n_perm=500)
    assert a.p == b.p and a.p_method == "permutation"
    assert a.p < 0.05


def test_spearman_monotone():
    x = np.linspace(0.1, 3, 12)
    assert spearman(x, np.exp(x)).r == 1.0
    assert spearman(x, -x ** 3).r == -1.0


def test_spearman_hand_value():
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]).r == pytest.approx(0.8, rel=1e-14)


def test_bin_exact_quartiles():
    g = bin_by(np.arange(1, 9), 4)
    assert np.bincount(g.labels).tolist() == [2, 2, 2, 2]
    assert g.labels.tolist() == [0, 0, 1, 1, 2, 2, 3, 3]


def test_bin_remainder_to_earliest():
    assert np.bincount(bin_by(np.arange(9), 4).labels).tolist() == [3, 2, 2, 2]


def test_bin_all_tied():
    with pytest.raises(TieCollapse):
        bin_by(np.ones(8), 4)


def test_bin_too_few():
    with pytest.raises(TooFewItems):
        bin_by([1.0, 2.0], 4)


def test_bin_ties_to_lower_bin():
    g = bin_by([1, 2, 2, 3, 4, 5], 3)
    assert g.labels.tolist() == [0, 0, 0, 1, 1, 2]


def test_within_group_pairs():
    S = np.arange(16.0).reshape(4, 4)
    S = S + S.T
    groups = bin_by([0.0, 0.1, 5.0, 5.1], 2)
    out = within_group_alignment(S, groups)
    assert out[0][0].tolist() == [S[0, 1]] and out[1][0].tolist() == [S[2, 3]]


def test_within_group_identity_like():
    out = within_group_alignment(np.eye(6), bin_by(np.arange(6.0), 2))
    assert [m for _, m in out] == [0.0, 0.0]


def test_within_group_block():
    S = np.full((6, 6), 0.2)
    S[:3, :3] = 0.8
    S[3:, 3:] = 0.8
    out = within_group_alignment(S, bin_by(np.arange(6.0), 2))
    assert [m for _, m in out] == [pytest.approx(0.8), pytest.approx(0.8)]
    assert all(np.all(v == 0.8) for v, _ in out)


def test_within_group_shapes():
    with pytest.raises(ShapeMismatch):
        within_group_alignment(np.zeros((3, 4)), bin_by(np.arange(3.0), 1))
    S = np.zeros((3, 3))
    S[0, 1] = 1.0
    with pytest.raises(ShapeMismatch):
        within_group_alignment(S, bin_by(np.arange(3.0), 1))


def test_grouped_single_group():
    rows = [{"k": "a", "v": float(i)} for i in range(5)]
    groups, diffs = grouped_summary(rows, "k")
    assert groups["a"]["v"] == {"n": 5, "mean": 2.0, "median": 2.0}
    assert diffs == {}


def test_grouped_planted_shift():
    r = np.random.default_rng(0)
    rows = [{"k": "small", "v": float(x)} for x in r.standard_normal(400)]
    rows += [{"k": "large", "v": float(x) + 1.0} for x in r.standard_normal(400)]
    _, diffs = grouped_summary(rows, "k")
    assert abs(diffs[("large", "small")]["v"] + 1.0) < 0.2


def test_grouped_missing_field():
    with pytest.raises(MissingField, match="m2"):
        grouped_summary([{"name": "m1", "k": "a"}, {"name": "m2"}], "k")


def test_grouped_skips_text_columns():
    groups, _ = grouped_summary([{"k": "a", "v": 1.0, "family": "vit"}], "k")
    assert list(groups["a"]) == ["v"]

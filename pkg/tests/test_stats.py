import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as ss

from entrainkit import stats
from entrainkit.errors import (ConstantInput, DegenerateMatrix, EmptySample, LengthMismatch,
                               OutOfRangeP, SampleSizeOutOfRange, ZeroVarianceBothGroups,
                               ZeroVarianceDifferences)
from entrainkit.selftest import brute_force_cliffs_delta, brute_force_mwu_p

small_ints = st.lists(st.integers(-5, 5), min_size=1, max_size=20)
tenths = st.integers(-1000, 1000).map(lambda v: v / 10)


# ---------------------------------------------------------------- Mann-Whitney

def test_mwu_exact_small():
    r = stats.mann_whitney_u([1, 2], [3, 4])
    assert r.statistic == 0 and r.p == pytest.approx(1 / 3, abs=1e-15) and r.method == "exact"


def test_mwu_identical_with_ties():
    x = [1, 2, 2, 3, 3, 3]
    r = stats.mann_whitney_u(x, list(x))
    assert r.z == 0 and r.p == 1.0 and r.method == "normal"


def test_mwu_empty():
    with pytest.raises(EmptySample):
        stats.mann_whitney_u([], [1.0])


@given(st.integers(0, 2**32), st.integers(1, 6), st.integers(1, 6))
def test_mwu_exact_matches_enumeration(seed, n1, n2):
    if n1 + n2 > 10:
        n2 = 10 - n1
    pool = np.random.default_rng(seed).permutation(100)[: n1 + n2].astype(float)
    x, y = pool[:n1], pool[n1:]
    assert abs(stats.mann_whitney_u(x, y).p - brute_force_mwu_p(x, y)) <= 1e-12


@given(small_ints, small_ints)
def test_mwu_u_complement(x, y):
    a = stats.mann_whitney_u(x, y)
    b = stats.mann_whitney_u(y, x)
    assert a.statistic + b.statistic == len(x) * len(y)
    assert 0 <= a.statistic <= len(x) * len(y)
    assert 0 <= a.p <= 1


@given(small_ints, small_ints)
def test_mwu_matches_scipy(x, y):
    if len(set(x + y)) < 2:
        return
    r = stats.mann_whitney_u(x, y)
    method = "exact" if r.method == "exact" else "asymptotic"
    ref = ss.mannwhitneyu(x, y, alternative="two-sided", method=method)
    assert r.statistic == ref.statistic
    assert r.p == pytest.approx(ref.pvalue, abs=1e-10)


def test_mwu_z_sign():
    r = stats.mann_whitney_u(np.arange(20), np.arange(10, 30))
    assert r.z < 0 and r.statistic < 200


# ---------------------------------------------------------------- t tests

def test_welch_identical():
    r = stats.welch_t([1, 2, 3], [1, 2, 3])
    assert r.statistic == 0 and r.p == 1.0


def test_welch_example():
    r = stats.welch_t([1, 2, 3, 4], [2, 3, 4, 5])
    ref = ss.ttest_ind([1, 2, 3, 4], [2, 3, 4, 5], equal_var=False)
    assert r.statistic == pytest.approx(-1.095, abs=5e-4)
    assert r.df == pytest.approx(6.0)
    assert r.p == pytest.approx(ref.pvalue, abs=1e-12)
    assert r.p == pytest.approx(0.315, abs=5e-4)


def test_welch_errors():
    with pytest.raises(ZeroVarianceBothGroups):
        stats.welch_t([1, 1], [2, 2])
    with pytest.raises(EmptySample):
        stats.welch_t([1], [2, 3])


def test_paired_examples():
    with pytest.raises(ZeroVarianceDifferences):
        stats.paired_t([1, 2, 3], [1, 2, 3])
    r = stats.paired_t([1, -1, 1, -1], [0, 0, 0, 0])
    assert r.statistic == 0 and r.p == 1.0
    r = stats.paired_t([1, 2, 3], [0, 0, 0])
    assert r.statistic == pytest.approx(2 * math.sqrt(3)) and r.df == 2
    assert r.p == pytest.approx(ss.ttest_1samp([1, 2, 3], 0).pvalue, abs=1e-12)
    assert r.p == pytest.approx(0.0742, abs=5e-5)
    with pytest.raises(LengthMismatch):
        stats.paired_t([1, 2], [1, 2, 3])


@pytest.mark.filterwarnings("ignore:Precision loss")  # scipy, on a constant group
@given(st.lists(tenths, min_size=2, max_size=30), st.lists(tenths, min_size=2, max_size=30))
def test_welch_matches_scipy_and_sign(x, y):
    if np.var(x) < 1e-6 and np.var(y) < 1e-6:
        return
    r = stats.welch_t(x, y)
    ref = ss.ttest_ind(x, y, equal_var=False)
    assert r.statistic == pytest.approx(ref.statistic, rel=1e-9, abs=1e-9)
    assert r.p == pytest.approx(ref.pvalue, abs=1e-9)
    neg = stats.welch_t(-np.array(x), -np.array(y))
    assert neg.statistic == pytest.approx(-r.statistic, rel=1e-12, abs=1e-12)
    assert neg.p == pytest.approx(r.p, abs=1e-12)


@given(st.lists(st.tuples(tenths, tenths), min_size=2, max_size=30))
def test_paired_matches_scipy_and_sign(pairs):
    x, y = np.array(pairs).T
    if np.std(x - y) < 1e-6:
        return
    r = stats.paired_t(x, y)
    ref = ss.ttest_rel(x, y)
    assert r.statistic == pytest.approx(ref.statistic, rel=1e-9, abs=1e-9)
    assert r.p == pytest.approx(ref.pvalue, abs=1e-9)
    neg = stats.paired_t(-x, -y)
    assert neg.statistic == pytest.approx(-r.statistic, rel=1e-12, abs=1e-12)
    assert neg.p == pytest.approx(r.p, abs=1e-12)


# ---------------------------------------------------------------- Shapiro-Wilk

def test_shapiro_size():
    with pytest.raises(SampleSizeOutOfRange):
        stats.shapiro_wilk([1.0, 2.0])
    with pytest.raises(SampleSizeOutOfRange):
        stats.shapiro_wilk(np.arange(5001.0))
    with pytest.raises(ConstantInput):
        stats.shapiro_wilk([1.0, 1.0, 1.0])


@pytest.mark.parametrize("n", [3, 4, 7, 11, 12, 50, 300, 5000])
def test_shapiro_matches_scipy(n):
    rng = np.random.default_rng(n)
    for x in (rng.standard_normal(n), rng.lognormal(size=n), rng.uniform(size=n)):
        r = stats.shapiro_wilk(x)
        ref = ss.shapiro(x)
        assert r.statistic == pytest.approx(ref.statistic, abs=1e-6)
        assert r.p == pytest.approx(ref.pvalue, abs=1e-6)


def test_shapiro_null_roughly_uniform():
    rng = np.random.default_rng(0)
    p = [stats.shapiro_wilk(rng.standard_normal(50)).p for _ in range(300)]
    assert ss.kstest(p, "uniform").statistic < 0.1


# ---------------------------------------------------------------- effect size, correlation

def test_cliffs_examples():
    assert stats.cliffs_delta([1, 2], [3, 4]) == -1
    assert stats.cliffs_delta([5], [5]) == 0
    assert stats.cliffs_delta([1, 3], [2, 4]) == -0.5
    with pytest.raises(EmptySample):
        stats.cliffs_delta([], [1])


@given(small_ints, small_ints)
def test_cliffs_brute_force_and_antisymmetry(x, y):
    d = stats.cliffs_delta(x, y)
    assert d == brute_force_cliffs_delta(x, y)
    assert stats.cliffs_delta(y, x) == -d
    assert -1 <= d <= 1


@given(small_ints, small_ints)
def test_cliffs_monotone_invariance(x, y):
    f = lambda v: np.exp(np.asarray(v, float) / 3.0) * 7 - 2
    assert stats.cliffs_delta(f(x), f(y)) == stats.cliffs_delta(x, y)


def test_pearson_examples():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert stats.pearson_r(x, x) == pytest.approx(1.0)
    assert stats.pearson_r(x, -2 * x + 7) == pytest.approx(-1.0)
    assert stats.pearson_r(x, [1, 2, 4, 3]) == pytest.approx(0.8)
    with pytest.raises(ConstantInput):
        stats.pearson_r(x, np.ones(4))


def test_fisher_z_examples():
    assert stats.fisher_z(0.0) == 0.0
    assert stats.fisher_z(0.5) == pytest.approx(0.5493, abs=1e-4)
    assert stats.fisher_z(1.0) == pytest.approx(math.atanh(1 - 1e-6))
    assert round(stats.fisher_z(1.0), 3) == 7.254
    assert stats.fisher_z(-1.0) == -stats.fisher_z(1.0)


# ---------------------------------------------------------------- BH

def test_bh_examples():
    np.testing.assert_allclose(stats.bh_fdr([0.01, 0.02, 0.04]), [0.03, 0.03, 0.04], atol=1e-15)
    assert stats.bh_fdr([0.37]).tolist() == [0.37]
    with pytest.raises(OutOfRangeP):
        stats.bh_fdr([0.5, 1.2])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=60))
def test_bh_properties(p):
    p = np.array(p)
    q = stats.bh_fdr(p)
    order = np.argsort(p, kind="mergesort")
    assert np.all(np.diff(q[order]) >= 0)
    assert np.all((q >= 0) & (q <= 1))
    assert np.all(q >= p - 1e-15)
    np.testing.assert_allclose(q, ss.false_discovery_control(p), atol=1e-12)


# ---------------------------------------------------------------- PCA

def test_pca_rank_one():
    x = np.random.default_rng(0).standard_normal(40)
    r = stats.pca(np.c_[x, 3 * x - 1])
    np.testing.assert_allclose(np.abs(r.components[:, 0]), [math.sqrt(0.5)] * 2, atol=1e-9)
    np.testing.assert_allclose(r.loadings[:, 0], [1.0, 1.0], atol=1e-9)
    assert r.explained_ratio[0] == pytest.approx(1.0, abs=1e-12)


def test_pca_uncorrelated_columns():
    r = stats.pca(np.c_[[1, -1, 1, -1], [1, 1, -1, -1]])
    np.testing.assert_allclose(r.explained_ratio, [0.5, 0.5], atol=1e-9)


def test_pca_constant_column():
    with pytest.raises(DegenerateMatrix):
        stats.pca(np.c_[np.arange(5.0), np.ones(5)])


def test_pca_sign_convention():
    data = np.random.default_rng(2).standard_normal((30, 4))
    r = stats.pca(data)
    for k in range(4):
        col = r.loadings[:, k]
        assert col[np.argmax(np.abs(col))] > 0


def test_pca_block_recovery():
    rng = np.random.default_rng(5)
    n = 500
    f = rng.standard_normal((n, 2))
    block = np.r_[np.zeros(11, int), np.ones(10, int)]
    data = 0.8 * f[:, block] + 0.6 * rng.standard_normal((n, 21))
    r = stats.pca(data, n_components=2, rotation="varimax")
    lo = np.abs(r.loadings)
    own = np.array([lo[i, 0] if b == 0 else lo[i, 1] for i, b in enumerate(block)])
    cross = np.array([lo[i, 1] if b == 0 else lo[i, 0] for i, b in enumerate(block)])
    assert np.all(own > 0.4) and np.all(cross < 0.3)


@settings(max_examples=20)
@given(st.integers(0, 2**32))
def test_pca_eigenvalues_sum(seed):
    data = np.random.default_rng(seed).standard_normal((25, 5))
    r = stats.pca(data)
    assert r.explained_variance.sum() == pytest.approx(5.0)
    z, _, _ = stats.standardize(data)
    np.testing.assert_allclose(r.scores @ r.components.T, z, atol=1e-8)
    np.testing.assert_allclose(np.sum(r.loadings ** 2, axis=1), 1.0, atol=1e-9)

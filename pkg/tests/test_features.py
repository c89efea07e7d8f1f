from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import table_from
from hypothesis import given, settings
from hypothesis import strategies as st

from pmudetect.errors import KOutOfRange, TooFewRows, UnknownFeature
from pmudetect.features import (
    FeatureScoreList,
    correlation_ranking,
    histogram,
    mutual_information,
    pca_fit,
    pca_project,
    select_top_k,
)
from pmudetect.synthetic import make_table


def mi_oracle(column, labels, n_bins):
    """Triple loop over (bin, class, row) on the joint histogram."""
    n = len(column)
    lo, hi = min(column), max(column)
    bins = []
    for x in column:
        if hi <= lo:
            bins.append(0)
        else:
            b = math.floor((x - lo) / (hi - lo) * n_bins)
            bins.append(min(max(b, 0), n_bins - 1))
    total = 0.0
    for b in range(n_bins):
        for c in range(3):
            joint = 0
            for i in range(n):
                if bins[i] == b and labels[i] == c:
                    joint += 1
            if joint == 0:
                continue
            pb = sum(1 for i in range(n) if bins[i] == b) / n
            pc = sum(1 for i in range(n) if labels[i] == c) / n
            pxy = joint / n
            total += pxy * math.log(pxy / (pb * pc))
    return max(0.0, total)


# histograms

def test_histogram_hand_binning():
    t = table_from([0.0, 1.0, 2.0, 3.0], [0, 1, 2, 0])
    bins = histogram(t, "f0", 2)
    assert bins == [(0.0, 1.5, 2), (1.5, 3.0, 2)]


def test_histogram_constant_and_partition():
    t = table_from([4.0] * 9, [0] * 9)
    counts = [c for _, _, c in histogram(t, "f0", 5)]
    assert sorted(counts) == [0, 0, 0, 0, 9]
    v = np.random.default_rng(0).normal(size=333)
    assert sum(c for *_, c in histogram(table_from(v, [0] * 333), "f0", 17)) == 333
    with pytest.raises(UnknownFeature):
        histogram(t, "nope")


# correlation

def test_correlation_perfect_and_independent():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 3, 300)
    t = table_from(np.column_stack([y, rng.normal(size=300)]), y)
    scores = dict(correlation_ranking(t).entries)
    assert scores["f0"] == pytest.approx(1.0, abs=1e-12)
    assert scores["f1"] < 0.2


def test_correlation_ranking_on_full_schema():
    ranking = correlation_ranking(make_table(400, seed=2, inf_rate=0))
    assert len(ranking) == 128
    assert all(0.0 <= s <= 1.0 for _, s in ranking.entries)
    assert len(select_top_k(ranking, 14)) == 14


def test_correlation_matches_numpy_corrcoef():
    rng = np.random.default_rng(3)
    y = rng.integers(0, 3, 100)
    X = rng.normal(size=(100, 5)) + y[:, None] * [0.1, 0.5, 0, 2, -1]
    scores = dict(correlation_ranking(table_from(X, y)).entries)
    for j in range(5):
        r = abs(np.corrcoef(X[:, j], y)[0, 1])
        assert scores[f"f{j}"] == pytest.approx(r, abs=1e-12)


# mutual information

def test_mi_identity_is_ln2():
    y = np.array([0, 1] * 50)
    scores = dict(mutual_information(table_from(y.astype(float), y), 20).entries)
    assert scores["f0"] == pytest.approx(math.log(2), abs=1e-12)


def test_mi_independent_feature_is_small():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 3, 10000)
    x = rng.normal(size=10000)
    scores = dict(mutual_information(table_from(x, y), 20).entries)
    assert 0.0 <= scores["f0"] < 0.05
    assert scores["f0"] == pytest.approx(mi_oracle(x.tolist(), y.tolist(), 20), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 100), st.integers(1, 25), st.integers(0, 2**32 - 1), st.booleans())
def test_mi_matches_triple_loop_oracle(n, n_bins, seed, discrete):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 3, n)
    X = rng.integers(0, 4, size=(n, 3)).astype(float) if discrete else rng.normal(size=(n, 3))
    X[:, 2] = X[:, 2] * 0 + 1.5 if seed % 5 == 0 else X[:, 2]
    scores = dict(mutual_information(table_from(X, y), n_bins).entries)
    for j in range(3):
        assert abs(scores[f"f{j}"] - mi_oracle(X[:, j].tolist(), y.tolist(), n_bins)) < 1e-12


def test_mi_invariant_to_positive_affine_map():
    rng = np.random.default_rng(4)
    y = rng.integers(0, 3, 80)
    x = rng.normal(size=80) + y
    a = dict(mutual_information(table_from(x, y)).entries)["f0"]
    b = dict(mutual_information(table_from(3.0 * x + 11.0, y)).entries)["f0"]
    assert a == pytest.approx(b, abs=1e-12)


def test_mi_too_few_rows():
    with pytest.raises(TooFewRows):
        mutual_information(table_from([1.0], [0]))


# top-k selection

def test_select_top_k_full_and_forty():
    names = tuple(f"f{j}" for j in range(128))
    scores = FeatureScoreList.from_scores(names, np.linspace(0, 1, 128), "mutual_information")
    assert set(select_top_k(scores, 128)) == set(names)
    top = select_top_k(scores, 40)
    assert len(top) == 40 and top[0] == "f127"
    with pytest.raises(KOutOfRange):
        select_top_k(scores, 0)
    with pytest.raises(KOutOfRange):
        select_top_k(scores, 129)


def test_select_top_k_tie_prefers_lower_index():
    s = np.zeros(12)
    s[:5] = 10
    s[5] = s[9] = 1.0
    names = tuple(f"f{j}" for j in range(12))
    top = select_top_k(FeatureScoreList.from_scores(names, s, "pearson_abs"), 6)
    assert "f5" in top and "f9" not in top


def test_top_k_prefix_property():
    rng = np.random.default_rng(5)
    names = tuple(f"f{j}" for j in range(30))
    scores = FeatureScoreList.from_scores(names, rng.integers(0, 5, 30), "pearson_abs")
    for k in range(1, 30):
        assert select_top_k(scores, k) == select_top_k(scores, k + 1)[:k]


# PCA

def jacobi_eigh(A, tol=1e-15, sweeps=100):
    """Cyclic Jacobi rotations; returns (eigenvalues, eigenvector columns)."""
    A = np.array(A, dtype=np.float64)
    n = len(A)
    V = np.eye(n)
    for _ in range(sweeps):
        off = math.sqrt(sum(A[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                R = np.eye(n)
                R[p, p] = R[q, q] = c
                R[p, q], R[q, p] = s, -s
                A = R.T @ A @ R
                V = V @ R
    return np.diag(A).copy(), V


def test_pca_matches_jacobi_oracle():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(10, 5)) * [5, 3, 2, 1, 0.5]
    model = pca_fit(table_from(X, [0] * 10), 2)
    centered = X - X.mean(axis=0)
    vals, vecs = jacobi_eigh(centered.T @ centered / 9)
    order = np.argsort(-vals)
    for i in range(2):
        ref = vecs[:, order[i]]
        cos = abs(model.components[i] @ ref) / np.linalg.norm(ref)
        assert cos > 1 - 1e-9
        assert model.explained_variance[i] == pytest.approx(vals[order[i]], rel=1e-9)


def test_pca_components_orthonormal():
    mix = np.random.default_rng(8).normal(size=(8, 8))
    X = np.random.default_rng(7).normal(size=(200, 8)) @ mix
    model = pca_fit(table_from(X, [0] * 200), 2)
    c = model.components
    assert abs(c[0] @ c[1]) < 1e-9
    assert all(abs(np.linalg.norm(v) - 1) < 1e-9 for v in c)
    assert model.explained_variance[0] >= model.explained_variance[1]


def test_pca_rank_one_data():
    t = np.linspace(-3, 3, 40)
    X = np.column_stack([t, 2 * t, -t + 0.0])
    model = pca_fit(table_from(X, [0] * 40), 2)
    assert model.explained_variance[1] < 1e-9
    proj = pca_project(model, table_from(X, [0] * 40))
    assert np.all(np.abs(proj[:, 1]) < 1e-9)


def test_pca_projection_contracts_and_centres():
    X = np.random.default_rng(9).normal(size=(60, 6))
    t = table_from(X, [0] * 60)
    proj = pca_project(pca_fit(t, 2), t)
    assert np.all(np.abs(proj.mean(axis=0)) < 1e-12)
    d_full = ((X[:, None, :] - X[None, :, :]) ** 2).sum()
    d_proj = ((proj[:, None, :] - proj[None, :, :]) ** 2).sum()
    assert d_proj <= d_full


def test_pca_sign_convention_and_errors():
    X = np.random.default_rng(10).normal(size=(30, 4))
    for row in pca_fit(table_from(X, [0] * 30), 2).components:
        assert row[np.argmax(np.abs(row))] > 0
    with pytest.raises(TooFewRows):
        pca_fit(table_from(np.ones((1, 3)), [0]))

from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import table_from

from pmudetect.errors import AllRowsRemoved, ClassTooSmall, DimensionMismatch, TooFewRows
from pmudetect.neighbors import euclidean_distances
from pmudetect.preprocess import (
    SmoteParams,
    drop_nonfinite,
    iforest_fit,
    iforest_score,
    remove_outliers,
    scaler_apply,
    scaler_fit,
    smote,
)
from pmudetect.preprocess.iforest import (
    _build_tree,
    anomaly_score,
    average_path_length,
    iforest_fit_array,
)
from pmudetect.preprocess.smote import smote_arrays

# non-finite filter

def test_drop_nonfinite_identity():
    t = table_from(np.arange(6.0).reshape(3, 2), [0, 1, 2])
    out, removed = drop_nonfinite(t)
    assert removed == 0 and np.array_equal(out.values, t.values)


def test_drop_single_infinite_row():
    v = np.arange(10.0).reshape(5, 2)
    v[2, 1] = np.inf
    out, removed = drop_nonfinite(table_from(v, [0, 1, 2, 0, 1]))
    assert removed == 1 and out.n_rows == 4
    assert out.labels.tolist() == [0, 1, 0, 1]


def test_drop_mixed_nan_and_neg_inf():
    v = np.ones((6, 3))
    v[1, 0] = np.nan
    v[4, 2] = -np.inf
    out, removed = drop_nonfinite(table_from(v, [0] * 6))
    flagged = [i for i in range(6) if not all(math.isfinite(x) for x in v[i])]
    assert flagged == [1, 4]
    assert removed == 2 and out.n_rows == 4


def test_drop_everything_raises():
    with pytest.raises(AllRowsRemoved):
        drop_nonfinite(table_from([[np.inf], [np.nan]], [0, 1]))


# isolation forest

def test_c2_value():
    assert abs(average_path_length(2) - 0.1544313298) < 1e-9
    assert abs(2 * (math.log(1) + 0.5772156649) - 1 - 0.1544313298) < 1e-9
    assert average_path_length(1) == 0.0 and average_path_length(0) == 0.0


def test_c_matches_harmonic_approximation():
    for n in (3, 10, 256, 5000):
        expected = 2 * (math.log(n - 1) + 0.5772156649) - 2 * (n - 1) / n
        assert abs(average_path_length(n) - expected) < 1e-12


def test_score_half_at_fixed_point():
    for psi in (2, 16, 256):
        assert anomaly_score(average_path_length(psi), psi) == pytest.approx(0.5, abs=1e-15)


def test_model_score_matches_formula():
    X = np.random.default_rng(0).normal(size=(300, 4))
    model = iforest_fit_array(X, n_trees=20, subsample_size=64, seed=3)
    h = model.mean_path_length(X[:5])
    expected = 2.0 ** (-h / average_path_length(64))
    assert np.allclose(model.score_samples(X[:5]), expected, rtol=0, atol=1e-15)
    assert 0 < iforest_score(model, X[0]) < 1


@pytest.mark.parametrize("seed", range(10))
def test_planted_outlier_ranks_first(seed):
    rng = np.random.default_rng(seed)
    blob = rng.normal(scale=0.1, size=(100, 3))
    X = np.vstack([blob, [[5.0, 5.0, 5.0]]])
    model = iforest_fit_array(X, n_trees=100, subsample_size=101, seed=seed)
    scores = model.score_samples(X)
    assert scores[100] > scores[:100].max()


def test_depth_bound_and_split_ranges():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(64, 3))
    limit = math.ceil(math.log2(64))
    tree = _build_tree(X, np.random.default_rng(1), limit)
    assert tree.max_depth <= limit
    # route the training rows and check each split against the rows that reached it
    stack = [(0, np.arange(len(X)))]
    while stack:
        node, rows = stack.pop()
        assert tree.size[node] == len(rows)
        f = tree.feature[node]
        if f < 0:
            continue
        col = X[rows, f]
        assert col.min() < tree.threshold[node] <= col.max()
        go_left = col < tree.threshold[node]
        stack += [(tree.left[node], rows[go_left]), (tree.right[node], rows[~go_left])]


def test_forest_depth_bound():
    X = np.random.default_rng(2).normal(size=(500, 5))
    model = iforest_fit_array(X, n_trees=30, subsample_size=256, seed=0)
    assert max(t.max_depth for t in model.trees) <= 8
    assert model.n_trees == 30


def test_subsample_two_gives_one_split_or_leaf():
    X = np.vstack([np.random.default_rng(3).normal(size=(30, 2)), [[0.0, 0.0]] * 30])
    model = iforest_fit_array(X, n_trees=50, subsample_size=2, seed=4)
    for tree in model.trees:
        n_splits = int((tree.feature >= 0).sum())
        assert n_splits <= 1
        assert len(tree.feature) in (1, 3)


def test_same_seed_same_forest():
    t = table_from(np.random.default_rng(5).normal(size=(200, 3)), [0] * 200)
    a, b = iforest_fit(t, 10, 64, seed=9), iforest_fit(t, 10, 64, seed=9)
    for x, y in zip(a.trees, b.trees):
        assert np.array_equal(x.feature, y.feature)
        assert np.array_equal(x.threshold, y.threshold)


def test_default_forest_size_and_errors():
    t = table_from(np.random.default_rng(5).normal(size=(300, 2)), [0] * 300)
    assert iforest_fit(t).n_trees == 100
    assert iforest_fit(t).subsample_size == 256
    with pytest.raises(TooFewRows):
        iforest_fit(t, subsample_size=1000)
    with pytest.raises(DimensionMismatch):
        iforest_score(iforest_fit(t, 5), np.zeros(3))


def _forest_table(n, seed=0):
    rng = np.random.default_rng(seed)
    return table_from(rng.normal(size=(n, 3)), rng.integers(0, 3, n))


def test_contamination_tiny_removes_one():
    t = _forest_table(200)
    model = iforest_fit(t, 20, 64, seed=1)
    kept, removed, scores = remove_outliers(t, model, 1e-6)
    assert len(removed) == 1 and kept.n_rows == 199
    assert removed[0] == int(np.argmax(scores))


def test_contamination_five_percent_of_thousand():
    t = _forest_table(1000)
    model = iforest_fit(t, 20, 128, seed=1)
    kept, removed, _ = remove_outliers(t, model, 0.05)
    assert len(removed) == 50 and kept.n_rows == 950


def test_removed_set_matches_oracle_sort():
    t = _forest_table(400, seed=3)
    model = iforest_fit(t, 25, 100, seed=2)
    _, removed, _ = remove_outliers(t, model, 0.1)
    scores = [iforest_score(model, row) for row in t.values]
    oracle = sorted(range(t.n_rows), key=lambda i: (-scores[i], i))[:40]
    assert removed.tolist() == sorted(oracle)


def test_remove_outliers_ties_lowest_index_first():
    t = table_from(np.zeros((10, 2)), [0] * 10)
    model = iforest_fit(t, 5, 4, seed=0)
    _, removed, scores = remove_outliers(t, model, 0.2)
    assert len(set(scores.tolist())) == 1
    assert removed.tolist() == [0, 1]


# scaling

def test_scaler_hand_values():
    t = table_from([[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]], [0, 1, 2])
    s = scaler_fit(t)
    assert s.means[0] == 2.0
    assert s.stds[0] == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    out = scaler_apply(s, t).values
    assert out[:, 0] == pytest.approx([-1.22474487, 0.0, 1.22474487], abs=1e-8)
    assert out[:, 1].tolist() == [0.0, 0.0, 0.0]


def test_scaler_standardises_own_table():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(50, 4)) * [1, 100, 1e5, 0] + [0, 3, -7, 2]
    out = scaler_apply(scaler_fit(table_from(v, [0] * 50)), table_from(v, [0] * 50)).values
    assert np.all(np.abs(out.mean(axis=0)) < 1e-12)
    assert np.allclose(out[:, :3].std(axis=0), 1.0, atol=1e-12)
    assert np.all(out[:, 3] == 0)


def test_scaler_dimension_check():
    s = scaler_fit(table_from(np.ones((3, 2)), [0, 1, 2]))
    with pytest.raises(DimensionMismatch):
        scaler_apply(s, table_from(np.ones((3, 3)), [0, 1, 2]))


# SMOTE

def _imbalanced(seed=0, counts=(60, 20, 9)):
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(3), counts)
    X = rng.normal(size=(len(y), 4)) + y[:, None] * 3.0
    return X, y


def test_smote_balanced_table_unchanged():
    t = table_from(np.random.default_rng(0).normal(size=(30, 2)), np.repeat([0, 1, 2], 10))
    assert smote(t, SmoteParams(k_neighbors=3)) is t


def test_smote_degenerate_class():
    X = np.vstack([np.random.default_rng(0).normal(size=(20, 2)), np.full((6, 2), 4.0)])
    y = np.array([0] * 20 + [1] * 6)
    Xo, yo, trace = smote_arrays(X, y, SmoteParams(k_neighbors=5, classes=(1,)))
    assert np.all(Xo[26:] == 4.0)
    assert np.bincount(yo).tolist() == [20, 20]


def test_smote_rows_lie_on_parent_neighbour_segments():
    X, y = _imbalanced()
    params = SmoteParams(k_neighbors=5, seed=3)
    Xo, yo, trace = smote_arrays(X, y, params)
    synth = Xo[len(X):]
    dist = euclidean_distances(X, X)
    for s, p, q, u, c in zip(synth, trace.parent, trace.neighbor, trace.gap, trace.label):
        assert y[p] == y[q] == c
        # oracle: q is among the k nearest same-class rows of p
        members = [j for j in np.flatnonzero(y == c) if j != p]
        nearest = sorted(members, key=lambda j: (dist[p, j], j))[:5]
        assert q in nearest
        d = X[q] - X[p]
        u_hat = float(np.dot(s - X[p], d) / np.dot(d, d)) if np.dot(d, d) else 0.0
        assert 0.0 <= u_hat <= 1.0 + 1e-12
        assert np.linalg.norm((s - X[p]) - u_hat * d) < 1e-9
        assert abs(u_hat - u) < 1e-9 or np.dot(d, d) == 0


def test_smote_counts_equal_and_prefix_preserved():
    X, y = _imbalanced(seed=4)
    t = table_from(X, y)
    out = smote(t, SmoteParams(k_neighbors=5, seed=1))
    assert np.bincount(out.labels).tolist() == [60, 60, 60]
    assert np.array_equal(out.values[: t.n_rows], t.values)
    assert np.all(out.provenance[t.n_rows:] == -1)


def test_smote_deterministic():
    X, y = _imbalanced(seed=5)
    a = smote_arrays(X, y, SmoteParams(seed=8))[0]
    b = smote_arrays(X, y, SmoteParams(seed=8))[0]
    assert a.tobytes() == b.tobytes()


def test_smote_class_too_small():
    X, y = _imbalanced(counts=(30, 20, 5))
    with pytest.raises(ClassTooSmall):
        smote_arrays(X, y, SmoteParams(k_neighbors=5))

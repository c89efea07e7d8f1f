"""Isolation forest built from scratch on numpy arrays.

Trees are stored as flat node arrays so scoring can push every row down a
tree at once instead of recursing per row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pmudetect.data import FloatArray, MeasurementTable
from pmudetect.errors import DimensionMismatch, TooFewRows

EULER_GAMMA = 0.5772156649


def average_path_length(n: int | np.ndarray) -> float | np.ndarray:
    """Expected unsuccessful-search path length ``c(n)`` of a BST with n keys.

    ``c(n) = 2 H(n-1) - 2 (n-1) / n`` with ``H(i) ~ ln(i) + 0.5772156649``;
    ``c(n) = 0`` for ``n <= 1``.
    """
    arr = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(arr)
    big = arr >= 2
    m = arr[big]
    out[big] = 2.0 * (np.log(m - 1.0) + EULER_GAMMA) - 2.0 * (m - 1.0) / m
    return float(out) if out.ndim == 0 else out


def anomaly_score(mean_path_length, subsample_size: int):
    """``2 ** (-E[h(x)] / c(subsample_size))``; 0.5 when E[h] equals c."""
    return np.power(2.0, -np.asarray(mean_path_length) / average_path_length(subsample_size))


@dataclass(frozen=True)
class IsolationTree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray  # rows with x < threshold go left
    left: np.ndarray
    right: np.ndarray
    depth: np.ndarray
    size: np.ndarray  # training rows that reached the node

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def path_lengths(self, X: FloatArray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            n = node[active]
            go_left = X[r, self.feature[n]] < self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return self.depth[node] + average_path_length(self.size[node])


@dataclass(frozen=True)
class IsolationForestModel:
    trees: tuple[IsolationTree, ...]
    subsample_size: int
    n_features: int
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def mean_path_length(self, X: FloatArray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"expected {self.n_features} features, got {X.shape[1]}")
        total = np.zeros(len(X))
        for tree in self.trees:
            total += tree.path_lengths(X)
        return total / self.n_trees

    def score_samples(self, X: FloatArray) -> np.ndarray:
        return anomaly_score(self.mean_path_length(X), self.subsample_size)


def _build_tree(X: FloatArray, rng: np.random.Generator, depth_limit: int) -> IsolationTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    depth: list[int] = []
    size: list[int] = []

    def new_node(d: int, n: int) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        depth.append(d)
        size.append(n)
        return len(feature) - 1

    root = new_node(0, len(X))
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, rows = stack.pop()
        d = depth[node]
        if len(rows) <= 1 or d >= depth_limit:
            continue
        sub = X[rows]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        candidates = np.flatnonzero(hi > lo)
        if len(candidates) == 0:
            continue  # duplicate points cannot be separated
        f = int(candidates[rng.integers(len(candidates))])
        split = lo[f]
        while split <= lo[f]:
            split = lo[f] + rng.random() * (hi[f] - lo[f])
        mask = sub[:, f] < split
        feature[node] = f
        threshold[node] = float(split)
        lrows, rrows = rows[mask], rows[~mask]
        left[node] = new_node(d + 1, len(lrows))
        right[node] = new_node(d + 1, len(rrows))
        stack.append((right[node], rrows))
        stack.append((left[node], lrows))

    return IsolationTree(
        np.array(feature, dtype=np.int64), np.array(threshold),
        np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
        np.array(depth, dtype=np.int64), np.array(size, dtype=np.int64),
    )


def iforest_fit_array(X: FloatArray, n_trees: int = 100, subsample_size: int = 256,
                      seed: int = 0) -> IsolationForestModel:
    X = np.asarray(X, dtype=np.float64)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if subsample_size < 2 or subsample_size > len(X):
        raise TooFewRows(
            f"subsample_size must be in [2, {len(X)}], got {subsample_size}")
    depth_limit = math.ceil(math.log2(subsample_size))
    trees = []
    for t in range(n_trees):
        rng = np.random.Generator(np.random.PCG64(seed ^ t))
        rows = rng.choice(len(X), size=subsample_size, replace=False)
        trees.append(_build_tree(X[rows], rng, depth_limit))
    return IsolationForestModel(tuple(trees), subsample_size, X.shape[1], seed)


def iforest_fit(table: MeasurementTable, n_trees: int = 100,
                subsample_size: int | None = None, seed: int = 0) -> IsolationForestModel:
    """Fit an isolation forest; ``subsample_size`` defaults to min(256, n_rows)."""
    if subsample_size is None:
        subsample_size = min(256, table.n_rows)
    return iforest_fit_array(table.values, n_trees, subsample_size, seed)


def iforest_score(model: IsolationForestModel, row) -> float:
    """Anomaly score of a single feature vector; higher is more anomalous."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1:
        raise DimensionMismatch("iforest_score expects a single row")
    return float(model.score_samples(row[None, :])[0])


def top_k_count(contamination: float, n_rows: int) -> int:
    """``ceil(contamination * n_rows)``, immune to float noise like 50.000000001."""
    raw = contamination * n_rows
    nearest = round(raw)
    if nearest > 0 and abs(raw - nearest) < 1e-9:
        return int(nearest)
    return int(math.ceil(raw))


def remove_outliers(table: MeasurementTable, model: IsolationForestModel,
                    contamination: float = 0.05) -> tuple[MeasurementTable, np.ndarray, np.ndarray]:
    """Drop the ``ceil(contamination * n)`` highest-scoring rows.

    Ties are broken by removing the lower row index first. Returns the
    surviving table, the sorted removed indices, and the score of every row.
    """
    if not (0.0 < contamination < 0.5):
        raise ValueError(f"contamination must be in (0, 0.5), got {contamination}")
    scores = model.score_samples(table.values)
    k = top_k_count(contamination, table.n_rows)
    order = np.argsort(-scores, kind="stable")
    removed = np.sort(order[:k])
    keep = np.setdiff1d(np.arange(table.n_rows), removed)
    return table.take(keep), removed, scores

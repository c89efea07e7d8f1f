"""Per-feature statistics, feature rankings and the PCA projection.

Rankings are returned as :class:`FeatureScoreList`, sorted by descending
score with ties kept in feature-index order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from pmudetect.data import N_CLASSES, FloatArray, MeasurementTable
from pmudetect.errors import KOutOfRange, TooFewRows, UnknownFeature

ScoreMethod = Literal["pearson_abs", "mutual_information"]


@dataclass(frozen=True)
class FeatureScoreList:
    entries: tuple[tuple[str, float], ...]
    method: ScoreMethod

    @classmethod
    def from_scores(cls, names, scores, method: ScoreMethod) -> FeatureScoreList:
        scores = np.asarray(scores, dtype=np.float64)
        order = sorted(range(len(names)), key=lambda i: (-scores[i], i))
        return cls(tuple((names[i], float(scores[i])) for i in order), method)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def histogram(table: MeasurementTable, feature_name: str, n_bins: int = 20,
              ) -> list[tuple[float, float, int]]:
    """Equal-width bins over the feature's [min, max]; the last bin is closed."""
    if feature_name not in table.feature_names:
        raise UnknownFeature(feature_name)
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    column = table.values[:, table.feature_names.index(feature_name)]
    counts, edges = np.histogram(column, bins=n_bins)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(n_bins)]


def correlation_ranking(table: MeasurementTable) -> FeatureScoreList:
    """Rank features by |Pearson r| against the integer class code."""
    if table.n_rows < 2:
        raise TooFewRows("correlation needs at least two rows")
    X = table.values
    y = table.labels.astype(np.float64)
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    sxx = np.sqrt((xc * xc).sum(axis=0))
    syy = np.sqrt((yc * yc).sum())
    cov = yc @ xc
    flat = (sxx == 0) | (syy == 0) | (np.ptp(X, axis=0) == 0)
    denom = np.where(flat, 1.0, sxx * syy)
    r = np.where(flat, 0.0, np.abs(cov) / denom)
    return FeatureScoreList.from_scores(table.feature_names, np.clip(r, 0.0, 1.0),
                                        "pearson_abs")


def discretize(column: FloatArray, n_bins: int) -> np.ndarray:
    """Equal-width bin index in ``[0, n_bins)``; a constant column maps to bin 0."""
    lo, hi = column.min(), column.max()
    if hi <= lo:
        return np.zeros(len(column), dtype=np.int64)
    idx = np.floor((column - lo) / (hi - lo) * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def mutual_information_column(column: FloatArray, labels: np.ndarray,
                              n_bins: int = 20) -> float:
    """Histogram mutual information between one feature and the labels, in nats."""
    bins = discretize(column, n_bins)
    joint = np.zeros((n_bins, N_CLASSES))
    np.add.at(joint, (bins, labels), 1.0)
    joint /= len(column)
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / (px @ py)[nz])))


def mutual_information(table: MeasurementTable, n_bins: int = 20) -> FeatureScoreList:
    if table.n_rows < 2:
        raise TooFewRows("mutual information needs at least two rows")
    scores = [max(0.0, mutual_information_column(table.values[:, j], table.labels, n_bins))
              for j in range(table.n_features)]
    return FeatureScoreList.from_scores(table.feature_names, scores, "mutual_information")


def select_top_k(scores: FeatureScoreList, k: int) -> list[str]:
    if not 1 <= k <= len(scores):
        raise KOutOfRange(f"k must be in [1, {len(scores)}], got {k}")
    return scores.names[:k]


@dataclass(frozen=True)
class PcaModel:
    means: FloatArray
    components: FloatArray  # shape (n_components, n_features), rows orthonormal
    explained_variance: FloatArray

    def project(self, X: FloatArray) -> FloatArray:
        return (np.asarray(X, dtype=np.float64) - self.means) @ self.components.T


def pca_fit(table: MeasurementTable, n_components: int = 2) -> PcaModel:
    """Top eigenvectors of the sample covariance (n - 1 denominator).

    Each component is oriented so its largest-magnitude coordinate is
    positive, keeping projections byte-stable across runs.
    """
    X = table.values
    if len(X) < 2:
        raise TooFewRows("PCA needs at least two rows")
    if not 1 <= n_components <= X.shape[1]:
        raise ValueError(f"n_components must be in [1, {X.shape[1]}]")
    means = X.mean(axis=0)
    centered = X - means
    cov = centered.T @ centered / (len(X) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(-eigvals, kind="stable")[:n_components]
    components = eigvecs[:, order].T.copy()
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    variance = np.clip(eigvals[order], 0.0, None)
    return PcaModel(means, components, variance)


def pca_project(model: PcaModel, table: MeasurementTable) -> FloatArray:
    return model.project(table.values)

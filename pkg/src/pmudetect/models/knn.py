from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pmudetect.data import N_CLASSES, FloatArray, IntArray
from pmudetect.errors import DimensionMismatch, EmptyTrainingSet, KExceedsTrainingSize
from pmudetect.neighbors import k_nearest


@dataclass(frozen=True)
class KnnParams:
    k: int = 5

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be positive")


@dataclass(frozen=True)
class KNearest:
    """Stored training set; prediction is a brute-force neighbour vote."""

    X: FloatArray
    y: IntArray
    k: int

    def predict(self, X: FloatArray, k: int | None = None) -> IntArray:
        k = self.k if k is None else k
        if k > len(self.X):
            raise KExceedsTrainingSize(f"k={k} exceeds {len(self.X)} training rows")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.X.shape[1]:
            raise DimensionMismatch(
                f"expected {self.X.shape[1]} features, got shape {X.shape}")
        neighbours = k_nearest(X, self.X, k)
        tally = np.zeros((len(X), N_CLASSES), dtype=np.int64)
        np.add.at(tally, (np.repeat(np.arange(len(X)), k), self.y[neighbours].ravel()), 1)
        return np.argmax(tally, axis=1)


def fit_knn(X: FloatArray, y: IntArray, params: KnnParams) -> KNearest:
    X = np.array(X, dtype=np.float64)
    if len(X) == 0:
        raise EmptyTrainingSet("cannot store an empty training set")
    if params.k > len(X):
        raise KExceedsTrainingSize(f"k={params.k} exceeds {len(X)} training rows")
    return KNearest(X, np.array(y, dtype=np.int64), params.k)

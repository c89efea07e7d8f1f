from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from pmudetect.data import N_CLASSES, FloatArray, IntArray
from pmudetect.errors import DimensionMismatch, EmptyTrainingSet
from pmudetect.models.tree import Criterion, DecisionTree, build_tree


@dataclass(frozen=True)
class RandomForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    criterion: Criterion = "gini"
    max_features: Literal["sqrt", "all"] = "sqrt"
    min_samples_split: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        if self.criterion not in ("gini", "entropy"):
            raise ValueError(f"criterion must be gini or entropy, got {self.criterion!r}")
        if self.max_features not in ("sqrt", "all"):
            raise ValueError(f"max_features must be sqrt or all, got {self.max_features!r}")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")

    def features_per_split(self, n_features: int) -> int:
        if self.max_features == "all":
            return n_features
        return max(1, math.isqrt(n_features))


@dataclass(frozen=True)
class RandomForest:
    trees: tuple[DecisionTree, ...]
    n_features: int

    def votes(self, X: FloatArray) -> FloatArray:
        """Per-class fraction of trees voting for each row."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"forest expects {self.n_features} features, got shape {X.shape}")
        tally = np.zeros((len(X), N_CLASSES))
        rows = np.arange(len(X))
        for tree in self.trees:
            tally[rows, tree.predict(X)] += 1.0
        return tally / len(self.trees)

    def predict(self, X: FloatArray) -> IntArray:
        return np.argmax(self.votes(X), axis=1)


def fit_forest(X: FloatArray, y: IntArray, params: RandomForestParams) -> RandomForest:
    """Bagged trees; tree ``t`` draws its bootstrap and splits from ``seed ^ t``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise EmptyTrainingSet("cannot train a forest on zero rows")
    n = len(X)
    mtry = params.features_per_split(X.shape[1])
    trees = []
    for t in range(params.n_trees):
        rng = np.random.Generator(np.random.PCG64(params.seed ^ t))
        boot = rng.integers(n, size=n)
        node_seed = int(rng.integers(2**63))
        trees.append(build_tree(X[boot], y[boot], node_seed, criterion=params.criterion,
                                max_depth=params.max_depth, max_features=mtry,
                                min_samples_split=params.min_samples_split))
    return RandomForest(tuple(trees), X.shape[1])

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pmudetect.data import N_CLASSES, IntArray
from pmudetect.errors import ClassSmallerThanFolds


@dataclass(frozen=True)
class FoldPlan:
    n_folds: int
    assignments: IntArray  # test-fold index of every row
    seed: int

    def test_rows(self, fold: int) -> IntArray:
        return np.flatnonzero(self.assignments == fold)

    def train_rows(self, fold: int) -> IntArray:
        return np.flatnonzero(self.assignments != fold)


def stratified_kfold(labels, n_folds: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal its rows round-robin to folds.

    Classes are processed in ascending code order from one random stream,
    so the plan depends only on ``(labels, n_folds, seed)``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    counts = np.bincount(labels, minlength=N_CLASSES)
    small = [c for c in range(N_CLASSES) if 0 < counts[c] < n_folds]
    if small:
        raise ClassSmallerThanFolds(
            f"classes {small} have fewer rows than n_folds={n_folds}: "
            f"{[int(counts[c]) for c in small]}")
    rng = np.random.Generator(np.random.PCG64(seed))
    assignments = np.empty(len(labels), dtype=np.int64)
    for code in range(N_CLASSES):
        members = rng.permutation(np.flatnonzero(labels == code))
        assignments[members] = np.arange(len(members)) % n_folds
    assignments.setflags(write=False)
    return FoldPlan(n_folds, assignments, seed)

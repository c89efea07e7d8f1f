"""SMOTE oversampling that balances every class up to the majority count."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from pmudetect.data import N_CLASSES, FloatArray, IntArray, MeasurementTable
from pmudetect.errors import ClassTooSmall
from pmudetect.neighbors import k_nearest


@dataclass(frozen=True)
class SmoteParams:
    k_neighbors: int = 5
    seed: int = 0
    classes: tuple[int, ...] | None = None  # None augments every non-majority class

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be positive")


@dataclass(frozen=True)
class SmoteTrace:
    """Where each synthetic row came from, indexed into the input rows."""

    parent: IntArray
    neighbor: IntArray
    gap: FloatArray
    label: IntArray

    @property
    def n_synthetic(self) -> int:
        return len(self.parent)


def smote_arrays(X: FloatArray, y: IntArray, params: SmoteParams,
                 ) -> tuple[FloatArray, IntArray, SmoteTrace]:
    """Oversample ``(X, y)``; returns originals followed by synthetic rows."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    counts = np.bincount(y, minlength=N_CLASSES)
    target = int(counts.max())
    allowed: Sequence[int] = range(N_CLASSES) if params.classes is None else params.classes
    rng = np.random.Generator(np.random.PCG64(params.seed))

    parents, neighbors, gaps, labels = [], [], [], []
    for code in sorted(allowed):
        deficit = target - int(counts[code])
        if deficit <= 0 or counts[code] == 0:
            continue
        members = np.flatnonzero(y == code)
        if len(members) <= params.k_neighbors:
            raise ClassTooSmall(
                f"class {code} has {len(members)} rows; SMOTE needs more than "
                f"k_neighbors={params.k_neighbors}")
        knn = k_nearest(X[members], X[members], params.k_neighbors, exclude_self=True)
        pick = rng.integers(len(members), size=deficit)
        slot = rng.integers(params.k_neighbors, size=deficit)
        u = rng.random(deficit)
        parents.append(members[pick])
        neighbors.append(members[knn[pick, slot]])
        gaps.append(u)
        labels.append(np.full(deficit, code, dtype=np.int64))

    if not parents:
        empty = np.empty(0, dtype=np.int64)
        return X, y, SmoteTrace(empty, empty, np.empty(0), empty)
    trace = SmoteTrace(np.concatenate(parents), np.concatenate(neighbors),
                       np.concatenate(gaps), np.concatenate(labels))
    base = X[trace.parent]
    synthetic = base + trace.gap[:, None] * (X[trace.neighbor] - base)
    return (np.concatenate([X, synthetic]), np.concatenate([y, trace.label]), trace)


def smote(table: MeasurementTable, params: SmoteParams) -> MeasurementTable:
    """Balance ``table`` with SMOTE; synthetic rows carry provenance -1."""
    X, y, trace = smote_arrays(table.values, table.labels, params)
    if trace.n_synthetic == 0:
        return table
    provenance = np.concatenate([table.provenance, np.full(trace.n_synthetic, -1)])
    return MeasurementTable(table.feature_names, X, y, provenance)

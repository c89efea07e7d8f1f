"""Confusion matrices and the four macro-averaged metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from pmudetect.data import N_CLASSES, ClassLabel
from pmudetect.errors import EmptyMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, columns = predicted class

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> ConfusionMatrix:
        counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        np.add.at(counts, (np.asarray(y_true, dtype=np.int64),
                           np.asarray(y_pred, dtype=np.int64)), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(self.counts + other.counts)


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    zero_division: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision_macro": self.precision_macro,
                "recall_macro": self.recall_macro, "f1_macro": self.f1_macro,
                "zero_division": list(self.zero_division)}

    @classmethod
    def mean(cls, sets: list[MetricSet]) -> MetricSet:
        events = sorted({e for s in sets for e in s.zero_division})
        return cls(*(float(np.mean([getattr(s, name) for s in sets]))
                     for name in ("accuracy", "precision_macro", "recall_macro", "f1_macro")),
                   zero_division=tuple(events))


def compute_metrics(cm: ConfusionMatrix) -> MetricSet:
    """Accuracy plus unweighted per-class means of precision, recall and F1.

    A per-class ratio with a zero denominator counts as 0 and is reported
    in ``zero_division`` instead of raising.
    """
    counts = cm.counts
    total = counts.sum()
    if total < 1:
        raise EmptyMatrix("confusion matrix has no entries")
    events = []
    precisions, recalls, f1s = [], [], []
    for c in range(N_CLASSES):
        tp = float(counts[c, c])
        predicted = float(counts[:, c].sum())
        actual = float(counts[c, :].sum())
        name = ClassLabel(c).display
        if predicted == 0:
            events.append(f"precision:{name}")
            p = 0.0
        else:
            p = tp / predicted
        if actual == 0:
            events.append(f"recall:{name}")
            r = 0.0
        else:
            r = tp / actual
        precisions.append(p)
        recalls.append(r)
        f1s.append(0.0 if p + r == 0 else 2.0 * p * r / (p + r))
    if events:
        logger.info("zero-division in metrics: %s", ", ".join(events))
    return MetricSet(float(np.trace(counts) / total), sum(precisions) / N_CLASSES,
                     sum(recalls) / N_CLASSES, sum(f1s) / N_CLASSES, tuple(events))

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pmudetect.data import FloatArray, MeasurementTable
from pmudetect.errors import DimensionMismatch, TooFewRows


@dataclass(frozen=True)
class StandardScaler:
    """Per-feature mean and population standard deviation.

    A feature with zero spread keeps ``std == 0`` and is mapped to 0.
    """

    means: FloatArray
    stds: FloatArray

    def transform(self, X: FloatArray) -> FloatArray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.means):
            raise DimensionMismatch(
                f"scaler fitted on {len(self.means)} features, got shape {X.shape}")
        safe = np.where(self.stds > 0, self.stds, 1.0)
        out = (X - self.means) / safe
        out[:, self.stds == 0] = 0.0
        return out

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> StandardScaler:
        return cls(np.asarray(data["means"], dtype=np.float64),
                   np.asarray(data["stds"], dtype=np.float64))


def scaler_fit_array(X: FloatArray) -> StandardScaler:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise TooFewRows("cannot fit a scaler on an empty table")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    # exactly-constant columns can still show ~1e-17 spread from rounding
    stds[np.ptp(X, axis=0) == 0] = 0.0
    return StandardScaler(means, stds)


def scaler_fit(table: MeasurementTable) -> StandardScaler:
    return scaler_fit_array(table.values)


def scaler_apply(scaler: StandardScaler, table: MeasurementTable) -> MeasurementTable:
    return table.with_values(scaler.transform(table.values))

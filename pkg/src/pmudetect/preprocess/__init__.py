"""Cleaning and resampling steps applied before model training."""

from pmudetect.preprocess.filters import drop_nonfinite
from pmudetect.preprocess.iforest import (
    IsolationForestModel,
    average_path_length,
    iforest_fit,
    iforest_score,
    remove_outliers,
)
from pmudetect.preprocess.scaling import StandardScaler, scaler_apply, scaler_fit
from pmudetect.preprocess.smote import SmoteParams, SmoteTrace, smote, smote_arrays

__all__ = [
    "IsolationForestModel",
    "SmoteParams",
    "SmoteTrace",
    "StandardScaler",
    "average_path_length",
    "drop_nonfinite",
    "iforest_fit",
    "iforest_score",
    "remove_outliers",
    "scaler_apply",
    "scaler_fit",
    "smote",
    "smote_arrays",
]

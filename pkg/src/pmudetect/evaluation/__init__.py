"""Stratified cross-validation, macro metrics, model comparison and RF tuning."""

from pmudetect.evaluation.cv import (
    EvalReport,
    FoldData,
    FoldResult,
    PreprocessOptions,
    TuningGrid,
    compare_models,
    cross_validate,
    derive_seed,
    fit_transforms,
    grid_search,
    prepare_fold,
)
from pmudetect.evaluation.folds import FoldPlan, stratified_kfold
from pmudetect.evaluation.metrics import ConfusionMatrix, MetricSet, compute_metrics

__all__ = [
    "ConfusionMatrix",
    "EvalReport",
    "FoldData",
    "FoldPlan",
    "FoldResult",
    "MetricSet",
    "PreprocessOptions",
    "TuningGrid",
    "compare_models",
    "compute_metrics",
    "cross_validate",
    "derive_seed",
    "fit_transforms",
    "grid_search",
    "prepare_fold",
    "stratified_kfold",
]

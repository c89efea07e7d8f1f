"""Cross-validation with leakage-controlled preprocessing, model comparison, tuning.

Two leakage modes exist. ``safe`` fits the scaler and runs SMOTE on the
training rows of each fold only. ``paper-literal`` scales and balances the
whole table once and then cross-validates the augmented table, so synthetic
rows derived from test rows can land in training folds.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, TypeVar

import numpy as np

from pmudetect.data import FloatArray, IntArray, MeasurementTable
from pmudetect.errors import EmptyGrid, IncompatibleFeatureSubset, SchemaMismatch
from pmudetect.evaluation.folds import FoldPlan, stratified_kfold
from pmudetect.evaluation.metrics import ConfusionMatrix, MetricSet, compute_metrics
from pmudetect.models.artifact import ModelSpec, fit_estimator
from pmudetect.models.forest import RandomForestParams
from pmudetect.preprocess.scaling import StandardScaler, scaler_fit_array
from pmudetect.preprocess.smote import SmoteParams, smote_arrays

LeakageMode = Literal["safe", "paper-literal"]
T = TypeVar("T")
R = TypeVar("R")


def derive_seed(base: int, *keys: int) -> int:
    """Independent 63-bit seed for a (base, fold, ...) coordinate."""
    state = np.random.SeedSequence([base % 2**64, *keys]).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """``map`` that may run concurrently but always returns results in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class PreprocessOptions:
    scale: bool = True
    smote: SmoteParams | None = field(default_factory=SmoteParams)
    smote_before_scaling: bool = False

    def echo(self) -> dict:
        return {"scale": self.scale,
                "smote": None if self.smote is None else {
                    "k_neighbors": self.smote.k_neighbors, "seed": self.smote.seed,
                    "classes": None if self.smote.classes is None else list(self.smote.classes)},
                "smote_before_scaling": self.smote_before_scaling}


@dataclass(frozen=True)
class FoldData:
    X_train: FloatArray
    y_train: IntArray
    X_test: FloatArray
    y_test: IntArray
    scaler: StandardScaler | None


def fit_transforms(X: FloatArray, y: IntArray, options: PreprocessOptions, smote_seed: int,
                   ) -> tuple[FloatArray, IntArray, StandardScaler | None]:
    """Fit scaler and SMOTE on ``(X, y)``; returns transformed rows and the scaler."""
    scaler = None
    smote_params = None if options.smote is None else replace(options.smote, seed=smote_seed)
    if smote_params is not None and options.smote_before_scaling:
        X, y, _ = smote_arrays(X, y, smote_params)
    if options.scale:
        scaler = scaler_fit_array(X)
        X = scaler.transform(X)
    if smote_params is not None and not options.smote_before_scaling:
        X, y, _ = smote_arrays(X, y, smote_params)
    return X, y, scaler


def prepare_fold(X: FloatArray, y: IntArray, plan: FoldPlan, fold: int,
                 options: PreprocessOptions) -> FoldData:
    """Leakage-safe split: every fitted transform sees training rows only."""
    train, test = plan.train_rows(fold), plan.test_rows(fold)
    smote_seed = derive_seed(0 if options.smote is None else options.smote.seed, fold)
    X_train, y_train, scaler = fit_transforms(X[train], y[train], options, smote_seed)
    X_test = X[test] if scaler is None else scaler.transform(X[test])
    return FoldData(X_train, y_train, X_test, y[test], scaler)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    confusion: ConfusionMatrix
    metrics: MetricSet
    n_train: int


@dataclass(frozen=True)
class EvalReport:
    spec: ModelSpec
    leakage_mode: LeakageMode
    per_fold: tuple[FoldResult, ...]
    aggregate: MetricSet
    pooled: ConfusionMatrix
    feature_subset: tuple[str, ...]
    n_rows: int
    config: dict = field(default_factory=dict)
    tuning_trace: tuple[dict, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "model": self.spec.echo(),
            "leakage_mode": self.leakage_mode,
            "n_rows": self.n_rows,
            "n_features": len(self.feature_subset),
            "feature_subset": list(self.feature_subset),
            "aggregate": self.aggregate.as_dict(),
            "pooled_confusion": self.pooled.counts.tolist(),
            "per_fold": [{"fold": r.fold, "n_train": r.n_train,
                          "confusion": r.confusion.counts.tolist(),
                          "metrics": r.metrics.as_dict()} for r in self.per_fold],
            "config": self.config,
            "tuning_trace": None if self.tuning_trace is None else list(self.tuning_trace),
        }


def _with_seed(spec: ModelSpec, fold: int) -> ModelSpec:
    params = spec.params
    if hasattr(params, "seed"):
        params = replace(params, seed=derive_seed(params.seed, fold))
    return replace(spec, params=params)


def _subset(table: MeasurementTable, spec: ModelSpec) -> MeasurementTable:
    if spec.feature_subset is None:
        return table
    try:
        return table.select_features(spec.feature_subset)
    except SchemaMismatch as exc:
        raise IncompatibleFeatureSubset(f"{spec.name}: {exc}") from exc


def cross_validate(table: MeasurementTable, spec: ModelSpec, plan: FoldPlan,
                   leakage_mode: LeakageMode = "safe",
                   options: PreprocessOptions | None = None, *, threads: int = 1,
                   config: dict | None = None) -> EvalReport:
    """k-fold evaluation of one model spec.

    Fold ``f`` trains with model seed ``derive_seed(params.seed, f)``, so a
    given fold sees the same random stream whatever the other settings or
    the thread count.
    """
    options = options or PreprocessOptions()
    table = _subset(table, spec)
    X, y = table.values, table.labels
    if leakage_mode == "paper-literal":
        smote_seed = 0 if options.smote is None else options.smote.seed
        X, y, _ = fit_transforms(X, y, options, smote_seed)
        plan = stratified_kfold(y, plan.n_folds, plan.seed)
    elif leakage_mode != "safe":
        raise ValueError(f"unknown leakage mode {leakage_mode!r}")
    elif len(plan.assignments) != table.n_rows:
        raise ValueError("fold plan does not match the table's row count")

    def run(fold: int) -> FoldResult:
        if leakage_mode == "safe":
            data = prepare_fold(X, y, plan, fold, options)
        else:
            train, test = plan.train_rows(fold), plan.test_rows(fold)
            data = FoldData(X[train], y[train], X[test], y[test], None)
        fold_spec = _with_seed(spec, fold)
        model = fit_estimator(fold_spec.kind, data.X_train, data.y_train, fold_spec.params)
        cm = ConfusionMatrix.from_predictions(data.y_test, model.predict(data.X_test))
        return FoldResult(fold, cm, compute_metrics(cm), len(data.y_train))

    results = ordered_map(run, range(plan.n_folds), threads)
    pooled = ConfusionMatrix(sum(r.confusion.counts for r in results))
    return EvalReport(spec, leakage_mode, tuple(results),
                      MetricSet.mean([r.metrics for r in results]), pooled,
                      table.feature_names, len(y), config or {})


def compare_models(table: MeasurementTable, specs: Sequence[ModelSpec], plan: FoldPlan,
                   leakage_mode: LeakageMode = "safe",
                   options: PreprocessOptions | None = None, *, threads: int = 1,
                   ) -> list[tuple[ModelSpec, EvalReport]]:
    """Evaluate every spec on one fold plan; ranked by macro-F1, ties keep input order."""
    reports = [(spec, cross_validate(table, spec, plan, leakage_mode, options,
                                     threads=threads)) for spec in specs]
    return sorted(reports, key=lambda pair: -pair[1].aggregate.f1_macro)


@dataclass(frozen=True)
class TuningGrid:
    n_trees: tuple[int, ...] = (50, 100, 200)
    max_depth: tuple[int | None, ...] = (8, 16, None)
    criterion: tuple[str, ...] = ("gini", "entropy")

    def points(self) -> list[tuple[int, int | None, str]]:
        # n_trees outermost, criterion innermost
        return list(itertools.product(self.n_trees, self.max_depth, self.criterion))


def grid_search(table: MeasurementTable, base: RandomForestParams, grid: TuningGrid,
                plan: FoldPlan, leakage_mode: LeakageMode = "safe",
                options: PreprocessOptions | None = None, *, feature_subset=None,
                threads: int = 1) -> tuple[RandomForestParams, list[dict]]:
    """Exhaustive grid by mean CV accuracy; the first point reaching the best wins.

    Every grid point reuses the same per-fold seeds, so the comparison
    between points reflects the hyperparameters rather than resampling noise.
    """
    points = grid.points()
    if not points:
        raise EmptyGrid("tuning grid has no points")
    trace = []
    best: RandomForestParams | None = None
    best_acc = -np.inf
    for index, (n_trees, max_depth, criterion) in enumerate(points):
        params = replace(base, n_trees=n_trees, max_depth=max_depth, criterion=criterion)
        spec = ModelSpec("random_forest", "random_forest", params,
                         None if feature_subset is None else tuple(feature_subset))
        report = cross_validate(table, spec, plan, leakage_mode, options, threads=threads)
        acc = report.aggregate.accuracy
        trace.append({"index": index, "n_trees": n_trees, "max_depth": max_depth,
                      "criterion": criterion, "mean_accuracy": acc,
                      "f1_macro": report.aggregate.f1_macro})
        if acc > best_acc:
            best, best_acc = params, acc
    return best, trace

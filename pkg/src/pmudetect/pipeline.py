"""End-to-end stages behind the CLI subcommands.

Each stage reads its inputs from, and writes its artifacts to, the run's
output directory, so stages can be re-run independently.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from pmudetect.config import PipelineConfig
from pmudetect.data import (
    ClassLabel,
    MeasurementTable,
    SampleSpec,
    load_csv,
    load_scenario_map,
    merge,
    read_feature_matrix,
    stratified_sample,
    write_csv,
)
from pmudetect.errors import PipelineError, SchemaMismatch
from pmudetect.evaluation.cv import (
    EvalReport,
    cross_validate,
    derive_seed,
    fit_transforms,
    grid_search,
    ordered_map,
)
from pmudetect.evaluation.folds import stratified_kfold
from pmudetect.features import (
    FeatureScoreList,
    correlation_ranking,
    histogram,
    mutual_information,
    pca_fit,
    select_top_k,
)
from pmudetect.models.artifact import ModelSpec, TrainedModel, save_model, train
from pmudetect.models.forest import RandomForestParams
from pmudetect.preprocess.filters import drop_nonfinite
from pmudetect.preprocess.iforest import iforest_fit, remove_outliers
from pmudetect.preprocess.scaling import scaler_fit
from pmudetect.reporting import config_hash, write_csv_report, write_json

logger = logging.getLogger(__name__)

SAMPLE_CSV = "sample.csv"
CLEANED_CSV = "cleaned.csv"

# stream ids handed to derive_seed so each stage draws independent randomness
_IFOREST_STREAM, _SMOTE_STREAM, _FINAL_STREAM = 1, 2, 3


class StageError(PipelineError):
    def __init__(self, message: str, exit_code: int) -> None:
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class Run:
    config: PipelineConfig
    threads: int = 1

    @property
    def out(self) -> Path:
        path = Path(self.config.output_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    @property
    def hash(self) -> str:
        return config_hash(self.config.echo())

    @property
    def seed(self) -> int:
        return self.config.seed

    def meta(self) -> dict:
        return {"config_sha256": self.hash, "seed": self.seed}

    def csv(self, name: str, header, rows) -> Path:
        path = self.out / name
        write_csv_report(path, header, rows, cfg_hash=self.hash, seed=self.seed)
        return path

    def json(self, name: str, payload: dict) -> Path:
        path = self.out / name
        write_json(path, {**self.meta(), **payload})
        return path

    def load_stage_table(self, name: str) -> MeasurementTable:
        path = self.out / name
        if not path.exists():
            raise FileNotFoundError(f"{path} not found; run the earlier stage first")
        return load_csv(path)

    def smote_seed(self) -> int:
        return derive_seed(self.seed, _SMOTE_STREAM)


def ingest(run: Run) -> dict:
    cfg = run.config
    paths = cfg.input_paths()
    if not paths:
        raise FileNotFoundError("no input CSV files configured")
    for path in paths:
        if not path.is_file():
            raise FileNotFoundError(f"input file not found: {path}")
    scenario_map = None if cfg.scenario_map is None else load_scenario_map(cfg.scenario_map)

    def load(item: tuple[int, Path]) -> MeasurementTable:
        index, path = item
        return load_csv(path, scenario_map=scenario_map, source_index=index)

    tables = ordered_map(load, list(enumerate(paths)), run.threads)
    try:
        merged = merge(tables)
    except SchemaMismatch as exc:
        raise SchemaMismatch(f"input files disagree on columns: {exc}") from exc
    spec = SampleSpec(cfg.sample.fraction, cfg.seed, cfg.sample.stratified)
    sample = stratified_sample(merged, spec)
    write_csv(sample, run.out / SAMPLE_CSV)
    summary = {
        "inputs": [str(p) for p in paths],
        "rows_per_file": [t.n_rows for t in tables],
        "total_rows": merged.n_rows,
        "total_class_counts": merged.class_counts(),
        "fraction": cfg.sample.fraction,
        "stratified": cfg.sample.stratified,
        "sample_rows": sample.n_rows,
        "class_counts": sample.class_counts(),
    }
    run.json("sample_meta.json", summary)
    return summary


def preprocess(run: Run) -> dict:
    cfg = run.config.preprocess
    sample = run.load_stage_table(SAMPLE_CSV)
    finite_mask = np.isfinite(sample.values).all(axis=1)
    finite, removed_nonfinite = drop_nonfinite(sample)
    finite_ids = np.flatnonzero(finite_mask)
    steps: list[dict] = [{"step": "drop_nonfinite", "rows_in": sample.n_rows,
                          "removed": removed_nonfinite, "rows_out": finite.n_rows}]

    outlier_local = np.empty(0, dtype=np.int64)
    scores = np.zeros(finite.n_rows)
    cleaned = finite
    if cfg.iforest.enabled:
        seed = derive_seed(run.seed, _IFOREST_STREAM)
        subsample = min(cfg.iforest.subsample_size, finite.n_rows)
        model = iforest_fit(finite, cfg.iforest.n_trees, subsample, seed)
        cleaned, outlier_local, scores = remove_outliers(finite, model, cfg.iforest.contamination)
        steps.append({"step": "isolation_forest", "n_trees": cfg.iforest.n_trees,
                      "subsample_size": subsample, "seed": seed,
                      "contamination": cfg.iforest.contamination, "rows_in": finite.n_rows,
                      "removed": int(len(outlier_local)), "rows_out": cleaned.n_rows})
    write_csv(cleaned, run.out / CLEANED_CSV)

    is_outlier = np.zeros(finite.n_rows, dtype=bool)
    is_outlier[outlier_local] = True
    run.csv("outliers.csv", ["row_id", "score", "removed"],
            [(int(finite_ids[i]), float(scores[i]), int(is_outlier[i]))
             for i in range(finite.n_rows)])

    # projection of standardised rows, so no single high-magnitude channel dominates
    pca_rows = finite.with_values(_standardise(finite))
    pca = pca_fit(pca_rows, 2)
    coords = pca.project(pca_rows.values)
    run.csv("pca_projection.csv", ["row_id", "pc1", "pc2", "is_outlier"],
            [(int(finite_ids[i]), float(coords[i, 0]), float(coords[i, 1]),
              int(is_outlier[i])) for i in range(finite.n_rows)])

    audit = {"steps": steps, "outlier_row_ids": [int(finite_ids[i]) for i in outlier_local],
             "class_counts": cleaned.class_counts(),
             "pca_explained_variance": pca.explained_variance.tolist(),
             "deferred": {"scale": cfg.scale, "smote": cfg.smote.model_dump(mode="json"),
                          "smote_before_scaling": cfg.smote_before_scaling,
                          "note": "scaling and SMOTE are fitted inside evaluation"}}
    run.json("preprocess_audit.json", audit)
    return audit


def _standardise(table: MeasurementTable) -> np.ndarray:
    return scaler_fit(table).transform(table.values)


def _ranking(table: MeasurementTable, method: str, n_bins: int) -> FeatureScoreList:
    if method == "mutual_information":
        return mutual_information(table, n_bins)
    return correlation_ranking(table)


def analyze(run: Run) -> dict:
    cfg = run.config.features
    table = run.load_stage_table(CLEANED_CSV)
    corr = correlation_ranking(table)
    mi = mutual_information(table, cfg.n_bins)
    top_corr = min(cfg.correlation_top, table.n_features)
    top_mi = min(cfg.k, table.n_features)
    rows = []
    for ranking, top in ((corr, top_corr), (mi, top_mi)):
        for rank, (name, score) in enumerate(ranking.entries, start=1):
            rows.append((name, ranking.method, score, rank, int(rank <= top)))
    run.csv("feature_scores.csv", ["name", "method", "score", "rank", "selected"], rows)

    hist_rows = []
    for feature in cfg.histogram_features:
        if feature not in table.feature_names:
            logger.warning("histogram feature %s not in table; skipped", feature)
            continue
        for i, (lo, hi, count) in enumerate(histogram(table, feature, cfg.histogram_bins)):
            hist_rows.append((feature, i, lo, hi, count))
    run.csv("histograms.csv", ["feature", "bin", "low", "high", "count"], hist_rows)

    summary = {"n_rows": table.n_rows,
               "top_correlated": select_top_k(corr, top_corr),
               "top_mutual_information": select_top_k(mi, top_mi)}
    run.json("analysis.json", summary)
    return summary


def _variants(run: Run, table: MeasurementTable) -> list[ModelSpec]:
    cfg = run.config.features
    base = run.config.model_specs()
    if not cfg.enabled:
        return base
    subset = tuple(select_top_k(_ranking(table, cfg.method, cfg.n_bins),
                                min(cfg.k, table.n_features)))
    tag = "mi" if cfg.method == "mutual_information" else "corr"
    selected = [replace(s, name=f"{s.name}+{tag}{len(subset)}", feature_subset=subset)
                for s in base]
    return base + selected if cfg.compare_full else selected


def _final_model(run: Run, table: MeasurementTable, spec: ModelSpec) -> TrainedModel:
    """Fit ``spec`` on every cleaned row, embedding the scaler and feature subset."""
    if spec.feature_subset is not None:
        table = table.select_features(spec.feature_subset)
    options = run.config.preprocess_options(run.smote_seed())
    X, y, scaler = fit_transforms(table.values, table.labels, options,
                                  derive_seed(run.smote_seed(), _FINAL_STREAM))
    params = spec.params
    if hasattr(params, "seed"):
        params = replace(params, seed=derive_seed(params.seed, _FINAL_STREAM))
    return train(replace(spec, params=params), X, y, table.feature_names, scaler)


def _save_artifact(run: Run, model: TrainedModel, name: str, spec_name: str) -> None:
    save_model(model, run.out / name, run={**run.meta(), "spec": spec_name})


def evaluate(run: Run) -> dict:
    cfg = run.config
    table = run.load_stage_table(CLEANED_CSV)
    specs = _variants(run, table)
    try:
        plan = stratified_kfold(table.labels, cfg.n_folds, cfg.seed)
    except PipelineError as exc:
        raise StageError(f"cannot plan folds: {exc}", 5) from exc
    options = cfg.preprocess_options(run.smote_seed())
    ranked: list[tuple[ModelSpec, EvalReport]] = []
    for spec in specs:
        try:
            report = cross_validate(table, spec, plan, cfg.leakage_mode, options,
                                    threads=run.threads)
        except (PipelineError, ValueError, ArithmeticError) as exc:
            raise StageError(f"evaluation of {spec.name!r} failed: {exc}", 5) from exc
        ranked.append((spec, report))
    ranked.sort(key=lambda pair: -pair[1].aggregate.f1_macro)

    metric_rows, cm_rows = [], []
    for rank, (spec, report) in enumerate(ranked, start=1):
        agg = report.aggregate
        variant = "full" if spec.feature_subset is None else "selected"
        metric_rows.append((spec.name, spec.kind, variant, len(report.feature_subset),
                            agg.accuracy, agg.precision_macro, agg.recall_macro,
                            agg.f1_macro, rank))
        for t in ClassLabel:
            for p in ClassLabel:
                cm_rows.append((spec.name, t.display, p.display,
                                int(report.pooled.counts[t, p])))
    run.csv("metrics_by_model.csv", ["model", "kind", "variant", "n_features", "accuracy",
                                     "precision_macro", "recall_macro", "f1_macro", "rank"],
            metric_rows)
    run.csv("confusion_matrix.csv", ["model", "true_label", "predicted_label", "count"],
            cm_rows)
    payload = {"leakage_mode": cfg.leakage_mode, "n_folds": cfg.n_folds,
               "config": cfg.echo(), "ranking": [s.name for s, _ in ranked],
               "reports": {s.name: r.to_dict() for s, r in ranked}}
    run.json("eval_report.json", payload)

    best_spec = ranked[0][0]
    _save_artifact(run, _final_model(run, table, best_spec), "model.json", best_spec.name)
    return {"ranking": [(s.name, r.aggregate.f1_macro) for s, r in ranked]}


def _tuning_base(run: Run) -> RandomForestParams:
    for spec in run.config.model_specs():
        if spec.kind == "random_forest":
            return spec.params
    return RandomForestParams(seed=run.seed)


def tune(run: Run) -> dict:
    cfg = run.config
    table = run.load_stage_table(CLEANED_CSV)
    options = cfg.preprocess_options(run.smote_seed())
    subset = None
    if cfg.tuning.use_feature_selection:
        subset = select_top_k(_ranking(table, cfg.features.method, cfg.features.n_bins),
                              min(cfg.features.k, table.n_features))
    base = _tuning_base(run)
    try:
        plan = stratified_kfold(table.labels, cfg.n_folds, cfg.seed)
        best, trace = grid_search(table, base, cfg.tuning_grid(), plan, cfg.leakage_mode,
                                  options, feature_subset=subset, threads=run.threads)
        baseline_spec = ModelSpec("baseline", "random_forest", base,
                                  None if subset is None else tuple(subset))
        baseline = cross_validate(table, baseline_spec, plan, cfg.leakage_mode, options,
                                  threads=run.threads)
    except (PipelineError, ValueError, ArithmeticError) as exc:
        raise StageError(f"tuning failed: {exc}", 6) from exc

    best_entry = max(trace, key=lambda e: (e["mean_accuracy"], -e["index"]))
    run.csv("tuning_trace.csv",
            ["index", "n_trees", "max_depth", "criterion", "mean_accuracy", "f1_macro"],
            [(e["index"], e["n_trees"], "unlimited" if e["max_depth"] is None
              else e["max_depth"], e["criterion"], e["mean_accuracy"], e["f1_macro"])
             for e in trace])
    result = {"best_params": asdict(best), "tuned_accuracy": best_entry["mean_accuracy"],
              "baseline_params": asdict(base),
              "baseline_accuracy": baseline.aggregate.accuracy,
              "improvement": best_entry["mean_accuracy"] - baseline.aggregate.accuracy,
              "feature_subset": subset, "leakage_mode": cfg.leakage_mode}
    run.json("best_params.json", result)
    spec = ModelSpec("tuned_random_forest", "random_forest", best,
                     None if subset is None else tuple(subset))
    _save_artifact(run, _final_model(run, table, spec), "best_model.json", spec.name)
    return result


def predict(model_path: str | Path, csv_path: str | Path, output: str | Path) -> int:
    """Label every row of ``csv_path`` with the stored model; returns the row count."""
    document = json.loads(Path(model_path).read_text())
    model = TrainedModel.from_dict(document)
    meta = document.get("run", {})
    X, truth = read_feature_matrix(csv_path, model.feature_subset)
    finite = np.isfinite(X).all(axis=1)
    labels = np.full(len(X), -1, dtype=np.int64)
    scores = np.full((len(X), 3), np.nan)
    if finite.any():
        pred, sc = model.predict_with_scores(X[finite])
        labels[finite] = pred
        if sc is not None:
            scores[finite] = sc
    score_kind = {"random_forest": "vote", "softmax": "prob"}.get(model.kind)
    header = ["row_id", "predicted_label"]
    if truth is not None:
        header.append("true_label")
    if score_kind:
        header += [f"{score_kind}_{c.display}" for c in ClassLabel]
    rows = []
    for i in range(len(X)):
        row = [i, ClassLabel(labels[i]).display if labels[i] >= 0 else ""]
        if truth is not None:
            row.append(ClassLabel(truth[i]).display)
        if score_kind:
            row += [float(s) if finite[i] else "" for s in scores[i]]
        rows.append(row)
    write_csv_report(output, header, rows, cfg_hash=meta.get("config_sha256", "unknown"),
                     seed=meta.get("seed"))
    return len(rows)

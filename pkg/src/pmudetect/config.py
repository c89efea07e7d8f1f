"""Run configuration: one JSON document that fully determines a pipeline run."""

from __future__ import annotations

import json
import os
import re
from dataclasses import fields
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from pmudetect.data import ClassLabel
from pmudetect.errors import PipelineError, UnknownLabel
from pmudetect.evaluation.cv import PreprocessOptions, TuningGrid
from pmudetect.models.artifact import PARAM_TYPES, ModelSpec
from pmudetect.preprocess.smote import SmoteParams

OUTPUT_DIR_ENV = "PMUDETECT_OUTPUT_DIR"


class ConfigError(PipelineError):
    exit_code = 2


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SampleConfig(_Strict):
    fraction: float = Field(0.02, gt=0.0, le=1.0)
    stratified: bool = True


class IsolationForestConfig(_Strict):
    enabled: bool = True
    n_trees: int = Field(100, ge=1)
    subsample_size: int = Field(256, ge=2)
    contamination: float = Field(0.05, gt=0.0, lt=0.5)


class SmoteConfig(_Strict):
    enabled: bool = True
    k_neighbors: int = Field(5, ge=1)
    classes: list[str] | None = None

    @field_validator("classes")
    @classmethod
    def _known_classes(cls, value):
        if value is not None:
            for name in value:
                try:
                    ClassLabel.parse(name)
                except UnknownLabel as exc:
                    raise ValueError(str(exc)) from None
        return value


class PreprocessConfig(_Strict):
    iforest: IsolationForestConfig = IsolationForestConfig()
    smote: SmoteConfig = SmoteConfig()
    scale: bool = True
    smote_before_scaling: bool = False


class FeatureConfig(_Strict):
    enabled: bool = True
    method: Literal["mutual_information", "pearson_abs"] = "mutual_information"
    k: int = Field(40, ge=1)
    n_bins: int = Field(20, ge=1)
    compare_full: bool = True
    correlation_top: int = Field(14, ge=1)
    histogram_bins: int = Field(20, ge=1)
    histogram_features: list[str] = ["R1-PA1:VH"]


class ModelConfig(_Strict):
    name: str
    kind: Literal["random_forest", "knn", "softmax"]
    params: dict = {}

    @field_validator("params")
    @classmethod
    def _known_params(cls, value, info):
        kind = info.data.get("kind")
        if kind is not None:
            allowed = {f.name for f in fields(PARAM_TYPES[kind])}
            unknown = sorted(set(value) - allowed)
            if unknown:
                raise ValueError(f"unknown {kind} parameters: {unknown}")
        return value


def _default_models() -> list[ModelConfig]:
    return [ModelConfig(name="random_forest", kind="random_forest"),
            ModelConfig(name="knn", kind="knn"),
            ModelConfig(name="logistic_regression", kind="softmax")]


class TuningConfig(_Strict):
    n_trees: list[int] = [50, 100, 200]
    max_depth: list[int | None] = [8, 16, None]
    criterion: list[Literal["gini", "entropy"]] = ["gini", "entropy"]
    use_feature_selection: bool = False


class PipelineConfig(_Strict):
    inputs: list[str] = []
    input_dir: str | None = None
    scenario_map: str | None = None
    seed: int = Field(0, ge=0, lt=2**64)
    sample: SampleConfig = SampleConfig()
    preprocess: PreprocessConfig = PreprocessConfig()
    features: FeatureConfig = FeatureConfig()
    models: list[ModelConfig] = Field(default_factory=_default_models)
    tuning: TuningConfig = TuningConfig()
    n_folds: int = Field(10, ge=2)
    leakage_mode: Literal["safe", "paper-literal"] = "safe"
    output_dir: str = "pmudetect-out"

    def input_paths(self) -> list[Path]:
        paths = [Path(p) for p in self.inputs]
        if self.input_dir is not None:
            directory = Path(self.input_dir)
            if not directory.is_dir():
                raise FileNotFoundError(f"input directory not found: {directory}")
            paths += sorted(directory.glob("*.csv"), key=_natural_key)
        return paths

    def echo(self) -> dict:
        """Everything that influences results; the output location does not."""
        return self.model_dump(mode="json", exclude={"output_dir"})

    def model_specs(self) -> list[ModelSpec]:
        specs = []
        for m in self.models:
            params = dict(m.params)
            if "seed" in {f.name for f in fields(PARAM_TYPES[m.kind])}:
                params.setdefault("seed", self.seed)
            try:
                specs.append(ModelSpec(m.name, m.kind, PARAM_TYPES[m.kind](**params)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"model {m.name!r}: {exc}") from exc
        return specs

    def preprocess_options(self, smote_seed: int) -> PreprocessOptions:
        smote = None
        if self.preprocess.smote.enabled:
            classes = self.preprocess.smote.classes
            smote = SmoteParams(
                k_neighbors=self.preprocess.smote.k_neighbors, seed=smote_seed,
                classes=None if classes is None
                else tuple(sorted(int(ClassLabel.parse(c)) for c in classes)))
        return PreprocessOptions(scale=self.preprocess.scale, smote=smote,
                                 smote_before_scaling=self.preprocess.smote_before_scaling)

    def tuning_grid(self) -> TuningGrid:
        return TuningGrid(tuple(self.tuning.n_trees), tuple(self.tuning.max_depth),
                          tuple(self.tuning.criterion))


def _natural_key(path: Path):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", path.name)]


def load_config(path: str | Path | None, *, seed: int | None = None,
                output_dir: str | None = None) -> PipelineConfig:
    """Read and validate a config file, then apply CLI and environment overrides.

    The output directory resolves as flag, then ``PMUDETECT_OUTPUT_DIR``,
    then the file's ``output_dir``.
    """
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if seed is not None:
        raw["seed"] = seed
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if output_dir is not None:
        raw["output_dir"] = output_dir
    elif env_dir:
        raw["output_dir"] = env_dir
    try:
        return PipelineConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration:\n{exc}") from exc

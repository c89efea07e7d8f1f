"""Uniform train/predict contract over the three classifiers, plus JSON artifacts."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, Union

import numpy as np

from pmudetect.data import FloatArray, IntArray
from pmudetect.errors import ArtifactVersionMismatch, DimensionMismatch
from pmudetect.models.forest import RandomForest, RandomForestParams, fit_forest
from pmudetect.models.knn import KNearest, KnnParams, fit_knn
from pmudetect.models.softmax import SoftmaxParams, SoftmaxRegression, fit_softmax
from pmudetect.models.tree import DecisionTree
from pmudetect.preprocess.scaling import StandardScaler
from pmudetect.reporting import dumps_json

ARTIFACT_VERSION = 1

ModelKind = Literal["random_forest", "knn", "softmax"]
ModelParams = Union[RandomForestParams, KnnParams, SoftmaxParams]
Estimator = Union[RandomForest, KNearest, SoftmaxRegression]

PARAM_TYPES: dict[str, type] = {
    "random_forest": RandomForestParams,
    "knn": KnnParams,
    "softmax": SoftmaxParams,
}


@dataclass(frozen=True)
class ModelSpec:
    """A named classifier configuration, optionally restricted to a feature subset."""

    name: str
    kind: ModelKind
    params: ModelParams
    feature_subset: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        expected = PARAM_TYPES.get(self.kind)
        if expected is None:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not isinstance(self.params, expected):
            raise TypeError(f"{self.kind} needs {expected.__name__}, got "
                            f"{type(self.params).__name__}")

    def echo(self) -> dict:
        return {"name": self.name, "kind": self.kind, "params": asdict(self.params),
                "feature_subset": None if self.feature_subset is None
                else list(self.feature_subset)}


@dataclass(frozen=True)
class TrainedModel:
    kind: ModelKind
    estimator: Estimator
    feature_subset: tuple[str, ...]
    scaler: StandardScaler | None = None
    params: ModelParams | None = field(default=None)

    def predict(self, X: FloatArray) -> IntArray:
        """Labels for rows already restricted to ``feature_subset`` (unscaled)."""
        return self.predict_with_scores(X)[0]

    def predict_with_scores(self, X: FloatArray) -> tuple[IntArray, FloatArray | None]:
        """Labels plus vote fractions (forest) or probabilities (softmax)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_subset):
            raise DimensionMismatch(
                f"model uses {len(self.feature_subset)} features, got shape {X.shape}")
        if self.scaler is not None:
            X = self.scaler.transform(X)
        est = self.estimator
        if isinstance(est, RandomForest):
            votes = est.votes(X)
            return np.argmax(votes, axis=1), votes
        if isinstance(est, SoftmaxRegression):
            probs = est.probabilities(X)
            return np.argmax(probs, axis=1), probs
        return est.predict(X), None

    def to_dict(self) -> dict:
        est = self.estimator
        if isinstance(est, RandomForest):
            body = {"n_features": est.n_features, "trees": [t.to_dict() for t in est.trees]}
        elif isinstance(est, KNearest):
            body = {"k": est.k, "X": est.X.tolist(), "y": est.y.tolist()}
        else:
            body = {"weights": est.weights.tolist(), "n_iters": est.n_iters,
                    "converged": est.converged, "grad_inf_norm": est.grad_inf_norm}
        return {
            "version": ARTIFACT_VERSION,
            "kind": self.kind,
            "feature_subset": list(self.feature_subset),
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
            "params": None if self.params is None else asdict(self.params),
            "model": body,
        }

    @classmethod
    def from_dict(cls, data: dict) -> TrainedModel:
        if data.get("version") != ARTIFACT_VERSION:
            raise ArtifactVersionMismatch(
                f"artifact version {data.get('version')!r}, expected {ARTIFACT_VERSION}")
        kind = data["kind"]
        body = data["model"]
        if kind == "random_forest":
            est: Estimator = RandomForest(
                tuple(DecisionTree.from_dict(t) for t in body["trees"]), body["n_features"])
        elif kind == "knn":
            est = KNearest(np.asarray(body["X"], dtype=np.float64),
                           np.asarray(body["y"], dtype=np.int64), int(body["k"]))
        elif kind == "softmax":
            est = SoftmaxRegression(np.asarray(body["weights"], dtype=np.float64),
                                    n_iters=body.get("n_iters", 0),
                                    converged=body.get("converged", False),
                                    grad_inf_norm=body.get("grad_inf_norm", float("nan")))
        else:
            raise ArtifactVersionMismatch(f"unknown model kind {kind!r}")
        params = None if data.get("params") is None else PARAM_TYPES[kind](**data["params"])
        scaler = None if data.get("scaler") is None else StandardScaler.from_dict(data["scaler"])
        return cls(kind, est, tuple(data["feature_subset"]), scaler, params)


def fit_estimator(kind: ModelKind, X: FloatArray, y: IntArray, params: ModelParams) -> Estimator:
    if kind == "random_forest":
        return fit_forest(X, y, params)
    if kind == "knn":
        return fit_knn(X, y, params)
    return fit_softmax(X, y, params)


def train(spec: ModelSpec, X: FloatArray, y: IntArray, feature_names,
          scaler: StandardScaler | None = None) -> TrainedModel:
    """Fit ``spec`` on ``X`` (already scaled if ``scaler`` is given)."""
    return TrainedModel(spec.kind, fit_estimator(spec.kind, X, y, spec.params),
                        tuple(feature_names), scaler, spec.params)


def rf_train(X: FloatArray, y: IntArray, params: RandomForestParams,
             feature_names=None) -> TrainedModel:
    names = feature_names or tuple(f"x{i}" for i in range(np.shape(X)[1]))
    return TrainedModel("random_forest", fit_forest(X, y, params), tuple(names), None, params)


def rf_predict(model: TrainedModel, X: FloatArray) -> tuple[IntArray, FloatArray]:
    if model.kind != "random_forest":
        raise TypeError("rf_predict needs a random forest model")
    labels, votes = model.predict_with_scores(X)
    return labels, votes


def knn_train(X: FloatArray, y: IntArray, params: KnnParams, feature_names=None) -> TrainedModel:
    names = feature_names or tuple(f"x{i}" for i in range(np.shape(X)[1]))
    return TrainedModel("knn", fit_knn(X, y, params), tuple(names), None, params)


def knn_predict(model: TrainedModel, X: FloatArray, params: KnnParams | None = None) -> IntArray:
    if model.kind != "knn":
        raise TypeError("knn_predict needs a k-NN model")
    X = np.asarray(X, dtype=np.float64)
    if model.scaler is not None:
        X = model.scaler.transform(X)
    return model.estimator.predict(X, None if params is None else params.k)


def softmax_train(X: FloatArray, y: IntArray, params: SoftmaxParams,
                  feature_names=None) -> TrainedModel:
    names = feature_names or tuple(f"x{i}" for i in range(np.shape(X)[1]))
    return TrainedModel("softmax", fit_softmax(X, y, params), tuple(names), None, params)


def softmax_predict(model: TrainedModel, X: FloatArray) -> tuple[IntArray, FloatArray]:
    if model.kind != "softmax":
        raise TypeError("softmax_predict needs a softmax model")
    return model.predict_with_scores(X)


def save_model(model: TrainedModel, path: str | Path, **extra) -> None:
    """Write the versioned artifact; ``extra`` keys ride along and are ignored on load."""
    Path(path).write_text(dumps_json({**model.to_dict(), **extra}))


def load_model(path: str | Path) -> TrainedModel:
    return TrainedModel.from_dict(json.loads(Path(path).read_text()))

"""Random forest, k-nearest-neighbour and softmax-regression classifiers."""

from pmudetect.models.artifact import (
    ARTIFACT_VERSION,
    ModelSpec,
    TrainedModel,
    knn_predict,
    knn_train,
    load_model,
    rf_predict,
    rf_train,
    save_model,
    softmax_predict,
    softmax_train,
    train,
)
from pmudetect.models.forest import RandomForest, RandomForestParams
from pmudetect.models.knn import KNearest, KnnParams
from pmudetect.models.softmax import SoftmaxParams, SoftmaxRegression
from pmudetect.models.tree import DecisionTree, entropy, gini

__all__ = [
    "ARTIFACT_VERSION",
    "DecisionTree",
    "KNearest",
    "KnnParams",
    "ModelSpec",
    "RandomForest",
    "RandomForestParams",
    "SoftmaxParams",
    "SoftmaxRegression",
    "TrainedModel",
    "entropy",
    "gini",
    "knn_predict",
    "knn_train",
    "load_model",
    "rf_predict",
    "rf_train",
    "save_model",
    "softmax_predict",
    "softmax_train",
    "train",
]

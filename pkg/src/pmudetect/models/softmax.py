"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from pmudetect.data import N_CLASSES, FloatArray, IntArray
from pmudetect.errors import DimensionMismatch, EmptyTrainingSet, NonFiniteLoss

MAX_HALVINGS = 20


@dataclass(frozen=True)
class SoftmaxParams:
    learning_rate: float = 0.1
    l2_penalty: float = 1e-4
    max_iters: int = 500
    tolerance: float = 1e-6
    seed: int = 0  # unused by the deterministic optimiser; kept for a uniform spec shape

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.tolerance <= 0 or self.max_iters < 1:
            raise ValueError("learning_rate, tolerance and max_iters must be positive")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")


def add_bias(X: FloatArray) -> FloatArray:
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((len(X), 1))])


def softmax_probabilities(logits: FloatArray) -> FloatArray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_gradient(W: FloatArray, Xb: FloatArray, y: IntArray,
                      l2_penalty: float) -> tuple[float, FloatArray]:
    """Mean cross-entropy plus ``l2/2 * |W without bias row|^2`` and its gradient.

    ``Xb`` already carries the trailing column of ones; the last row of
    ``W`` holds the biases and is not penalised.
    """
    n = len(Xb)
    logits = Xb @ W
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    nll = -np.mean(shifted[np.arange(n), y] - log_norm)
    penalised = W[:-1]
    loss = float(nll + 0.5 * l2_penalty * np.sum(penalised * penalised))
    residual = np.exp(shifted - log_norm[:, None])
    residual[np.arange(n), y] -= 1.0
    grad = Xb.T @ residual / n
    grad[:-1] += l2_penalty * penalised
    return loss, grad


@dataclass(frozen=True)
class SoftmaxRegression:
    weights: FloatArray  # (n_features + 1, 3); last row is the bias
    loss_history: tuple[float, ...] = field(default=())
    grad_inf_norm: float = float("nan")
    n_iters: int = 0
    converged: bool = False

    @property
    def n_features(self) -> int:
        return self.weights.shape[0] - 1

    def probabilities(self, X: FloatArray) -> FloatArray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"expected {self.n_features} features, got shape {X.shape}")
        return softmax_probabilities(add_bias(X) @ self.weights)

    def predict(self, X: FloatArray) -> IntArray:
        return np.argmax(self.probabilities(X), axis=1)


def fit_softmax(X: FloatArray, y: IntArray, params: SoftmaxParams) -> SoftmaxRegression:
    """Gradient descent from ``W = 0`` with step halving on loss increase.

    A step is accepted only if it does not raise the loss; otherwise the
    learning rate is halved (at most 20 times per iteration) and the
    reduced rate is kept for later iterations. Training stops when the
    gradient's max-norm drops below ``tolerance``, after ``max_iters``
    accepted steps, or when no step size is accepted.
    """
    Xb = add_bias(X)
    y = np.asarray(y, dtype=np.int64)
    if len(Xb) == 0:
        raise EmptyTrainingSet("cannot train on zero rows")
    if not np.all(np.isfinite(Xb)):
        raise NonFiniteLoss("training rows contain non-finite values")
    W = np.zeros((Xb.shape[1], N_CLASSES))
    loss, grad = loss_and_gradient(W, Xb, y, params.l2_penalty)
    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise NonFiniteLoss("initial loss is not finite; is the input scaled and finite?")
    history = [loss]
    lr = params.learning_rate
    converged = False
    iters = 0
    while iters < params.max_iters:
        if np.max(np.abs(grad)) < params.tolerance:
            converged = True
            break
        for _ in range(MAX_HALVINGS + 1):
            candidate = W - lr * grad
            new_loss, new_grad = loss_and_gradient(candidate, Xb, y, params.l2_penalty)
            if np.isfinite(new_loss) and new_loss <= loss:
                break
            lr *= 0.5
        else:
            if not np.isfinite(new_loss):
                raise NonFiniteLoss("loss diverged to a non-finite value")
            break
        W, loss, grad = candidate, new_loss, new_grad
        history.append(loss)
        iters += 1
    if not converged and np.max(np.abs(grad)) < params.tolerance:
        converged = True
    return SoftmaxRegression(W, tuple(history), float(np.max(np.abs(grad))), iters, converged)

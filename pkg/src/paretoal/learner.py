"""Multinomial logistic regression trained by full-batch gradient descent.

The weight matrix is K x (d+1) with the bias in the last column. Optimization
is deterministic: zero initialization, backtracking line search that halves the
step whenever the candidate loss increases and doubles it after every accepted
step, stopping on a gradient max-norm tolerance or an iteration cap. The loss
is mean cross-entropy plus (l2/2) * ||W||^2 over the non-bias columns, so the
fit is invariant under duplicating every training row.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    l2: float = 1e-4
    max_iter: int = 500
    tol: float = 1e-6

    def __post_init__(self):
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")


@dataclass(frozen=True)
class ClassifierModel:
    """Fitted softmax classifier plus optimizer diagnostics."""

    weights: np.ndarray  # (K, d+1), bias last
    n_classes: int
    config: TrainConfig
    n_iter: int = 0
    grad_max: float = float("inf")
    converged: bool = False

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.weights.shape[0] != self.n_classes:
            raise ValueError("weights rows must equal n_classes")


def _augment(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.hstack((X, np.ones((X.shape[0], 1))))


def _log_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _loss_grad(W: np.ndarray, Xb: np.ndarray, y: np.ndarray, l2: float):
    n = Xb.shape[0]
    logp = _log_softmax(Xb @ W.T)
    data_loss = -logp[np.arange(n), y].mean()
    penalty = 0.5 * l2 * float(np.sum(W[:, :-1] ** 2))
    P = np.exp(logp)
    P[np.arange(n), y] -= 1.0
    grad = P.T @ Xb / n
    grad[:, :-1] += l2 * W[:, :-1]
    return data_loss + penalty, grad


def fit(X, y, n_classes: int, config: TrainConfig = TrainConfig()) -> ClassifierModel:
    """Fit from zero weights; deterministic for fixed inputs.

    ``y`` must lie in [0, n_classes); classes absent from ``y`` are allowed
    (their weight rows stay near zero). ``max_iter=0`` returns the uniform
    zero-weight model. Accepted steps never increase the loss (asserted).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) with aligned 1-D y")
    if X.shape[0] == 0:
        raise ValueError("need at least one training row")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError("labels out of range")
    Xb = _augment(X)
    W = np.zeros((n_classes, Xb.shape[1]))
    loss, grad = _loss_grad(W, Xb, y, config.l2)
    step = 1.0
    n_iter = 0
    grad_max = float(np.abs(grad).max())
    while n_iter < config.max_iter and grad_max > config.tol:
        while True:
            W_next = W - step * grad
            loss_next, grad_next = _loss_grad(W_next, Xb, y, config.l2)
            if loss_next <= loss or step < 1e-20:
                break
            step *= 0.5
        if loss_next > loss:
            break  # step underflow: no descent direction left at fp precision
        assert loss_next <= loss + 1e-12, "line search accepted an ascent step"
        W, loss, grad = W_next, loss_next, grad_next
        step *= 2.0
        n_iter += 1
        grad_max = float(np.abs(grad).max())
    return ClassifierModel(W, n_classes, config, n_iter=n_iter,
                           grad_max=grad_max, converged=grad_max <= config.tol)


def predict_proba(model: ClassifierModel, X) -> np.ndarray:
    """Row-stochastic class probabilities under the fitted softmax."""
    logp = _log_softmax(_augment(X) @ model.weights.T)
    return np.exp(logp)


def predict(model: ClassifierModel, X) -> np.ndarray:
    """Most probable class per row (ties resolve to the smallest id)."""
    return np.argmax(predict_proba(model, X), axis=1)


def loss_and_grad(model: ClassifierModel, X, y):
    """Objective value and gradient at the model's weights.

    The gradient matches central finite differences on the same objective;
    used by the derivative-check oracle.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    return _loss_grad(model.weights, _augment(X), y, model.config.l2)

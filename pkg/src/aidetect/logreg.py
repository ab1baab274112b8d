"""Logistic regression over standardized text features.

One linear layer with a sigmoid, trained by mini-batch SGD on mean binary
cross-entropy.  Gradients are closed-form: d/dz BCE(sigma(z), y) = sigma(z) - y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import FeatureMatrix, ScalerStats, WidthMismatchError
from .numerics import (EmptyTrainingSetError, LossHistory, NonFiniteLossError,
                       Rng, bce_with_logits, sgd_step, sigmoid)


@dataclass
class LogRegConfig:
    lr: float = 0.05
    epochs: int = 30
    batch_size: int = 32
    l2: float = 0.0
    seed: int = 0


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    scaler: ScalerStats | None = None
    vocab_fingerprints: dict[str, str] = field(default_factory=dict)
    threshold: float = 0.5

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 1:
            raise ValueError("weights must be a vector")


def _as_matrix(x) -> np.ndarray:
    data = x.data if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("features must be 2-D")
    return data


def _check_width(model: LogRegModel, x: np.ndarray):
    if x.shape[1] != model.weights.shape[0]:
        raise WidthMismatchError(
            f"{x.shape[1]} features vs {model.weights.shape[0]} weights")


def loss_and_grad(weights, bias, x, y, l2: float = 0.0):
    """Mean BCE loss (plus optional L2 on weights) and its exact gradient."""
    z = x @ weights + bias
    loss = bce_with_logits(z, y)
    if l2:
        loss += 0.5 * l2 * float(weights @ weights)
    dz = (sigmoid(z) - y) / y.shape[0]
    gw = x.T @ dz
    if l2:
        gw += l2 * weights
    return loss, gw, float(dz.sum())


def make_loss_and_grad(x, y, l2: float = 0.0):
    """Adapter for grad_check: params = [weights, bias(1,)]."""
    def fn(params):
        w, b = params
        loss, gw, gb = loss_and_grad(w, float(b[0]), x, y, l2)
        return loss, [gw, np.array([gb])]
    return fn


def train_logreg(train, labels, config: LogRegConfig | None = None,
                 valid=None, valid_labels=None,
                 scaler: ScalerStats | None = None,
                 vocab_fingerprints: dict[str, str] | None = None,
                 ) -> tuple[LogRegModel, LossHistory]:
    """Seeded mini-batch SGD from zero-initialized parameters.

    The recorded train loss for an epoch is the mean of each batch's loss
    *before* its update, so a full-batch run with a small learning rate shows
    a monotonically non-increasing curve.  Validation loss, when a validation
    set is given, is measured after the epoch's last update.
    """
    config = config or LogRegConfig()
    x = _as_matrix(train)
    y = np.asarray(labels, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise EmptyTrainingSetError("no training rows")
    if y.shape != (n,):
        raise ValueError(f"{n} rows vs labels {y.shape}")
    xv = _as_matrix(valid) if valid is not None else None
    yv = np.asarray(valid_labels, dtype=np.float64) if valid_labels is not None else None

    rng = Rng(config.seed)
    w = np.zeros(x.shape[1])
    b = np.zeros(1)
    history = LossHistory()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, gw, gb = loss_and_grad(w, float(b[0]), x[idx], y[idx], config.l2)
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"epoch {epoch}: loss {loss}")
            batch_losses.append(loss)
            sgd_step([w, b], [gw, np.array([gb])], config.lr)
        if xv is not None and yv is not None:
            vloss = bce_with_logits(xv @ w + float(b[0]), yv)
            history.record(epoch, float(np.mean(batch_losses)), vloss)
        else:
            history.record(epoch, float(np.mean(batch_losses)))

    model = LogRegModel(weights=w, bias=float(b[0]), scaler=scaler,
                        vocab_fingerprints=dict(vocab_fingerprints or {}))
    return model, history


def predict_proba(model: LogRegModel, features) -> np.ndarray:
    x = _as_matrix(features)
    _check_width(model, x)
    return sigmoid(x @ model.weights + model.bias)


def predict(model: LogRegModel, features) -> np.ndarray:
    """Hard labels by the `score >= threshold -> AI` rule."""
    return (predict_proba(model, features) >= model.threshold).astype(np.int64)

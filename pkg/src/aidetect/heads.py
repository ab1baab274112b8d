"""Classifier heads over frozen-backbone embeddings.

Three head layouts share one training loop:

- ``bert-ngram``: [embedding | n-gram counts] -> dense -> 2 logits, with an
  optional ReLU applied to the logits themselves before softmax,
- ``bert-custom``: dropout(0.1) -> dense 768->512 -> ReLU -> dense 512->2,
- ``distilbert-head``: dense 768->768 -> ReLU -> dropout(0.2) -> dense 768->2.

The embedding matrix is a fixed input; no gradient ever flows into it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .features import FeatureMatrix, WidthMismatchError
from .numerics import (AdamState, EmptyTrainingSetError, LossHistory,
                       NonFiniteLossError, Rng, adam_step, cross_entropy,
                       dropout_mask, glorot_uniform, relu, softmax_rows)


class MissingNgramFeaturesError(ValueError):
    pass


class HeadKind(str, Enum):
    BERT_NGRAM = "bert-ngram"
    BERT_CUSTOM = "bert-custom"
    DISTILBERT_HEAD = "distilbert-head"

    @property
    def expects_ngrams(self) -> bool:
        return self is HeadKind.BERT_NGRAM


_DROPOUT = {HeadKind.BERT_NGRAM: 0.0, HeadKind.BERT_CUSTOM: 0.1,
            HeadKind.DISTILBERT_HEAD: 0.2}


def _hidden_width(kind: HeadKind, input_dim: int) -> int:
    """bert-custom squeezes to a fixed 512; distilbert-head mirrors its input
    (768 -> 768 at full width)."""
    return 512 if kind is HeadKind.BERT_CUSTOM else input_dim


@dataclass
class HeadConfig:
    lr: float = 1e-3
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    relu_on_logits: bool = True  # bert-ngram only


@dataclass
class HeadModel:
    kind: HeadKind
    params: list  # [w0, b0] or [w0, b0, w1, b1]
    input_dim: int = 768
    relu_on_logits: bool = True
    embedding_model_id: str = ""
    vocab_fingerprints: dict[str, str] = field(default_factory=dict)

    @property
    def dropout_p(self) -> float:
        return _DROPOUT[self.kind]

    @property
    def expects_ngrams(self) -> bool:
        return self.kind.expects_ngrams

    @property
    def ngram_width(self) -> int:
        if not self.expects_ngrams:
            return 0
        return self.params[0].shape[0] - self.input_dim

    @property
    def param_names(self) -> list[str]:
        return ["w0", "b0", "w1", "b1"][:len(self.params)]


def init_head(kind: HeadKind, rng: Rng, input_dim: int = 768,
              ngram_width: int = 0, relu_on_logits: bool = True) -> HeadModel:
    """Glorot weights, zero biases; draw order is w0, then w1 when present."""
    if kind.expects_ngrams:
        if ngram_width < 1:
            raise MissingNgramFeaturesError(
                "bert-ngram needs a positive n-gram feature width")
        d = input_dim + ngram_width
        params = [glorot_uniform(rng, d, 2, (d, 2)), np.zeros(2)]
    else:
        h = _hidden_width(kind, input_dim)
        params = [glorot_uniform(rng, input_dim, h, (input_dim, h)), np.zeros(h),
                  glorot_uniform(rng, h, 2, (h, 2)), np.zeros(2)]
    return HeadModel(kind=kind, params=params, input_dim=input_dim,
                     relu_on_logits=relu_on_logits)


def _as_matrix(x) -> np.ndarray:
    data = x.data if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return data


def _check_inputs(model: HeadModel, x: np.ndarray, ngrams: np.ndarray | None):
    if x.shape[1] != model.input_dim:
        raise WidthMismatchError(f"{x.shape[1]} columns vs embedding dim "
                                 f"{model.input_dim}")
    if model.expects_ngrams:
        if ngrams is None:
            raise MissingNgramFeaturesError("this head needs n-gram features")
        if ngrams.shape != (x.shape[0], model.ngram_width):
            raise WidthMismatchError(
                f"n-gram block {ngrams.shape}, expected "
                f"({x.shape[0]}, {model.ngram_width})")
    elif ngrams is not None:
        raise WidthMismatchError("this head takes no n-gram features")


def _forward(model: HeadModel, params, x, ngrams, training: bool, rng: Rng | None):
    """Probabilities plus the intermediate tensors the backward pass needs."""
    cache = {}
    if model.kind is HeadKind.BERT_NGRAM:
        inp = np.hstack([x, ngrams])
        pre = inp @ params[0] + params[1]
        logits = relu(pre) if model.relu_on_logits else pre
        cache.update(inp=inp, pre=pre)
    elif model.kind is HeadKind.BERT_CUSTOM:
        m = dropout_mask(x.shape, model.dropout_p, rng, training)
        xd = x * m
        a0 = xd @ params[0] + params[1]
        h = relu(a0)
        logits = h @ params[2] + params[3]
        cache.update(xd=xd, a0=a0, h=h)
    else:  # DISTILBERT_HEAD
        a0 = x @ params[0] + params[1]
        h = relu(a0)
        m = dropout_mask(h.shape, model.dropout_p, rng, training)
        hd = h * m
        logits = hd @ params[2] + params[3]
        cache.update(x=x, a0=a0, m=m, hd=hd)
    return softmax_rows(logits), cache


def _backward(model: HeadModel, params, cache, probs, y):
    """Gradients of mean softmax cross-entropy w.r.t. every parameter.

    dlogits = (softmax - onehot) / batch; ReLU uses the 0-at-0 subgradient.
    """
    b = probs.shape[0]
    dlogits = probs.copy()
    dlogits[np.arange(b), y] -= 1.0
    dlogits /= b
    if model.kind is HeadKind.BERT_NGRAM:
        if model.relu_on_logits:
            dlogits = dlogits * (cache["pre"] > 0)
        return [cache["inp"].T @ dlogits, dlogits.sum(axis=0)]
    if model.kind is HeadKind.BERT_CUSTOM:
        gw1 = cache["h"].T @ dlogits
        gb1 = dlogits.sum(axis=0)
        da0 = (dlogits @ params[2].T) * (cache["a0"] > 0)
        return [cache["xd"].T @ da0, da0.sum(axis=0), gw1, gb1]
    gw1 = cache["hd"].T @ dlogits
    gb1 = dlogits.sum(axis=0)
    da0 = (dlogits @ params[2].T) * cache["m"] * (cache["a0"] > 0)
    return [cache["x"].T @ da0, da0.sum(axis=0), gw1, gb1]


def head_forward(model: HeadModel, embedding_row, ngram_row=None,
                 training: bool = False, rng: Rng | None = None) -> np.ndarray:
    """Class probabilities [P(Human), P(AI)] for one document."""
    x = np.asarray(embedding_row, dtype=np.float64).reshape(1, -1)
    ng = None
    if ngram_row is not None:
        ng = np.asarray(ngram_row, dtype=np.float64).reshape(1, -1)
    _check_inputs(model, x, ng)
    probs, _ = _forward(model, model.params, x, ng, training, rng)
    return probs[0]


def make_loss_and_grad(model: HeadModel, embeddings, labels, ngram_features=None):
    """Deterministic (evaluation-mode) closure for grad_check."""
    x = _as_matrix(embeddings)
    ng = _as_matrix(ngram_features) if ngram_features is not None else None
    _check_inputs(model, x, ng)
    y = np.asarray(labels, dtype=np.int64)

    def fn(params):
        probs, cache = _forward(model, params, x, ng, training=False, rng=None)
        loss = cross_entropy(probs, y)
        return loss, _backward(model, params, cache, probs, y)
    return fn


def train_head(kind: HeadKind, embeddings, labels, ngram_features=None,
               config: HeadConfig | None = None,
               valid_embeddings=None, valid_ngrams=None, valid_labels=None,
               ) -> tuple[HeadModel, LossHistory]:
    """Adam on softmax cross-entropy; deterministic for a fixed seed.

    Draw order per run: parameter init, then per epoch one shuffle and one
    dropout mask per batch (heads with dropout only).
    """
    config = config or HeadConfig()
    x = _as_matrix(embeddings)
    n = x.shape[0]
    if n == 0:
        raise EmptyTrainingSetError("no training rows")
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (n,):
        raise ValueError(f"{n} rows vs labels {y.shape}")
    ng = _as_matrix(ngram_features) if ngram_features is not None else None

    rng = Rng(config.seed)
    model = init_head(kind, rng, input_dim=x.shape[1],
                      ngram_width=0 if ng is None else ng.shape[1],
                      relu_on_logits=config.relu_on_logits)
    _check_inputs(model, x, ng)
    xv = _as_matrix(valid_embeddings) if valid_embeddings is not None else None
    ngv = _as_matrix(valid_ngrams) if valid_ngrams is not None else None
    yv = np.asarray(valid_labels, dtype=np.int64) if valid_labels is not None else None
    if xv is not None:
        _check_inputs(model, xv, ngv)

    opt = AdamState(lr=config.lr)
    history = LossHistory()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb = x[idx]
            ngb = ng[idx] if ng is not None else None
            probs, cache = _forward(model, model.params, xb, ngb,
                                    training=True, rng=rng)
            loss = cross_entropy(probs, y[idx])
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"epoch {epoch}: loss {loss}")
            batch_losses.append(loss)
            adam_step(opt, model.params, _backward(model, model.params, cache,
                                                   probs, y[idx]))
        if xv is not None and yv is not None:
            vprobs, _ = _forward(model, model.params, xv, ngv,
                                 training=False, rng=None)
            history.record(epoch, float(np.mean(batch_losses)),
                           cross_entropy(vprobs, yv))
        else:
            history.record(epoch, float(np.mean(batch_losses)))
    return model, history


def head_predict(model: HeadModel, embeddings, ngram_features=None,
                 ) -> tuple[np.ndarray, np.ndarray]:
    """AI probability per row and argmax labels; exact ties go to AI."""
    x = _as_matrix(embeddings)
    ng = _as_matrix(ngram_features) if ngram_features is not None else None
    _check_inputs(model, x, ng)
    probs, _ = _forward(model, model.params, x, ng, training=False, rng=None)
    scores = probs[:, 1]
    return scores, (probs[:, 1] >= probs[:, 0]).astype(np.int64)

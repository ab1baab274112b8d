"""Dual-stream (unigram + bigram) stacked-LSTM binary classifier.

Each stream embeds its token-index sequence and runs it through two stacked
LSTM layers with the standard gate equations

    i = sigma(W_i x + U_i h + b_i)      f, o analogous
    g = tanh(W_g x + U_g h + b_g)
    c' = f*c + i*g,  h' = o*tanh(c')

Padding (index 0) is handled by masking the state update: at padded
positions the states carry through unchanged, so the state at the final time
step equals the state at the last real token.  Position 0 is always
processed, which makes an all-padding row read one zero-embedding step (with
zero parameters its logit is exactly the output bias).

The per-stream output is the top layer's final hidden state; the two are
concatenated, dropout is applied during training, and a dense layer produces
one logit.  Training minimizes mean binary cross-entropy on that logit with
Adam.  Backpropagation through time is derived by hand below; gate packing
order along the 4H axis is i, f, o, g.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, clean_text
from .evaluation import roc_curve, youden_threshold
from .features import Vocabulary, encode_sequence, tokenize
from .numerics import (AdamState, EmptyTrainingSetError, LossHistory,
                       NonFiniteLossError, Rng, adam_step, bce_with_logits,
                       dropout_mask, embedding_init, glorot_uniform, sigmoid)


class LengthMismatchError(ValueError):
    pass


class SingleClassValidationError(ValueError):
    pass


@dataclass
class LstmConfig:
    embedding_dim: int = 64
    hidden_size: int = 64
    lr: float = 1e-3
    epochs: int = 40
    batch_size: int = 32
    dropout_p: float = 0.3
    seed: int = 0
    max_len: int = 128
    clip_norm: float | None = None  # optional global-norm gradient clip


@dataclass
class LstmLayerParams:
    w: np.ndarray  # (4H, D) input weights, gates packed i|f|o|g
    u: np.ndarray  # (4H, H) recurrent weights
    b: np.ndarray  # (4H,)

    @property
    def hidden(self) -> int:
        return self.u.shape[1]


@dataclass
class DualStreamLstmModel:
    uni_embedding: np.ndarray  # (V_u, E); row 0 is padding, all zeros
    bi_embedding: np.ndarray   # (V_b, E)
    uni_layers: list[LstmLayerParams]  # exactly 2, stacked
    bi_layers: list[LstmLayerParams]
    fc_w: np.ndarray  # (2H,)
    fc_b: np.ndarray  # (1,)
    dropout_p: float = 0.3
    max_len: int = 128
    threshold: float = 0.5

    def __post_init__(self):
        if len(self.uni_layers) != 2 or len(self.bi_layers) != 2:
            raise ValueError("each stream stacks exactly two LSTM layers")

    @property
    def hidden_size(self) -> int:
        return self.uni_layers[0].hidden


def params_list(model: DualStreamLstmModel) -> list:
    """Flat parameter list in the documented (persisted) order."""
    out = [model.uni_embedding, model.bi_embedding]
    for layers in (model.uni_layers, model.bi_layers):
        for layer in layers:
            out.extend([layer.w, layer.u, layer.b])
    out.extend([model.fc_w, model.fc_b])
    return out


PARAM_NAMES = ["uni_embedding", "bi_embedding",
               "uni_l1_w", "uni_l1_u", "uni_l1_b",
               "uni_l2_w", "uni_l2_u", "uni_l2_b",
               "bi_l1_w", "bi_l1_u", "bi_l1_b",
               "bi_l2_w", "bi_l2_u", "bi_l2_b",
               "fc_w", "fc_b"]


def _unpack(params):
    uni_emb, bi_emb = params[0], params[1]
    layers = [LstmLayerParams(w=params[i], u=params[i + 1], b=params[i + 2])
              for i in range(2, 14, 3)]
    return uni_emb, bi_emb, layers[:2], layers[2:], params[14], params[15]


def init_lstm(uni_rows: int, bi_rows: int, config: LstmConfig,
              rng: Rng) -> DualStreamLstmModel:
    """Seeded init: normal(0, 0.1) embeddings with the padding row zeroed,
    Glorot gate weights (per-gate fans), zero biases.  Draw order matches
    ``PARAM_NAMES``."""
    e, h = config.embedding_dim, config.hidden_size
    uni_emb = embedding_init(rng, (uni_rows, e))
    uni_emb[0] = 0.0
    bi_emb = embedding_init(rng, (bi_rows, e))
    bi_emb[0] = 0.0

    def layer(d):
        return LstmLayerParams(w=glorot_uniform(rng, d, h, (4 * h, d)),
                               u=glorot_uniform(rng, h, h, (4 * h, h)),
                               b=np.zeros(4 * h))

    uni_layers = [layer(e), layer(h)]
    bi_layers = [layer(e), layer(h)]
    return DualStreamLstmModel(
        uni_embedding=uni_emb, bi_embedding=bi_emb,
        uni_layers=uni_layers, bi_layers=bi_layers,
        fc_w=glorot_uniform(rng, 2 * h, 1, (2 * h,)), fc_b=np.zeros(1),
        dropout_p=config.dropout_p, max_len=config.max_len)


# ---------------------------------------------------------------------------
# Sequence preparation
# ---------------------------------------------------------------------------

BIGRAM_JOIN = " "


def build_bigram_vocabulary(corpus: Corpus, profile, max_size: int = 5000,
                            min_freq: int = 1) -> Vocabulary:
    """Vocabulary over consecutive token pairs, stored space-joined."""
    counts: Counter = Counter()
    for doc in corpus:
        toks = tokenize(clean_text(doc.text, profile))
        counts.update(BIGRAM_JOIN.join(p) for p in zip(toks, toks[1:]))
    return Vocabulary.from_counts(counts, profile, max_size, min_freq)


def build_bigram_sequence(tokens: list[str], bigram_vocab: Vocabulary,
                          max_len: int) -> np.ndarray:
    """Indices of consecutive token pairs, OOV -> 1, padded like unigrams."""
    pairs = [BIGRAM_JOIN.join(p) for p in zip(tokens, tokens[1:])]
    return encode_sequence(pairs, bigram_vocab, max_len)


def prepare_sequences(corpus: Corpus, uni_vocab: Vocabulary,
                      bi_vocab: Vocabulary, max_len: int,
                      ) -> tuple[np.ndarray, np.ndarray]:
    """(unigram, bigram) index matrices, both n x max_len."""
    uni = np.zeros((len(corpus), max_len), dtype=np.int64)
    bi = np.zeros((len(corpus), max_len), dtype=np.int64)
    for i, doc in enumerate(corpus):
        toks = tokenize(clean_text(doc.text, uni_vocab.profile))
        uni[i] = encode_sequence(toks, uni_vocab, max_len)
        bi[i] = build_bigram_sequence(toks, bi_vocab, max_len)
    return uni, bi


# ---------------------------------------------------------------------------
# Forward
# ---------------------------------------------------------------------------

def _step_mask(idx: np.ndarray) -> np.ndarray:
    """1 where a position should update the state.  Position 0 always does."""
    m = (idx != 0).astype(np.float64)
    m[:, 0] = 1.0
    return m


def _stream_forward(emb, layers, idx, collect: bool):
    """Run one stream; returns the top layer's final h and (optionally) the
    per-step tensors needed by the backward pass."""
    mask = _step_mask(idx)
    inp = emb[idx]  # (B, L, E)
    layer_steps = []
    h = None
    for layer in layers:
        hsize = layer.hidden
        b, length = idx.shape
        h = np.zeros((b, hsize))
        c = np.zeros((b, hsize))
        outs = np.empty((b, length, hsize))
        steps = []
        for t in range(length):
            xt = inp[:, t]
            a = xt @ layer.w.T + h @ layer.u.T + layer.b
            i = sigmoid(a[:, :hsize])
            f = sigmoid(a[:, hsize:2 * hsize])
            o = sigmoid(a[:, 2 * hsize:3 * hsize])
            g = np.tanh(a[:, 3 * hsize:])
            c_cand = f * c + i * g
            h_cand = o * np.tanh(c_cand)
            mt = mask[:, t:t + 1]
            if collect:
                steps.append((xt, i, f, o, g, c_cand, c, h, mt))
            c = mt * c_cand + (1.0 - mt) * c
            h = mt * h_cand + (1.0 - mt) * h
            outs[:, t] = h
        layer_steps.append(steps)
        inp = outs
    return h, layer_steps


def _forward(params, uni_idx, bi_idx, dropout_p, training, rng, collect=False):
    uni_emb, bi_emb, uni_layers, bi_layers, fc_w, fc_b = _unpack(params)
    if uni_idx.shape != bi_idx.shape:
        raise LengthMismatchError(f"unigram {uni_idx.shape} vs bigram "
                                  f"{bi_idx.shape} sequences")
    h_uni, uni_steps = _stream_forward(uni_emb, uni_layers, uni_idx, collect)
    h_bi, bi_steps = _stream_forward(bi_emb, bi_layers, bi_idx, collect)
    hcat = np.hstack([h_uni, h_bi])
    dmask = dropout_mask(hcat.shape, dropout_p, rng, training)
    hd = hcat * dmask
    logits = hd @ fc_w + fc_b[0]
    cache = {"uni_steps": uni_steps, "bi_steps": bi_steps, "hd": hd,
             "dmask": dmask, "uni_idx": uni_idx, "bi_idx": bi_idx}
    return logits, cache


def lstm_forward(model: DualStreamLstmModel, uni_seq, bi_seq,
                 training: bool = False, rng: Rng | None = None) -> float:
    """Raw logit for one document; probability is sigmoid(logit)."""
    uni = np.asarray(uni_seq, dtype=np.int64).reshape(1, -1)
    bi = np.asarray(bi_seq, dtype=np.int64).reshape(1, -1)
    if uni.shape[1] != model.max_len or bi.shape[1] != model.max_len:
        raise LengthMismatchError(
            f"sequences must have length {model.max_len}")
    logits, _ = _forward(params_list(model), uni, bi, model.dropout_p,
                         training, rng)
    return float(logits[0])


# ---------------------------------------------------------------------------
# Backward (BPTT)
# ---------------------------------------------------------------------------

def _layer_backward(layer: LstmLayerParams, steps, dh_extra, dh_last):
    """One layer of BPTT.

    ``dh_extra`` holds per-step gradients arriving from the layer above
    (None for the top layer); ``dh_last`` is the gradient w.r.t. the final
    hidden state (zeros except at the top layer).  The masked update
        h_t = m*h_cand + (1-m)*h_{t-1}
    contributes m*dh_t to the candidate and (1-m)*dh_t to the carried state,
    and likewise for the cell.
    """
    b, hsize = dh_last.shape
    length = len(steps)
    d_in = layer.w.shape[1]
    gw = np.zeros_like(layer.w)
    gu = np.zeros_like(layer.u)
    gb = np.zeros_like(layer.b)
    dx = np.empty((b, length, d_in))
    dh = dh_last
    dc = np.zeros((b, hsize))
    for t in reversed(range(length)):
        xt, i, f, o, g, c_cand, c_prev, h_prev, mt = steps[t]
        if dh_extra is not None:
            dh = dh + dh_extra[:, t]
        dh_cand = mt * dh
        dh_carry = (1.0 - mt) * dh
        tc = np.tanh(c_cand)
        do = dh_cand * tc
        dc_cand = dh_cand * o * (1.0 - tc * tc) + mt * dc
        dc_carry = (1.0 - mt) * dc
        df = dc_cand * c_prev
        di = dc_cand * g
        dg = dc_cand * i
        dc = dc_cand * f + dc_carry
        da = np.hstack([di * i * (1.0 - i), df * f * (1.0 - f),
                        do * o * (1.0 - o), dg * (1.0 - g * g)])
        gw += da.T @ xt
        gu += da.T @ h_prev
        gb += da.sum(axis=0)
        dx[:, t] = da @ layer.w
        dh = da @ layer.u + dh_carry
    return gw, gu, gb, dx


def _stream_backward(emb, layers, steps, idx, dh_last):
    h2 = _layer_backward(layers[1], steps[1], None, dh_last)
    zeros = np.zeros_like(dh_last)
    h1 = _layer_backward(layers[0], steps[0], h2[3], zeros)
    g_emb = np.zeros_like(emb)
    np.add.at(g_emb, idx.reshape(-1), h1[3].reshape(-1, emb.shape[1]))
    g_emb[0] = 0.0  # the padding row is never updated
    return g_emb, h1[:3], h2[:3]


def _backward(params, cache, dlogits):
    uni_emb, bi_emb, uni_layers, bi_layers, fc_w, _ = _unpack(params)
    hsize = uni_layers[0].hidden
    gfc_w = cache["hd"].T @ dlogits
    gfc_b = np.array([dlogits.sum()])
    dhcat = (dlogits[:, None] * fc_w[None, :]) * cache["dmask"]
    g_uni_emb, u1, u2 = _stream_backward(uni_emb, uni_layers,
                                         cache["uni_steps"], cache["uni_idx"],
                                         dhcat[:, :hsize])
    g_bi_emb, b1, b2 = _stream_backward(bi_emb, bi_layers,
                                        cache["bi_steps"], cache["bi_idx"],
                                        dhcat[:, hsize:])
    return [g_uni_emb, g_bi_emb, *u1, *u2, *b1, *b2, gfc_w, gfc_b]


def make_loss_and_grad(model: DualStreamLstmModel, uni_idx, bi_idx, labels):
    """Evaluation-mode closure (dropout off) for grad_check; use with
    ``params_list(model)``."""
    uni = np.asarray(uni_idx, dtype=np.int64)
    bi = np.asarray(bi_idx, dtype=np.int64)
    y = np.asarray(labels, dtype=np.float64)

    def fn(params):
        logits, cache = _forward(params, uni, bi, model.dropout_p,
                                 training=False, rng=None, collect=True)
        loss = bce_with_logits(logits, y)
        dlogits = (sigmoid(logits) - y) / y.shape[0]
        return loss, _backward(params, cache, dlogits)
    return fn


def _clip_global_norm(grads, max_norm: float):
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > max_norm:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return grads


# ---------------------------------------------------------------------------
# Training and prediction
# ---------------------------------------------------------------------------

def train_lstm(train_uni, train_bi, labels, uni_rows: int, bi_rows: int,
               config: LstmConfig | None = None,
               valid_uni=None, valid_bi=None, valid_labels=None,
               ) -> tuple[DualStreamLstmModel, LossHistory]:
    """Adam on mean BCE-with-logits; deterministic for a fixed seed.

    ``uni_rows``/``bi_rows`` are embedding-table row counts (vocabulary size
    plus the padding and OOV rows).  Per-epoch train loss averages each
    batch's pre-update loss; validation loss is computed after the epoch.
    """
    config = config or LstmConfig()
    uni = np.asarray(train_uni, dtype=np.int64)
    bi = np.asarray(train_bi, dtype=np.int64)
    y = np.asarray(labels, dtype=np.float64)
    n = uni.shape[0]
    if n == 0:
        raise EmptyTrainingSetError("no training rows")
    if uni.shape != (n, config.max_len) or bi.shape != (n, config.max_len):
        raise LengthMismatchError(
            f"sequences must be ({n}, {config.max_len}); got {uni.shape} "
            f"and {bi.shape}")
    if y.shape != (n,):
        raise ValueError(f"{n} rows vs labels {y.shape}")

    rng = Rng(config.seed)
    model = init_lstm(uni_rows, bi_rows, config, rng)
    params = params_list(model)
    opt = AdamState(lr=config.lr)
    history = LossHistory()
    have_valid = valid_uni is not None and valid_labels is not None
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            sel = order[start:start + config.batch_size]
            logits, cache = _forward(params, uni[sel], bi[sel],
                                     config.dropout_p, training=True,
                                     rng=rng, collect=True)
            loss = bce_with_logits(logits, y[sel])
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"epoch {epoch}: loss {loss}")
            batch_losses.append(loss)
            dlogits = (sigmoid(logits) - y[sel]) / sel.shape[0]
            grads = _backward(params, cache, dlogits)
            if config.clip_norm is not None:
                _clip_global_norm(grads, config.clip_norm)
            adam_step(opt, params, grads)
            model.uni_embedding[0] = 0.0  # keep padding rows pinned at zero
            model.bi_embedding[0] = 0.0
        if have_valid:
            vlogits = predict_logits(model, valid_uni, valid_bi)
            history.record(epoch, float(np.mean(batch_losses)),
                           bce_with_logits(vlogits, np.asarray(valid_labels,
                                                               dtype=np.float64)))
        else:
            history.record(epoch, float(np.mean(batch_losses)))
    return model, history


def predict_logits(model: DualStreamLstmModel, uni_idx, bi_idx) -> np.ndarray:
    uni = np.asarray(uni_idx, dtype=np.int64)
    bi = np.asarray(bi_idx, dtype=np.int64)
    if uni.ndim != 2 or uni.shape[1] != model.max_len \
            or bi.shape != uni.shape:
        raise LengthMismatchError(
            f"need two (n, {model.max_len}) index matrices")
    logits, _ = _forward(params_list(model), uni, bi, model.dropout_p,
                         training=False, rng=None)
    return logits


def predict_scores(model: DualStreamLstmModel, uni_idx, bi_idx) -> np.ndarray:
    return sigmoid(predict_logits(model, uni_idx, bi_idx))


def predict(model: DualStreamLstmModel, uni_idx, bi_idx) -> np.ndarray:
    scores = predict_scores(model, uni_idx, bi_idx)
    return (scores >= model.threshold).astype(np.int64)


def calibrate_threshold(model: DualStreamLstmModel, scores, labels) -> float:
    """Store and return the Youden-optimal threshold on validation scores."""
    y = np.asarray(labels, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClassValidationError(
            "validation set must contain both classes")
    model.threshold = youden_threshold(roc_curve(scores, y))
    return model.threshold

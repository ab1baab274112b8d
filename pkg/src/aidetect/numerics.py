"""Dense math shared by every trainable detector.

Activations, losses, SGD/Adam, inverted dropout, parameter initializers, a
seeded splitmix64 random stream, and a central-difference gradient checker.
Everything runs in float64; each public operation checks its inputs and
outputs for finiteness so a NaN surfaces where it was born, not three
modules later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ShapeMismatchError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class IndexOutOfRangeError(IndexError):
    pass


def _require_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite values")


# ---------------------------------------------------------------------------
# Random stream
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = float(1 << 53)


class Rng:
    """Deterministic 64-bit stream (splitmix64).

    The state advances by a fixed odd constant per draw and each output is
    produced by the xor-shift/multiply finalizer, so the full stream is a
    pure function of the seed.  Array draws consume exactly ``n`` stream
    positions in index order, which keeps every training run replayable.
    """

    def __init__(self, seed: int):
        self._state = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)

    def _raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw uint64 outputs, advancing the state by ``n``."""
        with np.errstate(over="ignore"):
            offsets = (np.arange(1, n + 1, dtype=np.uint64)) * _GOLDEN
            z = self._state + offsets
            self._state = z[-1] if n else self._state
            z = z ^ (z >> np.uint64(30))
            z = z * _MIX1
            z = z ^ (z >> np.uint64(27))
            z = z * _MIX2
            z = z ^ (z >> np.uint64(31))
        return z

    def next_u64(self) -> int:
        return int(self._raw(1)[0])

    def uniform(self, shape=()) -> np.ndarray:
        """Uniform float64 draws in [0, 1) using the top 53 bits."""
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        out = (self._raw(n) >> np.uint64(11)).astype(np.float64) / _U53
        return out.reshape(shape) if shape else float(out[0])

    def normal(self, shape=(), mean=0.0, std=1.0) -> np.ndarray:
        """Standard normal draws via Box-Muller on consecutive uniform pairs."""
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        m = (n + 1) // 2
        raw = self._raw(2 * m)
        # shift into (0, 1] so log() is always defined
        u1 = ((raw[:m] >> np.uint64(11)).astype(np.float64) + 1.0) / _U53
        u2 = (raw[m:] >> np.uint64(11)).astype(np.float64) / _U53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        z = mean + std * z
        return z.reshape(shape) if shape else float(z[0])

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n): stable argsort of n raw draws."""
        return np.argsort(self._raw(n), kind="stable")


# ---------------------------------------------------------------------------
# Parameter initialization
# ---------------------------------------------------------------------------

def glorot_uniform(rng: Rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    """Uniform in +-sqrt(6 / (fan_in + fan_out)); used for dense and
    recurrent weight matrices."""
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return (rng.uniform(shape) * 2.0 - 1.0) * limit


def embedding_init(rng: Rng, shape, std=0.1) -> np.ndarray:
    return rng.normal(shape, std=std)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

def sigmoid(x):
    """Numerically stable logistic function, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    _require_finite("sigmoid input", x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out) if out.ndim == 0 else out


def relu(x):
    x = np.asarray(x, dtype=np.float64)
    _require_finite("relu input", x)
    out = np.maximum(x, 0.0)
    return float(out) if out.ndim == 0 else out


def softmax_rows(m) -> np.ndarray:
    """Row-wise softmax with row-max subtraction; rows sum to 1."""
    m = np.asarray(m, dtype=np.float64)
    _require_finite("softmax input", m)
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)
    _require_finite("softmax output", out)
    return out


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

_P_CLAMP = 1e-12


def bce_loss(p, y) -> float:
    """Mean binary cross-entropy on probabilities (clamped away from 0/1)."""
    p = np.clip(np.asarray(p, dtype=np.float64), _P_CLAMP, 1.0 - _P_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    _require_finite("bce_loss", loss)
    return float(loss)


def bce_with_logits(z, y) -> float:
    """Mean BCE straight from logits: max(z,0) - z*y + log(1 + exp(-|z|)).

    Never materializes sigmoid(z), so it stays finite for any logit.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _require_finite("bce_with_logits input", z)
    loss = np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z))))
    _require_finite("bce_with_logits", loss)
    return float(loss)


def cross_entropy(probs, y) -> float:
    """Mean negative log-probability of the true class.

    ``probs`` rows must already sum to 1 (softmax output); ``y`` holds class
    indices.
    """
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("cross_entropy expects rows summing to 1")
    if y.min(initial=0) < 0 or y.max(initial=0) >= probs.shape[1]:
        raise IndexOutOfRangeError("class index outside [0, n_classes)")
    picked = probs[np.arange(probs.shape[0]), y]
    loss = -np.mean(np.log(np.clip(picked, _P_CLAMP, None)))
    _require_finite("cross_entropy", loss)
    return float(loss)


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------

def _check_shapes(params, grads):
    if len(params) != len(grads):
        raise ShapeMismatchError("params/grads length mismatch")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeMismatchError(f"param {p.shape} vs grad {g.shape}")


def sgd_step(params, grads, lr: float) -> None:
    """In-place p <- p - lr * g over a list of arrays."""
    _check_shapes(params, grads)
    for p, g in zip(params, grads):
        _require_finite("gradient", g)
        p -= lr * g


@dataclass
class AdamState:
    """Adam accumulators; ``m``/``v`` are allocated lazily to match params."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(state: AdamState, params, grads) -> None:
    """Bias-corrected Adam update, in place."""
    _check_shapes(params, grads)
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        _require_finite("gradient", g)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


# ---------------------------------------------------------------------------
# Dropout
# ---------------------------------------------------------------------------

def dropout_mask(shape, p: float, rng: Rng, training: bool = True) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability p, else 1/(1-p).

    Evaluation mode is the identity and consumes no random draws.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"drop probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return np.ones(shape)
    keep = rng.uniform(shape) >= p
    return keep.astype(np.float64) / (1.0 - p)


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

def grad_check(loss_and_grad, params, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_and_grad(params) -> (loss, grads)`` must be deterministic
    (dropout off, fixed data).  Relative error per coordinate is
    |a - n| / max(1e-8, |a| + |n|).
    """
    _, analytic = loss_and_grad(params)
    _check_shapes(params, analytic)
    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.reshape(-1)
        aflat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up, _ = loss_and_grad(params)
            flat[i] = orig - eps
            down, _ = loss_and_grad(params)
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            denom = max(1e-8, abs(aflat[i]) + abs(numeric))
            worst = max(worst, abs(aflat[i] - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# Training bookkeeping
# ---------------------------------------------------------------------------

@dataclass
class LossHistory:
    """Per-epoch loss records; epochs count from 1."""

    epochs: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    valid_loss: list = field(default_factory=list)  # empty when no valid set

    def record(self, epoch: int, train: float, valid: float | None = None):
        if self.epochs and epoch <= self.epochs[-1]:
            raise ValueError("epochs must be strictly increasing")
        self.epochs.append(epoch)
        self.train_loss.append(train)
        if valid is not None:
            self.valid_loss.append(valid)

    def __len__(self):
        return len(self.epochs)


class EmptyTrainingSetError(ValueError):
    pass


class NonFiniteLossError(NonFiniteError):
    pass

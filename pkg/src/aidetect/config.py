"""Flat key=value run configuration for the command-line tools.

A config file holds one ``key=value`` pair per line; ``#`` starts a comment.
Keys are model-kind specific, every key has a documented default, and
unknown keys are rejected rather than ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

from .heads import HeadConfig
from .logreg import LogRegConfig
from .lstm import LstmConfig

MODEL_KINDS = ("logreg", "lstm", "bert-ngram", "bert-custom", "distilbert-head")


class UnknownConfigKeyError(ValueError):
    pass


class BadConfigValueError(ValueError):
    pass


@dataclass(frozen=True)
class ConfigKey:
    name: str
    kinds: tuple
    default: object
    parse: str  # int | float | bool | optional_float
    help: str


KEYS = (
    ConfigKey("seed", MODEL_KINDS, 0, "int", "random seed for init and shuffling"),
    ConfigKey("epochs", MODEL_KINDS, None, "int",
              "training epochs (logreg 30, lstm 40, heads 30)"),
    ConfigKey("lr", MODEL_KINDS, None, "float",
              "learning rate (logreg 0.05, lstm and heads 0.001)"),
    ConfigKey("batch_size", MODEL_KINDS, 32, "int", "mini-batch size"),
    ConfigKey("calibrate", MODEL_KINDS, None, "bool",
              "pick the decision threshold on the validation set by Youden's J "
              "(default: false for logreg and heads, true for lstm)"),
    ConfigKey("l2", ("logreg",), 0.0, "float", "L2 penalty on the weights"),
    ConfigKey("vocab_size", ("logreg", "lstm"), 5000, "int",
              "maximum vocabulary size (most frequent tokens kept)"),
    ConfigKey("min_freq", ("logreg", "lstm"), 1, "int",
              "minimum token frequency for the vocabulary"),
    ConfigKey("embedding_dim", ("lstm",), 64, "int", "token embedding width"),
    ConfigKey("hidden_size", ("lstm",), 64, "int", "LSTM hidden state width"),
    ConfigKey("dropout_p", ("lstm",), 0.3, "float",
              "dropout on the concatenated stream outputs"),
    ConfigKey("max_len", ("lstm",), 128, "int",
              "sequence length (truncate/pad)"),
    ConfigKey("bigram_vocab_size", ("lstm",), 5000, "int",
              "maximum bigram vocabulary size"),
    ConfigKey("clip_norm", ("lstm",), None, "optional_float",
              "optional global-norm gradient clip (default: off)"),
    ConfigKey("relu_on_logits", ("bert-ngram",), True, "bool",
              "apply ReLU to the logits before softmax"),
    ConfigKey("ngram_vocab_size", ("bert-ngram",), 5000, "int",
              "maximum n-gram feature count"),
    ConfigKey("ngram_min_freq", ("bert-ngram",), 2, "int",
              "minimum n-gram frequency"),
    ConfigKey("ngram_min", ("bert-ngram",), 1, "int", "smallest n-gram order"),
    ConfigKey("ngram_max", ("bert-ngram",), 4, "int", "largest n-gram order"),
)

_EPOCH_DEFAULTS = {"logreg": 30, "lstm": 40,
                   "bert-ngram": 30, "bert-custom": 30, "distilbert-head": 30}
_LR_DEFAULTS = {"logreg": 0.05, "lstm": 1e-3,
                "bert-ngram": 1e-3, "bert-custom": 1e-3, "distilbert-head": 1e-3}
_CALIBRATE_DEFAULTS = {"logreg": False, "lstm": True,
                       "bert-ngram": False, "bert-custom": False,
                       "distilbert-head": False}


def keys_for(kind: str) -> list[ConfigKey]:
    return [k for k in KEYS if kind in k.kinds]


def _parse_value(key: ConfigKey, raw: str):
    raw = raw.strip()
    try:
        if key.parse == "int":
            return int(raw)
        if key.parse == "float":
            return float(raw)
        if key.parse == "optional_float":
            return None if raw.lower() in ("none", "") else float(raw)
        if key.parse == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise BadConfigValueError(
            f"config key {key.name!r}: cannot parse {raw!r} as {key.parse}"
        ) from None
    raise BadConfigValueError(f"unhandled parse kind {key.parse!r}")


def parse_config_file(path) -> dict[str, str]:
    """Raw key -> string-value pairs; syntax errors carry line numbers."""
    pairs: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise BadConfigValueError(
                    f"{path}:{lineno}: expected key=value, got {stripped!r}")
            k, v = stripped.split("=", 1)
            pairs[k.strip()] = v.strip()
    return pairs


def resolve(kind: str, raw_pairs: dict[str, str]) -> dict:
    """Typed config dict for a model kind; unknown keys are an error."""
    if kind not in MODEL_KINDS:
        raise UnknownConfigKeyError(f"unknown model kind {kind!r}")
    known = {k.name: k for k in keys_for(kind)}
    out = {}
    for name, key in known.items():
        out[name] = key.default
    out["epochs"] = _EPOCH_DEFAULTS[kind]
    out["lr"] = _LR_DEFAULTS[kind]
    out["calibrate"] = _CALIBRATE_DEFAULTS[kind]
    for name, raw in raw_pairs.items():
        if name not in known:
            raise UnknownConfigKeyError(
                f"config key {name!r} is not valid for model {kind!r}")
        out[name] = _parse_value(known[name], raw)
    return out


def logreg_config(c: dict) -> LogRegConfig:
    return LogRegConfig(lr=c["lr"], epochs=c["epochs"],
                        batch_size=c["batch_size"], l2=c["l2"], seed=c["seed"])


def lstm_config(c: dict) -> LstmConfig:
    return LstmConfig(embedding_dim=c["embedding_dim"],
                      hidden_size=c["hidden_size"], lr=c["lr"],
                      epochs=c["epochs"], batch_size=c["batch_size"],
                      dropout_p=c["dropout_p"], seed=c["seed"],
                      max_len=c["max_len"], clip_norm=c["clip_norm"])


def head_config(c: dict) -> HeadConfig:
    return HeadConfig(lr=c["lr"], epochs=c["epochs"],
                      batch_size=c["batch_size"], seed=c["seed"],
                      relu_on_logits=c.get("relu_on_logits", True))


def config_help() -> str:
    """One line per key and kind-dependent defaults, for --help epilogs."""
    lines = ["config file keys (key=value per line, '#' comments):"]
    for key in KEYS:
        kinds = ",".join(key.kinds) if key.kinds != MODEL_KINDS else "all models"
        if key.name in ("epochs", "lr", "calibrate"):
            default = "per model, see below"
        else:
            default = "none" if key.default is None else str(key.default).lower() \
                if isinstance(key.default, bool) else str(key.default)
        lines.append(f"  {key.name} ({kinds}; default {default}): {key.help}")
    return "\n".join(lines)

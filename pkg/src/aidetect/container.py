"""Self-contained JSON model files.

A container holds everything `predict` needs besides raw text: weights
(base64 little-endian float32), fitted vocabularies, scaler statistics and
idf vectors (base64 float64 — only weights are squeezed to 32-bit), the
cleaning profile, the decision threshold, and the full hyperparameter
record.  Serialization is canonical (sorted keys, compact separators), so
identical models produce byte-identical files.  The `created` stamp honors
SOURCE_DATE_EPOCH and otherwise stays fixed at the epoch, keeping artifacts
reproducible across runs.
"""

from __future__ import annotations

import base64
import json
import os
from datetime import datetime, timezone

import numpy as np

from .corpus import CleaningProfile
from .features import NgramVocabulary, ScalerStats, Vocabulary
from .heads import HeadKind, HeadModel
from .logreg import LogRegModel
from .lstm import (PARAM_NAMES, DualStreamLstmModel, LstmLayerParams,
                   params_list)
from .pipelines import HeadDetector, LogregDetector, LstmDetector
from .postag import LEXICON_VERSION

FORMAT_VERSION = 1


class ContainerFormatError(ValueError):
    pass


def _created() -> str:
    stamp = os.environ.get("SOURCE_DATE_EPOCH")
    if stamp:
        dt = datetime.fromtimestamp(int(stamp), tz=timezone.utc)
        return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
    return "1970-01-01T00:00:00Z"


def _pack(arr, dtype) -> dict:
    arr = np.asarray(arr)
    return {"shape": list(arr.shape),
            "data": base64.b64encode(arr.astype(dtype).tobytes()).decode("ascii")}


def _unpack(entry: dict, dtype) -> np.ndarray:
    try:
        raw = base64.b64decode(entry["data"], validate=True)
        arr = np.frombuffer(raw, dtype=dtype).astype(np.float64)
        return arr.reshape(entry["shape"]).copy()
    except (KeyError, ValueError, TypeError) as exc:
        raise ContainerFormatError(f"bad array entry: {exc}") from exc


def _expect(cond: bool, msg: str):
    if not cond:
        raise ContainerFormatError(msg)


def _vocab_dict(v: Vocabulary) -> dict:
    return {"profile": v.profile.as_dict(), "fitted_on": v.fitted_on,
            "entries": v.entries}


def _vocab_from(d: dict) -> Vocabulary:
    entries = {t: int(i) for t, i in d["entries"].items()}
    _expect(sorted(entries.values()) == list(range(2, len(entries) + 2)),
            "vocabulary indices must be 2..len+1 without gaps")
    return Vocabulary(entries=entries, profile=CleaningProfile(**d["profile"]),
                      fitted_on=d.get("fitted_on", ""))


def _ngram_vocab_dict(v: NgramVocabulary) -> dict:
    return {"n_min": v.n_min, "n_max": v.n_max, "min_freq": v.min_freq,
            "profile": v.profile.as_dict(), "fitted_on": v.fitted_on,
            "entries": v.entries}


def _ngram_vocab_from(d: dict) -> NgramVocabulary:
    entries = {g: int(i) for g, i in d["entries"].items()}
    _expect(sorted(entries.values()) == list(range(len(entries))),
            "n-gram indices must be 0..len-1 without gaps")
    return NgramVocabulary(n_min=int(d["n_min"]), n_max=int(d["n_max"]),
                           entries=entries, min_freq=int(d["min_freq"]),
                           profile=CleaningProfile(**d["profile"]),
                           fitted_on=d.get("fitted_on", ""))


# ---------------------------------------------------------------------------
# Per-kind packing
# ---------------------------------------------------------------------------

def _doc_logreg(d: LogregDetector) -> dict:
    return {
        "weights": {"weights": _pack(d.model.weights, "<f4"),
                    "bias": _pack(np.array([d.model.bias]), "<f4")},
        "aux": {"scaler_mean": _pack(d.scaler.mean, "<f8"),
                "scaler_std": _pack(d.scaler.std, "<f8"),
                "idf": _pack(d.idf, "<f8")},
        "vocab": _vocab_dict(d.vocab),
        "pos_lexicon_version": LEXICON_VERSION,
        "vocab_fingerprints": d.model.vocab_fingerprints,
    }


def _logreg_from(doc: dict) -> LogregDetector:
    vocab = _vocab_from(doc["vocab"])
    w = _unpack(doc["weights"]["weights"], "<f4")
    b = _unpack(doc["weights"]["bias"], "<f4")
    mean = _unpack(doc["aux"]["scaler_mean"], "<f8")
    std = _unpack(doc["aux"]["scaler_std"], "<f8")
    idf = _unpack(doc["aux"]["idf"], "<f8")
    width = 2 * len(vocab) + 12
    _expect(w.shape == (width,), f"weights {w.shape}, expected ({width},)")
    _expect(b.shape == (1,), "bias must have shape (1,)")
    _expect(mean.shape == (width,) and std.shape == (width,),
            "scaler width must match the feature width")
    _expect(idf.shape == (len(vocab),), "idf width must match the vocabulary")
    scaler = ScalerStats(mean=mean, std=std,
                         constant_columns={int(i) for i in np.flatnonzero(std == 0.0)})
    model = LogRegModel(weights=w, bias=float(b[0]), scaler=scaler,
                        vocab_fingerprints=dict(doc.get("vocab_fingerprints", {})),
                        threshold=float(doc["threshold"]))
    return LogregDetector(vocab=vocab, idf=idf, scaler=scaler, model=model,
                          config_record=dict(doc.get("config", {})))


def _doc_lstm(d: LstmDetector) -> dict:
    weights = {name: _pack(arr, "<f4")
               for name, arr in zip(PARAM_NAMES, params_list(d.model))}
    return {
        "weights": weights,
        "vocab": _vocab_dict(d.uni_vocab),
        "bigram_vocab": _vocab_dict(d.bi_vocab),
        "architecture": {"max_len": d.model.max_len,
                         "dropout_p": d.model.dropout_p},
    }


def _lstm_from(doc: dict) -> LstmDetector:
    uni_vocab = _vocab_from(doc["vocab"])
    bi_vocab = _vocab_from(doc["bigram_vocab"])
    w = {name: _unpack(doc["weights"][name], "<f4") for name in PARAM_NAMES}
    uni_emb, bi_emb = w["uni_embedding"], w["bi_embedding"]
    _expect(uni_emb.shape[0] == len(uni_vocab) + 2,
            "unigram embedding rows must equal vocabulary size + 2")
    _expect(bi_emb.shape[0] == len(bi_vocab) + 2,
            "bigram embedding rows must equal vocabulary size + 2")
    _expect(not np.any(uni_emb[0]) and not np.any(bi_emb[0]),
            "padding embedding rows must be zero")
    _expect(uni_emb.shape[1] == bi_emb.shape[1],
            "both streams must share one embedding width")
    e = uni_emb.shape[1]
    h4 = w["uni_l1_w"].shape[0]
    _expect(h4 % 4 == 0, "gate weight rows must be a multiple of 4")
    h = h4 // 4
    layers = {}
    for stream in ("uni", "bi"):
        built = []
        for li, d_in in ((1, e), (2, h)):
            lw = w[f"{stream}_l{li}_w"]
            lu = w[f"{stream}_l{li}_u"]
            lb = w[f"{stream}_l{li}_b"]
            _expect(lw.shape == (4 * h, d_in), f"{stream} layer {li}: input "
                    f"weights {lw.shape}, expected {(4 * h, d_in)}")
            _expect(lu.shape == (4 * h, h), f"{stream} layer {li}: recurrent "
                    f"weights {lu.shape}, expected {(4 * h, h)}")
            _expect(lb.shape == (4 * h,), f"{stream} layer {li}: bias "
                    f"{lb.shape}, expected {(4 * h,)}")
            built.append(LstmLayerParams(w=lw, u=lu, b=lb))
        layers[stream] = built
    _expect(w["fc_w"].shape == (2 * h,), "output weights must have shape (2H,)")
    _expect(w["fc_b"].shape == (1,), "output bias must have shape (1,)")
    arch = doc["architecture"]
    model = DualStreamLstmModel(
        uni_embedding=uni_emb, bi_embedding=bi_emb,
        uni_layers=layers["uni"], bi_layers=layers["bi"],
        fc_w=w["fc_w"], fc_b=w["fc_b"], dropout_p=float(arch["dropout_p"]),
        max_len=int(arch["max_len"]), threshold=float(doc["threshold"]))
    return LstmDetector(uni_vocab=uni_vocab, bi_vocab=bi_vocab, model=model,
                        config_record=dict(doc.get("config", {})))


def _doc_head(d: HeadDetector) -> dict:
    weights = {name: _pack(arr, "<f4")
               for name, arr in zip(d.model.param_names, d.model.params)}
    doc = {
        "weights": weights,
        "architecture": {"input_dim": d.model.input_dim,
                         "relu_on_logits": d.model.relu_on_logits},
        "embedding_model_id": d.model.embedding_model_id,
        "vocab_fingerprints": d.model.vocab_fingerprints,
    }
    if d.ngram_vocab is not None:
        doc["ngram_vocab"] = _ngram_vocab_dict(d.ngram_vocab)
    return doc


def _head_from(doc: dict, kind: HeadKind) -> HeadDetector:
    arch = doc["architecture"]
    input_dim = int(arch["input_dim"])
    names = ["w0", "b0"] if kind.expects_ngrams else ["w0", "b0", "w1", "b1"]
    _expect(set(doc["weights"]) == set(names),
            f"expected weight arrays {names}")
    w = {name: _unpack(doc["weights"][name], "<f4") for name in names}
    ngram_vocab = None
    if kind.expects_ngrams:
        _expect("ngram_vocab" in doc, "bert-ngram containers carry the "
                "n-gram vocabulary")
        ngram_vocab = _ngram_vocab_from(doc["ngram_vocab"])
        width = input_dim + len(ngram_vocab)
        _expect(w["w0"].shape == (width, 2),
                f"w0 {w['w0'].shape}, expected {(width, 2)}")
        _expect(w["b0"].shape == (2,), "b0 must have shape (2,)")
        params = [w["w0"], w["b0"]]
    else:
        hidden = 512 if kind is HeadKind.BERT_CUSTOM else input_dim
        _expect(w["w0"].shape == (input_dim, hidden),
                f"w0 {w['w0'].shape}, expected {(input_dim, hidden)}")
        _expect(w["b0"].shape == (hidden,), f"b0 must have shape ({hidden},)")
        _expect(w["w1"].shape == (hidden, 2),
                f"w1 {w['w1'].shape}, expected {(hidden, 2)}")
        _expect(w["b1"].shape == (2,), "b1 must have shape (2,)")
        params = [w["w0"], w["b0"], w["w1"], w["b1"]]
    model = HeadModel(kind=kind, params=params, input_dim=input_dim,
                      relu_on_logits=bool(arch["relu_on_logits"]),
                      embedding_model_id=doc.get("embedding_model_id", ""),
                      vocab_fingerprints=dict(doc.get("vocab_fingerprints", {})))
    return HeadDetector(model=model, ngram_vocab=ngram_vocab,
                        config_record=dict(doc.get("config", {})))


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def save_detector(detector, path, config_record: dict | None = None) -> None:
    kind = detector.kind
    if isinstance(detector, LogregDetector):
        doc = _doc_logreg(detector)
    elif isinstance(detector, LstmDetector):
        doc = _doc_lstm(detector)
    elif isinstance(detector, HeadDetector):
        doc = _doc_head(detector)
    else:
        raise TypeError(f"cannot persist {type(detector).__name__}")
    doc.update({
        "format_version": FORMAT_VERSION,
        "model_kind": kind,
        "created": _created(),
        "config": config_record if config_record is not None
                  else dict(detector.config_record),
        "threshold": float(detector.threshold),
    })
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")))
        fh.write("\n")


def load_detector(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ContainerFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ContainerFormatError("container must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ContainerFormatError(
            f"format version {version!r}; supported: {FORMAT_VERSION}")
    kind = doc.get("model_kind")
    try:
        if kind == "logreg":
            return _logreg_from(doc)
        if kind == "lstm":
            return _lstm_from(doc)
        if kind in ("bert-ngram", "bert-custom", "distilbert-head"):
            return _head_from(doc, HeadKind(kind))
    except KeyError as exc:
        raise ContainerFormatError(f"missing container field: {exc}") from exc
    raise ContainerFormatError(f"unknown model kind {kind!r}")

"""Run a pretrained encoder over a corpus and emit an EMBX file.

The embedding of a document is the final-layer hidden state of the first
token ([CLS]) — no pooler transform, no fine-tuning.  The encoder runs
in evaluation mode under ``no_grad``, so output is deterministic for a
given model id, max_length, and input text.

Duplicate texts are encoded once and fanned out, which makes their
vectors bit-identical regardless of how batching would have split them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import read_corpus
from .embx import write_embx

log = logging.getLogger("embed_exporter")

SUPPORTED_MODELS = ("bert-base-uncased", "distilbert-base-uncased")
HIDDEN_SIZE = 768
MAX_LENGTH_LIMIT = 512


class ModelLoadError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExportJob:
    input: str
    format: str
    model_id: str
    max_length: int
    batch_size: int
    out: str

    def validate(self) -> None:
        if self.model_id not in SUPPORTED_MODELS:
            raise ValueError(f"unsupported model id {self.model_id!r}; "
                             f"choose one of {', '.join(SUPPORTED_MODELS)}")
        if not 1 <= self.max_length <= MAX_LENGTH_LIMIT:
            raise ValueError(f"max_length must be in 1..{MAX_LENGTH_LIMIT}, "
                             f"got {self.max_length}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")


def load_encoder(model_id: str):
    """Tokenizer + frozen encoder in eval mode; any failure is a load error."""
    try:
        import torch  # noqa: F401
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:
        raise ModelLoadError(f"torch/transformers unavailable: {exc}") from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
    except Exception as exc:
        raise ModelLoadError(f"cannot load {model_id!r}: {exc}") from exc
    hidden = getattr(model.config, "hidden_size", None)
    if hidden != HIDDEN_SIZE:
        raise ModelLoadError(f"{model_id!r} has hidden size {hidden}, "
                             f"expected {HIDDEN_SIZE}")
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return tokenizer, model


def encode_texts(texts, tokenizer, model, max_length: int,
                 batch_size: int) -> np.ndarray:
    """First-token final-layer hidden states, one row per text."""
    import torch

    rows = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            batch = texts[start:start + batch_size]
            enc = tokenizer(batch, padding="max_length", truncation=True,
                            max_length=max_length, return_tensors="pt")
            out = model(**enc)
            cls = out.last_hidden_state[:, 0, :]
            rows.append(cls.to(torch.float32).cpu().numpy())
            log.info("encoded %d/%d", min(start + batch_size, len(texts)),
                     len(texts))
    return np.concatenate(rows, axis=0)


def run_export(job: ExportJob) -> int:
    """Embed every document in the corpus; returns the record count."""
    job.validate()
    rows = read_corpus(job.input, job.format)
    if rows.skipped_empty:
        log.warning("skipped %d empty document(s)", rows.skipped_empty)

    unique = sorted(set(rows.texts))
    slot = {text: i for i, text in enumerate(unique)}
    log.info("embedding %d document(s), %d unique text(s), model %s",
             len(rows.ids), len(unique), job.model_id)

    tokenizer, model = load_encoder(job.model_id)
    table = encode_texts(unique, tokenizer, model, job.max_length,
                         job.batch_size)
    vectors = table[[slot[t] for t in rows.texts]]

    write_embx(job.out, job.model_id, rows.ids, vectors)
    log.info("wrote %s (%d x %d)", job.out, vectors.shape[0], vectors.shape[1])
    return len(rows.ids)

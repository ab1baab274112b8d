"""Labeled text corpora: loading, validation, cleaning, and splitting.

A corpus is an ordered list of (id, text, label) documents with label
Human=0 / AI=1.  CSV and JSONL are the two on-disk formats; both round-trip
losslessly through :func:`load_corpus` / :func:`save_corpus`.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .numerics import Rng

log = logging.getLogger(__name__)

CSV_HEADER = ["id", "text", "label"]


class CorpusError(ValueError):
    pass


class MissingColumnError(CorpusError):
    pass


class InvalidLabelError(CorpusError):
    def __init__(self, row: int, value):
        super().__init__(f"row {row}: label {value!r} is not one of 0/1/Human/AI")
        self.row = row


class DuplicateIdError(CorpusError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate document id {doc_id!r}")
        self.doc_id = doc_id


class DegenerateSplitError(CorpusError):
    pass


class ClassLabel(enum.IntEnum):
    HUMAN = 0
    AI = 1


_LABEL_ALIASES = {"0": ClassLabel.HUMAN, "human": ClassLabel.HUMAN,
                  "1": ClassLabel.AI, "ai": ClassLabel.AI}


def parse_label(value, row: int = -1) -> ClassLabel:
    key = str(value).strip().lower()
    if key not in _LABEL_ALIASES:
        raise InvalidLabelError(row, value)
    return _LABEL_ALIASES[key]


@dataclass(frozen=True)
class LabeledDocument:
    id: str
    text: str
    label: ClassLabel
    split: str | None = None  # train / valid / test, if tagged


@dataclass
class Corpus:
    documents: list[LabeledDocument] = field(default_factory=list)
    dropped: int = 0  # rows discarded at load time for missing/empty text

    @property
    def counts(self) -> dict[ClassLabel, int]:
        c = {ClassLabel.HUMAN: 0, ClassLabel.AI: 0}
        for d in self.documents:
            c[d.label] += 1
        return c

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def texts(self) -> list[str]:
        return [d.text for d in self.documents]

    def labels(self) -> list[int]:
        return [int(d.label) for d in self.documents]


# ---------------------------------------------------------------------------
# Cleaning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CleaningProfile:
    """Which normalizations run, always in the fixed order
    lowercase -> digit removal -> non-word removal -> whitespace collapse."""

    lowercase: bool = True
    strip_punctuation: bool = True
    remove_digits: bool = False
    collapse_whitespace: bool = True

    def as_dict(self) -> dict:
        return {"lowercase": self.lowercase,
                "strip_punctuation": self.strip_punctuation,
                "remove_digits": self.remove_digits,
                "collapse_whitespace": self.collapse_whitespace}


PROFILES = {
    # classical-feature pipeline: keep digits
    "classic": CleaningProfile(lowercase=True, strip_punctuation=True,
                               remove_digits=False, collapse_whitespace=True),
    # sequence pipeline: digits deleted outright (no space left behind)
    "lstm": CleaningProfile(lowercase=True, strip_punctuation=True,
                            remove_digits=True, collapse_whitespace=True),
    "head": CleaningProfile(lowercase=True, strip_punctuation=True,
                            remove_digits=False, collapse_whitespace=True),
}


def profile_named(name: str) -> CleaningProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown cleaning profile {name!r}; "
                       f"known: {sorted(PROFILES)}") from None


_WS_RUN = re.compile(r"\s+")


def clean_text(text: str, profile: CleaningProfile) -> str:
    """Normalize one document.  Idempotent: cleaning twice equals once.

    Digits are deleted in place; any other character that is not a letter,
    digit, or whitespace is replaced by a space so it still separates words.
    """
    if profile.lowercase:
        text = text.lower()
    if profile.remove_digits:
        text = "".join(ch for ch in text if not ch.isdigit())
    if profile.strip_punctuation:
        text = "".join(ch if (ch.isalpha() or ch.isdigit() or ch.isspace()) else " "
                       for ch in text)
    if profile.collapse_whitespace:
        text = _WS_RUN.sub(" ", text)
    return text.strip()


# ---------------------------------------------------------------------------
# Loading / saving
# ---------------------------------------------------------------------------

def _build_corpus(rows) -> Corpus:
    """rows: iterable of (row_number, id, text, label_raw)."""
    docs = []
    seen = set()
    dropped = 0
    for rownum, doc_id, text, label_raw in rows:
        label = parse_label(label_raw, rownum)
        doc_id = str(doc_id)
        if not doc_id:
            raise CorpusError(f"row {rownum}: empty document id")
        if doc_id in seen:
            raise DuplicateIdError(doc_id)
        if text is None or str(text).strip() == "":
            dropped += 1
            continue
        seen.add(doc_id)
        docs.append(LabeledDocument(id=doc_id, text=str(text), label=label))
    if dropped:
        log.warning("dropped %d row(s) with missing or empty text", dropped)
    return Corpus(documents=docs, dropped=dropped)


def load_corpus(path, format: str = "csv") -> Corpus:
    """Read a labeled corpus from disk.

    CSV needs the exact header ``id,text,label``; JSONL needs those keys on
    every line.  Labels may be 0/1 or Human/AI (case-insensitive).  Rows
    with missing or empty text are dropped and counted on ``Corpus.dropped``.
    """
    path = Path(path)
    if format == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise MissingColumnError("empty CSV file") from None
            if header != CSV_HEADER:
                raise MissingColumnError(
                    f"expected header {CSV_HEADER}, got {header}")
            rows = []
            for i, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise MissingColumnError(f"row {i}: expected 3 fields, got {len(row)}")
                rows.append((i, row[0], row[1], row[2]))
        return _build_corpus(rows)
    if format == "jsonl":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                missing = {"id", "text", "label"} - obj.keys()
                if missing:
                    raise MissingColumnError(f"line {i}: missing keys {sorted(missing)}")
                rows.append((i, obj["id"], obj["text"], obj["label"]))
        return _build_corpus(rows)
    raise ValueError(f"unknown corpus format {format!r}")


def save_corpus(corpus: Corpus, path, format: str = "csv") -> None:
    """Write a corpus back out; load(save(c)) == c for either format."""
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for d in corpus:
                writer.writerow([d.id, d.text, int(d.label)])
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for d in corpus:
                fh.write(json.dumps({"id": d.id, "text": d.text,
                                     "label": int(d.label)}) + "\n")
    else:
        raise ValueError(f"unknown corpus format {format!r}")


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def split_corpus(corpus: Corpus, train_frac: float, seed: int) -> tuple[Corpus, Corpus]:
    """Stratified shuffle split.

    Per label, floor(train_frac * class_size) documents go to the training
    part and the remainder is held out.  Both parts preserve the original
    document order.  Deterministic given the seed.
    """
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie in (0, 1)")
    counts = corpus.counts
    if min(counts.values()) < 1:
        raise DegenerateSplitError("corpus needs at least one document per label")

    rng = Rng(seed)
    train_idx: set[int] = set()
    # labels visited in fixed order so the stream consumption is documented
    for label in (ClassLabel.HUMAN, ClassLabel.AI):
        idx = [i for i, d in enumerate(corpus.documents) if d.label == label]
        perm = rng.permutation(len(idx))
        # floor of frac * size; the epsilon keeps 0.7 * 10 from landing on 6
        k = math.floor(len(idx) * train_frac + 1e-9)
        train_idx.update(idx[perm[j]] for j in range(k))

    train_docs = [d for i, d in enumerate(corpus.documents) if i in train_idx]
    held_docs = [d for i, d in enumerate(corpus.documents) if i not in train_idx]
    if not train_docs or not held_docs:
        raise DegenerateSplitError(
            f"split {train_frac} leaves an empty part "
            f"({len(train_docs)} train / {len(held_docs)} held out)")
    return Corpus(documents=train_docs), Corpus(documents=held_docs)

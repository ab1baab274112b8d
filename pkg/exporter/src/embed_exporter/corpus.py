"""Minimal reader for ``id,text,label`` corpora (CSV or JSONL).

Only ids and texts matter for embedding export, but the file must still
be a well-formed corpus: exact header, known label values, unique
non-empty ids.  Documents with empty text are skipped — downstream
corpus loaders drop them too, so there is nothing to embed them for.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

HEADER = ["id", "text", "label"]
LABELS = {"0", "1", "human", "ai"}


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusRows:
    ids: list[str]
    texts: list[str]
    skipped_empty: int


def _validate(rows, source: str) -> CorpusRows:
    ids: list[str] = []
    texts: list[str] = []
    seen: set[str] = set()
    skipped = 0
    for rownum, (doc_id, text, label) in rows:
        if str(label).strip().lower() not in LABELS:
            raise CorpusError(f"{source}: row {rownum}: bad label {label!r}")
        doc_id = str(doc_id).strip()
        if not doc_id:
            raise CorpusError(f"{source}: row {rownum}: empty document id")
        if doc_id in seen:
            raise CorpusError(f"{source}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        if not str(text).strip():
            skipped += 1
            continue
        ids.append(doc_id)
        texts.append(str(text))
    if not ids:
        raise CorpusError(f"{source}: no non-empty documents")
    return CorpusRows(ids=ids, texts=texts, skipped_empty=skipped)


def _csv_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADER:
            raise CorpusError(f"{path}: expected header {','.join(HEADER)}")
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise CorpusError(f"{path}: row {rownum}: expected 3 fields, "
                                  f"got {len(row)}")
            yield rownum, tuple(row)


def _jsonl_rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        for rownum, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {rownum}: {exc}") from exc
            try:
                yield rownum, (doc["id"], doc["text"], doc["label"])
            except (TypeError, KeyError):
                raise CorpusError(f"{path}: line {rownum}: object needs "
                                  "id/text/label keys") from None


def read_corpus(path, format: str = "csv") -> CorpusRows:
    if format == "csv":
        rows = _csv_rows(path)
    elif format == "jsonl":
        rows = _jsonl_rows(path)
    else:
        raise CorpusError(f"unknown corpus format {format!r}")
    return _validate(rows, str(path))

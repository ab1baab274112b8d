"""EMBX pooled-embedding files and corpus alignment.

EMBX v1 layout, all little-endian:

    magic "EMBX" | version u32=1 | model_id_len u32 | model_id UTF-8
    | dim u32 | count u64
    | per record: id_len u32 | id UTF-8 | dim x f32
    | crc32 u32 over every preceding byte

Vectors are stored as float32 and widened to float64 when aligned to a
corpus, so downstream arithmetic is ordinary double precision.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus

MAGIC = b"EMBX"
VERSION = 1


class BadMagicError(ValueError):
    pass


class VersionUnsupportedError(ValueError):
    pass


class TruncatedError(ValueError):
    pass


class NonFiniteVectorError(ValueError):
    pass


class CrcMismatchError(ValueError):
    pass


class MissingIdError(KeyError):
    def __init__(self, doc_id: str):
        super().__init__(f"no embedding stored for document id {doc_id!r}")
        self.doc_id = doc_id


class DuplicateIdError(ValueError):
    pass


@dataclass
class EmbeddingSet:
    model_id: str
    ids: list[str]
    vectors: np.ndarray  # n x dim float32

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise ValueError("vectors must be n x dim with dim > 0")
        if self.vectors.shape[0] != len(self.ids):
            raise ValueError(
                f"{len(self.ids)} ids vs {self.vectors.shape[0]} vectors")
        if len(set(self.ids)) != len(self.ids):
            raise DuplicateIdError("duplicate document ids in embedding set")
        if not np.all(np.isfinite(self.vectors)):
            raise NonFiniteVectorError("embedding vectors must be finite")

    @property
    def dim(self):
        return int(self.vectors.shape[1])

    def __len__(self):
        return len(self.ids)


def write_embx(es: EmbeddingSet, path) -> None:
    model_bytes = es.model_id.encode("utf-8")
    parts = [MAGIC,
             struct.pack("<I", VERSION),
             struct.pack("<I", len(model_bytes)), model_bytes,
             struct.pack("<I", es.dim),
             struct.pack("<Q", len(es))]
    for i, doc_id in enumerate(es.ids):
        id_bytes = doc_id.encode("utf-8")
        parts.append(struct.pack("<I", len(id_bytes)))
        parts.append(id_bytes)
        parts.append(es.vectors[i].astype("<f4").tobytes())
    body = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise TruncatedError(
                f"need {n} bytes at offset {self.pos}, file has {len(self.blob)}")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def read_embx(path) -> EmbeddingSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4:
        raise TruncatedError("file shorter than the magic")
    if blob[:4] != MAGIC:
        raise BadMagicError(f"expected {MAGIC!r}, found {blob[:4]!r}")
    if len(blob) < 8:
        raise TruncatedError("missing trailing checksum")
    stored_crc = struct.unpack("<I", blob[-4:])[0]
    actual_crc = zlib.crc32(blob[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise CrcMismatchError(
            f"checksum {stored_crc:#010x} but content hashes to {actual_crc:#010x}")

    r = _Reader(blob[:-4])
    r.take(4)  # magic, already checked
    version = r.u32()
    if version != VERSION:
        raise VersionUnsupportedError(f"format version {version}; supported: {VERSION}")
    model_id = r.take(r.u32()).decode("utf-8")
    dim = r.u32()
    if dim < 1:
        raise ValueError("dim must be positive")
    count = r.u64()
    ids = []
    vectors = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        ids.append(r.take(r.u32()).decode("utf-8"))
        vectors[i] = np.frombuffer(r.take(4 * dim), dtype="<f4")
    if r.pos != len(r.blob):
        raise TruncatedError(f"{len(r.blob) - r.pos} unexpected trailing bytes")
    return EmbeddingSet(model_id=model_id, ids=ids, vectors=vectors)


def align(corpus: Corpus, es: EmbeddingSet) -> np.ndarray:
    """Rows in corpus document order, widened to float64."""
    by_id = {doc_id: i for i, doc_id in enumerate(es.ids)}
    rows = np.empty((len(corpus), es.dim), dtype=np.float64)
    for i, doc in enumerate(corpus):
        j = by_id.get(doc.id)
        if j is None:
            raise MissingIdError(doc.id)
        rows[i] = es.vectors[j].astype(np.float64)
    return rows

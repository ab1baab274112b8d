"""EMBX container: write embedding sets, verify files in place.

Layout (all integers little-endian):

    "EMBX" | u32 version=1 | u32 len + model_id utf-8 | u32 dim | u64 count
    count records of: u32 len + doc_id utf-8 | dim float32
    u32 crc32 of every preceding byte

``inspect_embx`` walks the file front to back, feeding the CRC as it
goes, and never materialises the vectors — verification of a large file
costs one pass and a few kilobytes of memory.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

MAGIC = b"EMBX"
VERSION = 1


class EmbxFormatError(ValueError):
    pass


class EmbxCrcError(EmbxFormatError):
    pass


@dataclass(frozen=True)
class EmbxInfo:
    model_id: str
    dim: int
    count: int
    crc32: int


def write_embx(path, model_id: str, ids, vectors) -> None:
    """Write one embedding set; ``vectors`` is (count, dim) float-like."""
    vecs = np.asarray(vectors, dtype="<f4")
    if vecs.ndim != 2:
        raise ValueError("vectors must be a 2-d array")
    if len(ids) != vecs.shape[0]:
        raise ValueError(f"{len(ids)} ids for {vecs.shape[0]} vectors")
    if vecs.shape[1] == 0:
        raise ValueError("zero-width embeddings")

    mid = model_id.encode("utf-8")
    crc = 0
    with open(path, "wb") as fh:
        def put(chunk: bytes):
            nonlocal crc
            crc = zlib.crc32(chunk, crc)
            fh.write(chunk)

        put(MAGIC)
        put(struct.pack("<I", VERSION))
        put(struct.pack("<I", len(mid)) + mid)
        put(struct.pack("<I", vecs.shape[1]))
        put(struct.pack("<Q", vecs.shape[0]))
        for doc_id, row in zip(ids, vecs):
            rid = str(doc_id).encode("utf-8")
            put(struct.pack("<I", len(rid)) + rid)
            put(row.tobytes())
        fh.write(struct.pack("<I", crc))


def inspect_embx(path) -> EmbxInfo:
    """Parse the header and re-run the checksum without decoding vectors."""
    with open(path, "rb") as fh:
        crc = 0

        def take(n: int, what: str) -> bytes:
            nonlocal crc
            chunk = fh.read(n)
            if len(chunk) != n:
                raise EmbxFormatError(f"{path}: truncated reading {what}")
            crc = zlib.crc32(chunk, crc)
            return chunk

        if take(4, "magic") != MAGIC:
            raise EmbxFormatError(f"{path}: not an EMBX file")
        (version,) = struct.unpack("<I", take(4, "version"))
        if version != VERSION:
            raise EmbxFormatError(f"{path}: unsupported version {version}")
        (mlen,) = struct.unpack("<I", take(4, "model id length"))
        model_id = take(mlen, "model id").decode("utf-8")
        (dim,) = struct.unpack("<I", take(4, "dim"))
        (count,) = struct.unpack("<Q", take(8, "count"))
        if dim == 0:
            raise EmbxFormatError(f"{path}: zero-width embeddings")

        for i in range(count):
            (ilen,) = struct.unpack("<I", take(4, f"record {i} id length"))
            take(ilen, f"record {i} id")
            take(4 * dim, f"record {i} vector")

        trailer = fh.read(4)
        if len(trailer) != 4:
            raise EmbxFormatError(f"{path}: truncated reading checksum")
        (stored,) = struct.unpack("<I", trailer)
        if stored != crc:
            raise EmbxCrcError(f"{path}: checksum mismatch "
                               f"(stored {stored:#010x}, computed {crc:#010x})")
        if fh.read(1):
            raise EmbxFormatError(f"{path}: trailing bytes after checksum")

    return EmbxInfo(model_id=model_id, dim=dim, count=count, crc32=crc)

import struct
import zlib

import numpy as np
import pytest

from aidetect.embedding_io import (
    MAGIC,
    VERSION,
    BadMagicError,
    CrcMismatchError,
    DuplicateIdError,
    EmbeddingSet,
    MissingIdError,
    NonFiniteVectorError,
    TruncatedError,
    VersionUnsupportedError,
    align,
    read_embx,
    write_embx,
)
from oracles import make_corpus


def hand_assembled_body(version=VERSION, model_id=b"m"):
    """Byte-level reference layout for a 2x3 embedding file, minus the CRC."""
    return (MAGIC
            + struct.pack("<I", version)
            + struct.pack("<I", len(model_id)) + model_id
            + struct.pack("<I", 3)
            + struct.pack("<Q", 2)
            + struct.pack("<I", 1) + b"a" + struct.pack("<3f", 1.0, 2.0, 3.0)
            + struct.pack("<I", 1) + b"b" + struct.pack("<3f", 4.0, 5.0, 6.0))


def with_crc(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class TestEmbeddingSet:
    def test_properties(self):
        es = EmbeddingSet("m", ["a", "b"], np.zeros((2, 4), dtype=np.float32))
        assert es.dim == 4 and len(es) == 2

    def test_vectors_coerced_to_f32(self):
        es = EmbeddingSet("m", ["a"], np.array([[0.1, 0.2]]))
        assert es.vectors.dtype == np.float32

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            EmbeddingSet("m", ["a"], np.zeros((2, 3), dtype=np.float32))

    def test_duplicate_ids(self):
        with pytest.raises(DuplicateIdError):
            EmbeddingSet("m", ["a", "a"], np.zeros((2, 3), dtype=np.float32))

    def test_non_finite_rejected(self):
        v = np.zeros((1, 2), dtype=np.float32)
        v[0, 0] = np.inf
        with pytest.raises(NonFiniteVectorError):
            EmbeddingSet("m", ["a"], v)


class TestByteLayout:
    def test_write_matches_hand_assembled_bytes(self, tmp_path):
        es = EmbeddingSet("m", ["a", "b"],
                          np.array([[1, 2, 3], [4, 5, 6]], dtype=np.float32))
        path = tmp_path / "e.embx"
        write_embx(es, path)
        assert path.read_bytes() == with_crc(hand_assembled_body())

    def test_read_hand_assembled_bytes(self, tmp_path):
        path = tmp_path / "e.embx"
        path.write_bytes(with_crc(hand_assembled_body()))
        es = read_embx(path)
        assert es.model_id == "m"
        assert es.ids == ["a", "b"]
        assert es.dim == 3
        assert np.array_equal(es.vectors, [[1, 2, 3], [4, 5, 6]])

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        es = EmbeddingSet("some/backbone-v1",
                          [f"doc{i}" for i in range(17)],
                          rng.normal(size=(17, 9)).astype(np.float32))
        path = tmp_path / "e.embx"
        write_embx(es, path)
        back = read_embx(path)
        assert back.model_id == es.model_id
        assert back.ids == es.ids
        assert np.array_equal(
            back.vectors.view(np.uint32), es.vectors.view(np.uint32))

    def test_unicode_ids_and_model(self, tmp_path):
        es = EmbeddingSet("modèle-β", ["döc-1"],
                          np.ones((1, 2), dtype=np.float32))
        path = tmp_path / "e.embx"
        write_embx(es, path)
        back = read_embx(path)
        assert back.model_id == "modèle-β" and back.ids == ["döc-1"]


class TestReadErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "e.embx"
        path.write_bytes(b"NOPE" + with_crc(hand_assembled_body())[4:])
        with pytest.raises(BadMagicError):
            read_embx(path)

    def test_too_short_for_magic(self, tmp_path):
        path = tmp_path / "e.embx"
        path.write_bytes(b"EM")
        with pytest.raises(TruncatedError):
            read_embx(path)

    def test_corrupt_payload_fails_crc(self, tmp_path):
        blob = bytearray(with_crc(hand_assembled_body()))
        blob[20] ^= 0xFF
        path = tmp_path / "e.embx"
        path.write_bytes(bytes(blob))
        with pytest.raises(CrcMismatchError):
            read_embx(path)

    def test_corrupt_trailing_crc(self, tmp_path):
        blob = bytearray(with_crc(hand_assembled_body()))
        blob[-1] ^= 0x01
        path = tmp_path / "e.embx"
        path.write_bytes(bytes(blob))
        with pytest.raises(CrcMismatchError):
            read_embx(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "e.embx"
        path.write_bytes(with_crc(hand_assembled_body(version=2)))
        with pytest.raises(VersionUnsupportedError):
            read_embx(path)

    def test_truncated_record(self, tmp_path):
        body = hand_assembled_body()[:-6]  # cut into the last vector
        path = tmp_path / "e.embx"
        path.write_bytes(with_crc(body))
        with pytest.raises(TruncatedError):
            read_embx(path)

    def test_trailing_garbage_detected(self, tmp_path):
        body = hand_assembled_body() + b"extra"
        path = tmp_path / "e.embx"
        path.write_bytes(with_crc(body))
        with pytest.raises(TruncatedError):
            read_embx(path)


class TestAlign:
    def test_corpus_order_and_dtype(self):
        corpus = make_corpus([("b", "x", 0), ("a", "y", 1)])
        es = EmbeddingSet("m", ["a", "b"],
                          np.array([[1, 1], [2, 2]], dtype=np.float32))
        rows = align(corpus, es)
        assert rows.dtype == np.float64
        assert np.array_equal(rows, [[2, 2], [1, 1]])  # b first, then a

    def test_extra_embeddings_are_fine(self):
        corpus = make_corpus([("a", "x", 0)])
        es = EmbeddingSet("m", ["a", "z"], np.ones((2, 2), dtype=np.float32))
        assert align(corpus, es).shape == (1, 2)

    def test_missing_id_names_document(self):
        corpus = make_corpus([("ghost", "x", 0)])
        es = EmbeddingSet("m", ["a"], np.ones((1, 2), dtype=np.float32))
        with pytest.raises(MissingIdError) as exc:
            align(corpus, es)
        assert exc.value.doc_id == "ghost"

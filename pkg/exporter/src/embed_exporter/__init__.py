"""Pooled-embedding export for text corpora.

Runs a pretrained encoder over ``id,text,label`` corpora and writes the
final-layer first-token vectors as EMBX v1 — a little binary format with
a CRC32 trailer that downstream consumers verify on read.
"""

from .corpus import CorpusError, read_corpus
from .embx import EmbxFormatError, inspect_embx, write_embx
from .export import ExportJob, ModelLoadError, SUPPORTED_MODELS, run_export

__all__ = [
    "CorpusError",
    "EmbxFormatError",
    "ExportJob",
    "ModelLoadError",
    "SUPPORTED_MODELS",
    "inspect_embx",
    "read_corpus",
    "run_export",
    "write_embx",
]

"""
Frozen-encoder heads on exported embeddings
===========================================

The heads never see text beyond optional n-gram counts: they train on
pooled encoder vectors shipped in EMBX files.  Here the vectors are
synthetic Gaussians so the demo runs without any pretrained model.
"""

import tempfile
from pathlib import Path

import numpy as np

from aidetect.embedding_io import read_embx, write_embx
from aidetect.heads import HeadConfig, HeadKind
from aidetect.pipelines import fit_head_detector
from synth import synth_corpus, synth_embeddings

corpus = synth_corpus(120, seed=3)
embeddings = synth_embeddings(corpus, dim=24, separation=4.0)

# EMBX is the binary handoff format: magic, model id, dim, count, float32
# vectors, CRC32 trailer.  Round-trip through a file like the real flow.
workdir = Path(tempfile.mkdtemp())
embx_path = workdir / "demo.embx"
write_embx(embeddings, embx_path)
loaded = read_embx(embx_path)
print(f"EMBX round trip: model_id={loaded.model_id!r}, "
      f"dim={loaded.dim}, count={len(loaded)}, "
      f"{embx_path.stat().st_size} bytes")

truth = np.array(corpus.labels())
config = HeadConfig(epochs=25, lr=0.01, seed=0)

for kind in (HeadKind.BERT_NGRAM, HeadKind.BERT_CUSTOM,
             HeadKind.DISTILBERT_HEAD):
    detector, history = fit_head_detector(kind, corpus, loaded, config)
    acc = float((detector.predict((corpus, loaded)) == truth).mean())
    print(f"{kind.value:16s} train acc {acc:.3f}  "
          f"loss {history.train_loss[0]:.4f} -> {history.train_loss[-1]:.4f}")

# bert-ngram widens the input with word n-gram counts; the other two are
# pure MLPs over the embedding (512-wide hidden vs width-mirroring).
ngram_det, _ = fit_head_detector(HeadKind.BERT_NGRAM, corpus, loaded, config,
                                 ngram_min=1, ngram_max=2)
print(f"bert-ngram input width: {ngram_det.model.input_dim} embedding dims "
      f"+ {ngram_det.model.ngram_width} n-gram columns")

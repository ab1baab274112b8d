"""Synthetic corpora for the demo scripts.

Two vocabularies with a deliberate stylistic gap: the "AI" voice leans on
stock connective phrases, the "human" voice on casual filler.  Easy to
separate on purpose — the demos are about the machinery, not the task.
"""

import numpy as np

from aidetect.corpus import Corpus, LabeledDocument
from aidetect.embedding_io import EmbeddingSet
from aidetect.numerics import Rng

AI_WORDS = ["delve", "tapestry", "moreover", "furthermore", "intricate",
            "pivotal", "landscape", "testament", "paramount", "notably"]
HUMAN_WORDS = ["yeah", "gonna", "stuff", "kinda", "honestly", "weird",
               "anyway", "guess", "pretty", "basically"]
FILLER = ["the", "a", "it", "is", "was", "on", "in", "to", "of", "and"]


def synth_corpus(n: int, seed: int = 0, marker_rate: float = 0.4) -> Corpus:
    """n alternating-label documents, 8-20 tokens each."""
    rng = Rng(seed)
    docs = []
    for i in range(n):
        label = 1 if i % 2 == 0 else 0
        markers = AI_WORDS if label == 1 else HUMAN_WORDS
        length = 8 + int(rng.uniform() * 12)
        words = []
        for _ in range(length):
            pool = markers if rng.uniform() < marker_rate else FILLER
            words.append(pool[int(rng.uniform() * len(pool)) % len(pool)])
        docs.append(LabeledDocument(id=f"d{i:04d}", text=" ".join(words),
                                    label=label))
    return Corpus(documents=docs)


def synth_embeddings(corpus, dim: int = 16, separation: float = 4.0,
                     seed: int = 7, model_id: str = "demo-backbone"):
    """Gaussian vectors; AI documents are shifted along the first axis."""
    rng = Rng(seed)
    vectors = rng.normal((len(corpus), dim)).astype(np.float32)
    labels = np.array(corpus.labels())
    vectors[labels == 1, 0] += separation
    return EmbeddingSet(model_id=model_id, ids=corpus.ids(), vectors=vectors)

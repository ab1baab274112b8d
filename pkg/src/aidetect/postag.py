"""Deterministic coarse part-of-speech tagging.

Twelve fixed tags.  Lookup order: bundled closed-class lexicon, then suffix
heuristics, then NOUN as the default open-class guess.  No statistical model
and no external downloads; the lexicon ships with the package as a versioned
TSV so taggings are reproducible across installs.
"""

from __future__ import annotations

import string
from functools import lru_cache
from importlib import resources

import numpy as np

# Fixed, versioned tag order; feature vectors index into this tuple.
TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "DET",
        "ADP", "NUM", "CONJ", "PRT", "PUNCT", "X")
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}

LEXICON_VERSION = "v1"

_PUNCT_CHARS = set(string.punctuation)

# (suffix, minimum token length, tag) checked in order; first hit wins
_SUFFIX_RULES = (
    ("ly", 5, "ADV"),
    ("ing", 5, "VERB"),
    ("ed", 4, "VERB"),
    ("ize", 5, "VERB"),
    ("ise", 5, "VERB"),
    ("ous", 5, "ADJ"),
    ("ful", 5, "ADJ"),
    ("ive", 5, "ADJ"),
    ("able", 6, "ADJ"),
    ("ible", 6, "ADJ"),
    ("al", 5, "ADJ"),
)


@lru_cache(maxsize=1)
def lexicon() -> dict[str, str]:
    """token -> tag map from the bundled tag_lexicon.tsv."""
    text = resources.files("aidetect").joinpath("data/tag_lexicon.tsv").read_text("utf-8")
    table = {}
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        token, tag = line.split("\t")
        if tag not in TAG_INDEX:
            raise ValueError(f"lexicon entry {token!r} has unknown tag {tag!r}")
        table[token] = tag
    return table


def tag_token(token: str) -> str:
    low = token.lower()
    hit = lexicon().get(low)
    if hit is not None:
        return hit
    if low.isdigit():
        return "NUM"
    if low and all(ch in _PUNCT_CHARS for ch in low):
        return "PUNCT"
    if len(low) == 1 and not low.isalnum():
        return "X"
    for suffix, min_len, tag in _SUFFIX_RULES:
        if len(low) >= min_len and low.endswith(suffix):
            return tag
    return "NOUN"


def pos_tag(tokens: list[str]) -> list[str]:
    """One tag per token; total function, empty list in -> empty list out."""
    return [tag_token(t) for t in tokens]


def pos_feature_vector(tags: list[str]) -> np.ndarray:
    """Relative tag frequencies in fixed TAGS order; all zeros for no tokens."""
    vec = np.zeros(len(TAGS))
    if not tags:
        return vec
    for t in tags:
        vec[TAG_INDEX[t]] += 1.0
    return vec / len(tags)

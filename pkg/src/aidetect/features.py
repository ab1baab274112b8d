"""Vocabularies and feature matrices: BoW, TF-IDF, n-grams, POS frequencies.

Everything here is fit on a training corpus and applied unchanged to later
documents.  Vocabularies order tokens by descending corpus frequency with a
lexicographic tie-break, which makes every fitted artifact reproducible
byte for byte.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import CleaningProfile, Corpus, clean_text
from .postag import TAGS, pos_feature_vector, pos_tag

PAD_INDEX = 0
OOV_INDEX = 1


class EmptyVocabularyError(ValueError):
    pass


class WidthMismatchError(ValueError):
    pass


class RowMismatchError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Whitespace split of already-cleaned text; '' -> []."""
    return text.split()


def corpus_fingerprint(corpus: Corpus) -> str:
    """Short stable digest of (id, label, text) triples, for provenance."""
    h = hashlib.sha256()
    for d in corpus:
        h.update(d.id.encode())
        h.update(b"\x00")
        h.update(str(int(d.label)).encode())
        h.update(b"\x00")
        h.update(d.text.encode())
        h.update(b"\x01")
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Vocabularies
# ---------------------------------------------------------------------------

@dataclass
class Vocabulary:
    """token -> index map with 0 reserved for padding and 1 for OOV.

    Real tokens occupy contiguous indices starting at 2, assigned in order
    of descending corpus frequency (ties broken lexicographically).
    """

    entries: dict[str, int]
    profile: CleaningProfile
    fitted_on: str = ""

    @classmethod
    def from_counts(cls, counts: Counter, profile: CleaningProfile,
                    max_size: int, min_freq: int = 1, fitted_on: str = "") -> "Vocabulary":
        if max_size < 1:
            raise ValueError("max_size must be >= 1")
        ranked = sorted((t for t, c in counts.items() if c >= min_freq),
                        key=lambda t: (-counts[t], t))[:max_size]
        if not ranked:
            raise EmptyVocabularyError("no token meets the frequency threshold")
        return cls(entries={t: i + 2 for i, t in enumerate(ranked)},
                   profile=profile, fitted_on=fitted_on)

    def __len__(self):
        return len(self.entries)

    def index(self, token: str) -> int:
        return self.entries.get(token, OOV_INDEX)

    def tokens(self) -> list[str]:
        """Tokens in index order (index 2 first)."""
        return sorted(self.entries, key=self.entries.get)


def build_vocabulary(corpus: Corpus, profile: CleaningProfile,
                     max_size: int = 5000, min_freq: int = 1) -> Vocabulary:
    counts = Counter()
    for doc in corpus:
        counts.update(tokenize(clean_text(doc.text, profile)))
    return Vocabulary.from_counts(counts, profile, max_size, min_freq,
                                  fitted_on=corpus_fingerprint(corpus))


def encode_sequence(tokens: list[str], vocab: Vocabulary, max_len: int) -> np.ndarray:
    """Token indices truncated/right-padded to exactly max_len.

    Unknown tokens map to 1; padding is 0 and only ever appears as a suffix.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    seq = np.zeros(max_len, dtype=np.int64)
    for i, tok in enumerate(tokens[:max_len]):
        seq[i] = vocab.index(tok)
    return seq


# ---------------------------------------------------------------------------
# Feature matrices
# ---------------------------------------------------------------------------

@dataclass
class FeatureMatrix:
    data: np.ndarray  # dense float64, documents x features
    column_names: list[str]
    fitted_on: str = ""
    name: str = ""  # part label used as a prefix when concatenating

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("feature data must be 2-D")
        if self.data.shape[1] != len(self.column_names):
            raise WidthMismatchError(
                f"{self.data.shape[1]} columns vs {len(self.column_names)} names")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature matrix contains non-finite values")

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]


def bag_of_words(corpus: Corpus, vocab: Vocabulary) -> FeatureMatrix:
    """Raw token counts; column j holds the token with vocabulary index j+2."""
    tokens_by_index = vocab.tokens()
    data = np.zeros((len(corpus), len(vocab)))
    for row, doc in enumerate(corpus):
        for tok in tokenize(clean_text(doc.text, vocab.profile)):
            idx = vocab.entries.get(tok)
            if idx is not None:
                data[row, idx - 2] += 1.0
    return FeatureMatrix(data, column_names=list(tokens_by_index),
                         fitted_on=vocab.fitted_on, name="bow")


def _l2_normalize_rows(data: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(data, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0  # all-zero rows stay all-zero
    return data / norms


def tfidf(corpus: Corpus, vocab: Vocabulary) -> tuple[FeatureMatrix, np.ndarray]:
    """Fit and transform: tf * idf with smoothed idf and row L2 normalization.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the fitting corpus.  Returns
    the matrix and the fitted idf vector for transforming unseen documents.
    """
    if len(corpus) == 0:
        raise ValueError("tfidf needs a non-empty corpus")
    counts = bag_of_words(corpus, vocab)
    df = (counts.data > 0).sum(axis=0)
    n = len(corpus)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    data = _l2_normalize_rows(counts.data * idf)
    return (FeatureMatrix(data, column_names=counts.column_names,
                          fitted_on=vocab.fitted_on, name="tfidf"), idf)


def tfidf_transform(corpus: Corpus, vocab: Vocabulary, idf: np.ndarray) -> FeatureMatrix:
    """Apply a previously fitted idf vector to new documents."""
    counts = bag_of_words(corpus, vocab)
    if idf.shape[0] != counts.cols:
        raise WidthMismatchError(f"idf width {idf.shape[0]} vs vocab {counts.cols}")
    data = _l2_normalize_rows(counts.data * idf)
    return FeatureMatrix(data, column_names=counts.column_names,
                         fitted_on=vocab.fitted_on, name="tfidf")


# ---------------------------------------------------------------------------
# N-grams
# ---------------------------------------------------------------------------

def extract_ngrams(tokens: list[str], n_min: int, n_max: int):
    """All contiguous n-grams for n in [n_min, n_max].

    Returns (ngrams, counts): the list groups by n and keeps document order
    within each n; counts aggregates frequencies over the whole list.
    """
    if not 1 <= n_min <= n_max:
        raise ValueError("need 1 <= n_min <= n_max")
    grams: list[tuple[str, ...]] = []
    for n in range(n_min, n_max + 1):
        grams.extend(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return grams, Counter(grams)


@dataclass
class NgramVocabulary:
    """Joined n-gram -> column index over a fit corpus.

    Columns are ordered by descending frequency (lexicographic tie-break on
    the joined form) and every stored n-gram met min_freq at fit time.
    """

    n_min: int
    n_max: int
    entries: dict[str, int]
    min_freq: int
    profile: CleaningProfile
    fitted_on: str = ""

    def __len__(self):
        return len(self.entries)

    def columns(self) -> list[str]:
        return sorted(self.entries, key=self.entries.get)


JOIN = " "


def join_gram(gram: tuple[str, ...]) -> str:
    return JOIN.join(gram)


def fit_ngram_vocabulary(corpus: Corpus, profile: CleaningProfile,
                         n_min: int = 1, n_max: int = 4,
                         max_size: int = 5000, min_freq: int = 2) -> NgramVocabulary:
    counts: Counter = Counter()
    for doc in corpus:
        _, doc_counts = extract_ngrams(tokenize(clean_text(doc.text, profile)),
                                       n_min, n_max)
        counts.update(doc_counts)
    ranked = sorted((join_gram(g) for g, c in counts.items() if c >= min_freq),
                    key=lambda j: (-counts[tuple(j.split(JOIN))], j))[:max_size]
    if not ranked:
        raise EmptyVocabularyError("no n-gram meets the frequency threshold")
    return NgramVocabulary(n_min=n_min, n_max=n_max,
                           entries={g: i for i, g in enumerate(ranked)},
                           min_freq=min_freq, profile=profile,
                           fitted_on=corpus_fingerprint(corpus))


def ngram_features(corpus: Corpus, nvocab: NgramVocabulary) -> FeatureMatrix:
    """Raw occurrence counts over the fitted n-gram vocabulary."""
    data = np.zeros((len(corpus), len(nvocab)))
    for row, doc in enumerate(corpus):
        _, doc_counts = extract_ngrams(
            tokenize(clean_text(doc.text, nvocab.profile)),
            nvocab.n_min, nvocab.n_max)
        for gram, c in doc_counts.items():
            col = nvocab.entries.get(join_gram(gram))
            if col is not None:
                data[row, col] = c
    return FeatureMatrix(data, column_names=nvocab.columns(),
                         fitted_on=nvocab.fitted_on, name="ngram")


# ---------------------------------------------------------------------------
# POS features
# ---------------------------------------------------------------------------

def pos_features(corpus: Corpus, profile: CleaningProfile) -> FeatureMatrix:
    """Per-document relative tag frequencies (12 columns, fixed tag order)."""
    data = np.zeros((len(corpus), len(TAGS)))
    for row, doc in enumerate(corpus):
        tags = pos_tag(tokenize(clean_text(doc.text, profile)))
        data[row] = pos_feature_vector(tags)
    return FeatureMatrix(data, column_names=list(TAGS),
                         fitted_on=corpus_fingerprint(corpus), name="pos")


# ---------------------------------------------------------------------------
# Scaling and concatenation
# ---------------------------------------------------------------------------

@dataclass
class ScalerStats:
    """Per-column training mean and population std; std-0 columns divide by 1."""

    mean: np.ndarray
    std: np.ndarray
    constant_columns: set[int] = field(default_factory=set)

    @property
    def width(self):
        return self.mean.shape[0]


def fit_scaler(train: FeatureMatrix) -> ScalerStats:
    mean = train.data.mean(axis=0)
    std = train.data.std(axis=0)  # population variance (ddof=0)
    constant = {int(i) for i in np.flatnonzero(std == 0.0)}
    return ScalerStats(mean=mean, std=std, constant_columns=constant)


def apply_scaler(m: FeatureMatrix, s: ScalerStats) -> FeatureMatrix:
    if m.cols != s.width:
        raise WidthMismatchError(f"matrix width {m.cols} vs scaler {s.width}")
    divisor = np.where(s.std == 0.0, 1.0, s.std)
    return FeatureMatrix((m.data - s.mean) / divisor,
                         column_names=list(m.column_names),
                         fitted_on=m.fitted_on, name=m.name)


def concat_features(parts: list[FeatureMatrix]) -> FeatureMatrix:
    """Horizontal concatenation; column names get a part-name prefix."""
    if not parts:
        raise ValueError("nothing to concatenate")
    rows = parts[0].rows
    for p in parts[1:]:
        if p.rows != rows:
            raise RowMismatchError(f"{p.rows} rows vs {rows}")
    names = []
    for p in parts:
        prefix = f"{p.name}:" if p.name else ""
        names.extend(prefix + c for c in p.column_names)
    return FeatureMatrix(np.hstack([p.data for p in parts]),
                         column_names=names,
                         fitted_on=parts[0].fitted_on)

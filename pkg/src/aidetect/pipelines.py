"""End-to-end detector bundles: featurization + trained model + threshold.

Each bundle owns everything needed to score raw documents and exposes the
same two methods — ``predict_scores(x)`` and ``predict(x)`` — so the voting
ensemble can treat all five detector kinds uniformly.  ``x`` is a Corpus for
the feature and sequence models, and a ``(Corpus, EmbeddingSet)`` pair for
the transformer heads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import heads as heads_mod
from . import logreg as logreg_mod
from . import lstm as lstm_mod
from .corpus import Corpus, profile_named
from .embedding_io import EmbeddingSet, align
from .evaluation import roc_curve, youden_threshold
from .features import (FeatureMatrix, NgramVocabulary, ScalerStats,
                       Vocabulary, apply_scaler, bag_of_words, concat_features,
                       build_vocabulary, fit_ngram_vocabulary, fit_scaler,
                       ngram_features, pos_features, tfidf, tfidf_transform)
from .heads import HeadConfig, HeadKind, HeadModel
from .logreg import LogRegConfig, LogRegModel
from .lstm import DualStreamLstmModel, LstmConfig
from .numerics import LossHistory


class EmbeddingModelMismatchError(ValueError):
    pass


LOGREG_PROFILE = "classic"
LSTM_PROFILE = "lstm"
HEAD_PROFILE = "head"


# ---------------------------------------------------------------------------
# Logistic regression over BoW + TF-IDF + POS
# ---------------------------------------------------------------------------

@dataclass
class LogregDetector:
    vocab: Vocabulary
    idf: np.ndarray
    scaler: ScalerStats
    model: LogRegModel
    config_record: dict = field(default_factory=dict)

    kind = "logreg"

    def features(self, corpus: Corpus) -> FeatureMatrix:
        profile = self.vocab.profile
        parts = [bag_of_words(corpus, self.vocab),
                 tfidf_transform(corpus, self.vocab, self.idf),
                 pos_features(corpus, profile)]
        return apply_scaler(concat_features(parts), self.scaler)

    def predict_scores(self, corpus: Corpus) -> np.ndarray:
        return logreg_mod.predict_proba(self.model, self.features(corpus))

    def predict(self, corpus: Corpus) -> np.ndarray:
        return (self.predict_scores(corpus) >= self.model.threshold
                ).astype(np.int64)

    @property
    def threshold(self) -> float:
        return self.model.threshold


def fit_logreg_detector(train: Corpus, config: LogRegConfig | None = None,
                        valid: Corpus | None = None, vocab_size: int = 5000,
                        min_freq: int = 1, calibrate: bool = False,
                        ) -> tuple[LogregDetector, LossHistory]:
    profile = profile_named(LOGREG_PROFILE)
    vocab = build_vocabulary(train, profile, vocab_size, min_freq)
    tfidf_train, idf = tfidf(train, vocab)
    raw = concat_features([bag_of_words(train, vocab), tfidf_train,
                           pos_features(train, profile)])
    scaler = fit_scaler(raw)
    x_train = apply_scaler(raw, scaler)

    x_valid = valid_labels = None
    if valid is not None:
        parts = [bag_of_words(valid, vocab),
                 tfidf_transform(valid, vocab, idf),
                 pos_features(valid, profile)]
        x_valid = apply_scaler(concat_features(parts), scaler)
        valid_labels = valid.labels()

    fingerprints = {"vocab": vocab.fitted_on}
    model, history = logreg_mod.train_logreg(
        x_train, train.labels(), config, valid=x_valid,
        valid_labels=valid_labels, scaler=scaler,
        vocab_fingerprints=fingerprints)
    if calibrate and valid is not None:
        scores = logreg_mod.predict_proba(model, x_valid)
        model.threshold = youden_threshold(roc_curve(scores, valid.labels()))
    return LogregDetector(vocab=vocab, idf=idf, scaler=scaler,
                          model=model), history


# ---------------------------------------------------------------------------
# Dual-stream LSTM
# ---------------------------------------------------------------------------

@dataclass
class LstmDetector:
    uni_vocab: Vocabulary
    bi_vocab: Vocabulary
    model: DualStreamLstmModel
    config_record: dict = field(default_factory=dict)

    kind = "lstm"

    def sequences(self, corpus: Corpus) -> tuple[np.ndarray, np.ndarray]:
        return lstm_mod.prepare_sequences(corpus, self.uni_vocab,
                                          self.bi_vocab, self.model.max_len)

    def predict_scores(self, corpus: Corpus) -> np.ndarray:
        uni, bi = self.sequences(corpus)
        return lstm_mod.predict_scores(self.model, uni, bi)

    def predict(self, corpus: Corpus) -> np.ndarray:
        return (self.predict_scores(corpus) >= self.model.threshold
                ).astype(np.int64)

    @property
    def threshold(self) -> float:
        return self.model.threshold


def fit_lstm_detector(train: Corpus, config: LstmConfig | None = None,
                      valid: Corpus | None = None, vocab_size: int = 5000,
                      min_freq: int = 1, bigram_vocab_size: int = 5000,
                      calibrate: bool = True,
                      ) -> tuple[LstmDetector, LossHistory]:
    config = config or LstmConfig()
    profile = profile_named(LSTM_PROFILE)
    uni_vocab = build_vocabulary(train, profile, vocab_size, min_freq)
    bi_vocab = lstm_mod.build_bigram_vocabulary(train, profile,
                                                bigram_vocab_size)
    uni, bi = lstm_mod.prepare_sequences(train, uni_vocab, bi_vocab,
                                         config.max_len)
    valid_uni = valid_bi = valid_labels = None
    if valid is not None:
        valid_uni, valid_bi = lstm_mod.prepare_sequences(
            valid, uni_vocab, bi_vocab, config.max_len)
        valid_labels = valid.labels()

    model, history = lstm_mod.train_lstm(
        uni, bi, train.labels(), uni_rows=len(uni_vocab) + 2,
        bi_rows=len(bi_vocab) + 2, config=config, valid_uni=valid_uni,
        valid_bi=valid_bi, valid_labels=valid_labels)
    detector = LstmDetector(uni_vocab=uni_vocab, bi_vocab=bi_vocab,
                            model=model)
    if calibrate and valid is not None:
        scores = lstm_mod.predict_scores(model, valid_uni, valid_bi)
        lstm_mod.calibrate_threshold(model, scores, valid_labels)
    return detector, history


# ---------------------------------------------------------------------------
# Transformer heads over frozen embeddings
# ---------------------------------------------------------------------------

@dataclass
class HeadDetector:
    model: HeadModel
    ngram_vocab: NgramVocabulary | None = None
    config_record: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.model.kind.value

    @property
    def embedding_model_id(self) -> str:
        return self.model.embedding_model_id

    def inputs(self, corpus: Corpus, embeddings: EmbeddingSet):
        if embeddings.model_id != self.embedding_model_id:
            raise EmbeddingModelMismatchError(
                f"embeddings come from {embeddings.model_id!r} but this head "
                f"was trained on {self.embedding_model_id!r}")
        emb = align(corpus, embeddings)
        ngrams = None
        if self.ngram_vocab is not None:
            ngrams = ngram_features(corpus, self.ngram_vocab)
        return emb, ngrams

    def predict_scores(self, x) -> np.ndarray:
        corpus, embeddings = x
        emb, ngrams = self.inputs(corpus, embeddings)
        scores, _ = heads_mod.head_predict(self.model, emb, ngrams)
        return scores

    def predict(self, x) -> np.ndarray:
        corpus, embeddings = x
        emb, ngrams = self.inputs(corpus, embeddings)
        _, labels = heads_mod.head_predict(self.model, emb, ngrams)
        return labels

    @property
    def threshold(self) -> float:
        return 0.5  # argmax over two softmax probabilities == 0.5 on P(AI)


def fit_head_detector(kind: HeadKind | str, train: Corpus,
                      embeddings: EmbeddingSet,
                      config: HeadConfig | None = None,
                      valid: Corpus | None = None,
                      valid_embeddings: EmbeddingSet | None = None,
                      ngram_vocab_size: int = 5000, ngram_min_freq: int = 2,
                      ngram_min: int = 1, ngram_max: int = 4,
                      ) -> tuple[HeadDetector, LossHistory]:
    kind = HeadKind(kind)
    profile = profile_named(HEAD_PROFILE)
    emb = align(train, embeddings)

    ngram_vocab = None
    train_ngrams = None
    if kind.expects_ngrams:
        ngram_vocab = fit_ngram_vocabulary(train, profile, ngram_min,
                                           ngram_max, ngram_vocab_size,
                                           ngram_min_freq)
        train_ngrams = ngram_features(train, ngram_vocab)

    valid_emb = valid_ngrams = valid_labels = None
    if valid is not None:
        vset = valid_embeddings or embeddings
        if vset.model_id != embeddings.model_id:
            raise EmbeddingModelMismatchError(
                f"validation embeddings from {vset.model_id!r}, training from "
                f"{embeddings.model_id!r}")
        valid_emb = align(valid, vset)
        if ngram_vocab is not None:
            valid_ngrams = ngram_features(valid, ngram_vocab)
        valid_labels = valid.labels()

    model, history = heads_mod.train_head(
        kind, emb, train.labels(), ngram_features=train_ngrams, config=config,
        valid_embeddings=valid_emb, valid_ngrams=valid_ngrams,
        valid_labels=valid_labels)
    model.embedding_model_id = embeddings.model_id
    if ngram_vocab is not None:
        model.vocab_fingerprints["ngram_vocab"] = ngram_vocab.fitted_on
    return HeadDetector(model=model, ngram_vocab=ngram_vocab), history

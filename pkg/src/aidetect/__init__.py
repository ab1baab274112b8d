"""Detectors for machine-generated text: classical features, dual-stream
LSTM, frozen-backbone transformer heads, and a max-voting ensemble."""

from .corpus import (ClassLabel, Corpus, LabeledDocument, clean_text,
                     load_corpus, profile_named, save_corpus, split_corpus)
from .ensemble import VoteMatrix, ensemble_predict, max_vote
from .evaluation import (EvalReport, RocCurve, auc, classification_report,
                         emit_plot_data, roc_curve, youden_threshold)
from .numerics import LossHistory, Rng, grad_check
from .pipelines import (HeadDetector, LogregDetector, LstmDetector,
                        fit_head_detector, fit_logreg_detector,
                        fit_lstm_detector)

__version__ = "0.1.0"

__all__ = [
    "ClassLabel", "Corpus", "LabeledDocument", "clean_text", "load_corpus",
    "profile_named", "save_corpus", "split_corpus",
    "VoteMatrix", "ensemble_predict", "max_vote",
    "EvalReport", "RocCurve", "auc", "classification_report",
    "emit_plot_data", "roc_curve", "youden_threshold",
    "LossHistory", "Rng", "grad_check",
    "HeadDetector", "LogregDetector", "LstmDetector",
    "fit_head_detector", "fit_logreg_detector", "fit_lstm_detector",
    "__version__",
]

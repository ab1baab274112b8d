"""
Max-vote ensemble and evaluation artifacts
==========================================

Three detectors of different families vote per document; ties (possible
only with an even member count) fall back to the mean score.  Reports and
curves serialize to stable CSV/JSON for plotting elsewhere.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from aidetect.corpus import split_corpus
from aidetect.ensemble import ensemble_predict, export_votes
from aidetect.evaluation import (auc, classification_report, emit_plot_data,
                                 roc_curve)
from aidetect.heads import HeadConfig, HeadKind
from aidetect.logreg import LogRegConfig
from aidetect.lstm import LstmConfig
from aidetect.pipelines import (fit_head_detector, fit_logreg_detector,
                                fit_lstm_detector)
from synth import synth_corpus, synth_embeddings

corpus = synth_corpus(240, seed=4)
train, test = split_corpus(corpus, 0.8, seed=0)
embeddings = synth_embeddings(corpus, dim=16)

logreg, _ = fit_logreg_detector(train, LogRegConfig(epochs=25))
lstm, _ = fit_lstm_detector(
    train, LstmConfig(embedding_dim=12, hidden_size=12, max_len=12,
                      epochs=15, batch_size=8, lr=0.01), calibrate=False)
head, _ = fit_head_detector(HeadKind.DISTILBERT_HEAD, train, embeddings,
                            HeadConfig(epochs=25, lr=0.01, seed=0))

members = [logreg, lstm, head]
inputs = [test, test, (test, embeddings)]
truth = np.array(test.labels())

labels, votes = ensemble_predict(members, inputs,
                                 detector_ids=[m.kind for m in members])
for m, x in zip(members, inputs):
    acc = float((m.predict(x) == truth).mean())
    print(f"{m.kind:16s} test accuracy {acc:.3f}")
print(f"{'ensemble':16s} test accuracy {float((labels == truth).mean()):.3f}")

workdir = Path(tempfile.mkdtemp())

# Vote matrix: one row per document, one column per member, plus the call.
votes_csv = workdir / "votes.csv"
export_votes(votes, test.ids(), votes_csv)
print("\n" + "\n".join(votes_csv.read_text().splitlines()[:4]))

# ROC points and the classification report round-trip through plain files.
scores = logreg.predict_scores(test)
curve = roc_curve(scores, truth)
emit_plot_data(curve, workdir / "roc.csv")
report = classification_report(labels, truth, auc_value=auc(curve))
(workdir / "report.json").write_text(json.dumps(report.to_json_dict()))
print(f"\nwrote {workdir}/votes.csv, roc.csv, report.json")
print(f"logreg AUC {auc(curve):.3f}; "
      f"ensemble macro F1 {report.macro_avg.f1:.3f}")

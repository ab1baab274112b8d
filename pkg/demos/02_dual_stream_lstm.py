"""
Dual-stream LSTM: unigram and bigram sequences, trained by hand-rolled BPTT
===========================================================================
"""

import numpy as np

from aidetect.corpus import split_corpus
from aidetect.lstm import LstmConfig, predict_scores
from aidetect.pipelines import fit_lstm_detector
from synth import synth_corpus

# Short sequences and small widths keep this a few seconds of CPU.
corpus = synth_corpus(160, seed=2)
train, valid = split_corpus(corpus, 0.75, seed=0)

config = LstmConfig(embedding_dim=16, hidden_size=16, max_len=12,
                    epochs=20, batch_size=8, lr=0.01, dropout_p=0.2)
detector, history = fit_lstm_detector(train, config, valid=valid)

print("epoch  train_loss  valid_loss")
for e, tl, vl in zip(history.epochs, history.train_loss, history.valid_loss):
    if e % 5 == 0 or e == 1:
        print(f"{e:5d}  {tl:10.4f}  {vl:10.4f}")

# Each document becomes two index sequences: tokens and adjacent-token
# bigrams.  Index 0 is padding, index 1 is out-of-vocabulary.
uni, bi = detector.sequences(valid)
print(f"\nsequences: uni {uni.shape}, bi {bi.shape}")
print("first row (uni):", uni[0])

# Calibration ran on the validation split (the lstm default), so the
# decision threshold is a Youden midpoint rather than 0.5.
print(f"calibrated threshold: {detector.threshold:.4f}")

scores = predict_scores(detector.model, uni, bi)
acc = float((detector.predict(valid) == np.array(valid.labels())).mean())
print(f"validation accuracy {acc:.3f}; "
      f"score range [{scores.min():.3f}, {scores.max():.3f}]")

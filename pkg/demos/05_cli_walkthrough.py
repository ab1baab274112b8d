"""
The aidetect command line, end to end
=====================================

split -> train -> evaluate -> predict -> ensemble, all through main(),
leaving every artifact in a scratch directory for inspection.
"""

import json
import tempfile
from pathlib import Path

from aidetect.cli import main
from aidetect.corpus import save_corpus
from aidetect.embedding_io import write_embx
from synth import synth_corpus, synth_embeddings

work = Path(tempfile.mkdtemp())
corpus = synth_corpus(200, seed=5)
save_corpus(corpus, work / "corpus.csv")
write_embx(synth_embeddings(corpus, dim=16), work / "emb.embx")
(work / "fast.conf").write_text("epochs=20\nlr=0.01\n")

def run(*argv):
    argv = [str(a) for a in argv]
    print("$ aidetect", " ".join(argv))
    rc = main(argv)
    assert rc == 0, f"exit {rc}"

run("split", "--input", work / "corpus.csv", "--train-frac", "0.8",
    "--out-dir", work)

run("train", "--model", "logreg", "--train", work / "train.csv",
    "--config", work / "fast.conf", "--out", work / "logreg.json",
    "--history", work / "history.csv")

run("train", "--model", "distilbert-head", "--train", work / "train.csv",
    "--embeddings", work / "emb.embx", "--config", work / "fast.conf",
    "--out", work / "head.json")

run("evaluate", "--model", work / "logreg.json", "--test", work / "test.csv",
    "--report", work / "report.json", "--roc", work / "roc.csv")

run("predict", "--model", work / "logreg.json", "--input", work / "test.csv",
    "--out", work / "scores.csv")

# Odd member counts cannot tie; even ones need --allow-even and scores.
run("ensemble", "--models",
    f"{work / 'logreg.json'},{work / 'head.json'}", "--allow-even",
    "--input", work / "test.csv", "--embeddings", work / "emb.embx",
    "--out", work / "ensemble.csv", "--votes", work / "votes.csv")

report = json.loads((work / "report.json").read_text())
print(f"\nlogreg: accuracy {report['accuracy']:.3f}, AUC {report['auc']:.3f}")
print("scores.csv:", (work / "scores.csv").read_text().splitlines()[1])
print("votes.csv: ", (work / "votes.csv").read_text().splitlines()[0])
print(f"\nartifacts in {work}")

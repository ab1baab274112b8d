"""Command-line surface: split, train, evaluate, predict, ensemble.

Exit codes: 0 success, 1 I/O failure, 2 validation failure.  Logs go to
standard error; every data product goes to a file, so identical invocations
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import config as config_mod
from .config import MODEL_KINDS, config_help
from .container import load_detector, save_detector
from .corpus import load_corpus, save_corpus, split_corpus
from .embedding_io import read_embx
from .ensemble import ensemble_predict, export_votes
from .evaluation import auc, classification_report, emit_plot_data, roc_curve
from .pipelines import (HeadDetector, fit_head_detector, fit_logreg_detector,
                        fit_lstm_detector)

log = logging.getLogger("aidetect")

_HEAD_KINDS = ("bert-ngram", "bert-custom", "distilbert-head")


class CliValidationError(ValueError):
    pass


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_json(doc: dict, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")))
        fh.write("\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_split(args) -> int:
    corpus = load_corpus(args.input, format=args.format)
    train, test = split_corpus(corpus, args.train_frac, args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    train_path = os.path.join(args.out_dir, "train.csv")
    test_path = os.path.join(args.out_dir, "test.csv")
    save_corpus(train, train_path)
    save_corpus(test, test_path)
    log.info("wrote %d train rows to %s, %d test rows to %s",
             len(train), train_path, len(test), test_path)
    return 0


def _load_embeddings_or_fail(args, kind: str):
    if kind not in _HEAD_KINDS:
        return None
    if not args.embeddings:
        raise CliValidationError(f"model {kind!r} needs --embeddings")
    return read_embx(args.embeddings)


def cmd_train(args) -> int:
    kind = args.model
    raw = config_mod.parse_config_file(args.config) if args.config else {}
    cfg = config_mod.resolve(kind, raw)
    train = load_corpus(args.train)
    valid = load_corpus(args.valid) if args.valid else None

    if kind == "logreg":
        detector, history = fit_logreg_detector(
            train, config_mod.logreg_config(cfg), valid=valid,
            vocab_size=cfg["vocab_size"], min_freq=cfg["min_freq"],
            calibrate=cfg["calibrate"])
    elif kind == "lstm":
        detector, history = fit_lstm_detector(
            train, config_mod.lstm_config(cfg), valid=valid,
            vocab_size=cfg["vocab_size"], min_freq=cfg["min_freq"],
            bigram_vocab_size=cfg["bigram_vocab_size"],
            calibrate=cfg["calibrate"])
    else:
        embeddings = _load_embeddings_or_fail(args, kind)
        detector, history = fit_head_detector(
            kind, train, embeddings, config_mod.head_config(cfg), valid=valid,
            ngram_vocab_size=cfg.get("ngram_vocab_size", 5000),
            ngram_min_freq=cfg.get("ngram_min_freq", 2),
            ngram_min=cfg.get("ngram_min", 1), ngram_max=cfg.get("ngram_max", 4))

    save_detector(detector, args.out, config_record=cfg)
    if args.history:
        emit_plot_data(history, args.history)
    final_valid = (f", valid loss {history.valid_loss[-1]:.6f}"
                   if history.valid_loss else "")
    log.info("trained %s for %d epochs: train loss %.6f%s; model at %s",
             kind, len(history), history.train_loss[-1], final_valid, args.out)
    return 0


def _detector_input(detector, corpus, args):
    if isinstance(detector, HeadDetector):
        if not args.embeddings:
            raise CliValidationError(
                f"model {detector.kind!r} needs --embeddings")
        path = args.embeddings if isinstance(args.embeddings, str) \
            else args.embeddings[0]
        return (corpus, read_embx(path))
    return corpus


def cmd_evaluate(args) -> int:
    detector = load_detector(args.model)
    corpus = load_corpus(args.test)
    x = _detector_input(detector, corpus, args)
    scores = detector.predict_scores(x)
    preds = detector.predict(x)
    labels = corpus.labels()
    curve = roc_curve(scores, labels)
    report = classification_report(preds, labels, auc_value=auc(curve),
                                   threshold=detector.threshold)
    _write_json(report.to_json_dict(), args.report)
    if args.roc:
        emit_plot_data(curve, args.roc)
    log.info("accuracy %.4f, AUC %.4f; report at %s",
             report.accuracy, report.auc, args.report)
    return 0


def cmd_predict(args) -> int:
    detector = load_detector(args.model)
    corpus = load_corpus(args.input)
    x = _detector_input(detector, corpus, args)
    scores = detector.predict_scores(x)
    labels = detector.predict(x)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("doc_id,score,label\n")
        for doc_id, s, lab in zip(corpus.ids(), scores, labels):
            fh.write(f"{doc_id},{_fmt(s)},{int(lab)}\n")
    log.info("scored %d documents to %s", len(corpus), args.out)
    return 0


def cmd_ensemble(args) -> int:
    paths = [p for p in args.models.split(",") if p]
    if not paths:
        raise CliValidationError("--models needs at least one container path")
    if len(paths) % 2 == 0 and not args.allow_even:
        raise CliValidationError(
            f"{len(paths)} models can tie; pass --allow-even to accept the "
            "mean-score tie rule")
    detectors = [load_detector(p) for p in paths]
    corpus = load_corpus(args.input)

    sets_by_id = {}
    for path in args.embeddings or []:
        es = read_embx(path)
        if es.model_id in sets_by_id:
            raise CliValidationError(
                f"two --embeddings files claim model {es.model_id!r}")
        sets_by_id[es.model_id] = es

    inputs = []
    for detector in detectors:
        if isinstance(detector, HeadDetector):
            es = sets_by_id.get(detector.embedding_model_id)
            if es is None:
                raise CliValidationError(
                    f"no --embeddings file provides "
                    f"{detector.embedding_model_id!r} "
                    f"for a {detector.kind} member")
            inputs.append((corpus, es))
        else:
            inputs.append(corpus)

    ids = [f"m{i}_{d.kind}" for i, d in enumerate(detectors)]
    labels, vm = ensemble_predict(detectors, inputs, detector_ids=ids)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("doc_id,label\n")
        for doc_id, lab in zip(corpus.ids(), labels):
            fh.write(f"{doc_id},{int(lab)}\n")
    if args.votes:
        export_votes(vm, corpus.ids(), args.votes)
    log.info("ensembled %d models over %d documents to %s",
             len(detectors), len(corpus), args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aidetect",
        description="Train, evaluate, and ensemble AI-text detectors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="stratified train/test split")
    p.add_argument("--input", required=True, help="corpus file")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True,
                   help="directory for train.csv/test.csv")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser(
        "train", help="train one detector",
        epilog=config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--train", required=True, help="training corpus CSV")
    p.add_argument("--valid", help="validation corpus CSV")
    p.add_argument("--embeddings", help="EMBX file (head models)")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", required=True, help="model container path")
    p.add_argument("--history", help="loss-history CSV path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a test corpus and report")
    p.add_argument("--model", required=True, help="model container")
    p.add_argument("--test", required=True, help="test corpus CSV")
    p.add_argument("--embeddings", help="EMBX file (head models)")
    p.add_argument("--report", required=True, help="report JSON path")
    p.add_argument("--roc", help="ROC CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="write per-document scores and labels")
    p.add_argument("--model", required=True, help="model container")
    p.add_argument("--input", required=True, help="corpus CSV")
    p.add_argument("--embeddings", help="EMBX file (head models)")
    p.add_argument("--out", required=True, help="doc_id,score,label CSV path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ensemble", help="max-vote several trained models")
    p.add_argument("--models", required=True,
                   help="comma-separated container paths")
    p.add_argument("--input", required=True, help="corpus CSV")
    p.add_argument("--embeddings", action="append",
                   help="EMBX file; repeat for multiple backbones")
    p.add_argument("--out", required=True, help="doc_id,label CSV path")
    p.add_argument("--votes", help="per-detector vote CSV path")
    p.add_argument("--allow-even", action="store_true",
                   help="accept an even model count (mean-score tie rule)")
    p.set_defaults(func=cmd_ensemble)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        log.error("%s", exc)
        return 1
    except (ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())

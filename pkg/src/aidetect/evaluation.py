"""ROC curves, AUC, Youden thresholds, classification reports, plot-data CSVs.

Threshold semantics are "score >= t -> AI" everywhere.  The ROC curve starts
at a (0, 0) sentinel point with threshold +inf (classify nothing as AI) and
its last point is always (1, 1) at the minimum distinct score.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .numerics import LossHistory

HUMAN_NAME = "Human"
AI_NAME = "AI"


class SingleClassError(ValueError):
    pass


class LengthMismatchError(ValueError):
    pass


class DegenerateMetricWarning(UserWarning):
    """A metric hit a 0/0 case or a curve was too flat to pick a threshold."""


def _fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        if not (len(self.fpr) == len(self.tpr) == len(self.thresholds)):
            raise LengthMismatchError("fpr/tpr/thresholds lengths differ")
        for arr in (self.fpr, self.tpr):
            if np.any(arr < 0) or np.any(arr > 1):
                raise ValueError("rates must lie in [0, 1]")
            if np.any(np.diff(arr) < 0):
                raise ValueError("rates must be non-decreasing")

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist(),
                        self.thresholds.tolist()))

    def __len__(self):
        return len(self.fpr)


def roc_curve(scores, labels) -> RocCurve:
    """One point per distinct score, scores descending, plus the (0,0) sentinel."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape:
        raise LengthMismatchError(f"{scores.shape} scores vs {labels.shape} labels")
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise SingleClassError("need both classes to draw a curve")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # last index of every tie group = the cumulative counts at that threshold
    last = np.flatnonzero(np.diff(s))
    last = np.append(last, s.size - 1)
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    return RocCurve(fpr=np.concatenate(([0.0], fp / neg)),
                    tpr=np.concatenate(([0.0], tp / pos)),
                    thresholds=np.concatenate(([np.inf], s[last])))


def auc(curve: RocCurve) -> float:
    dx = np.diff(curve.fpr)
    mid = curve.tpr[1:] + curve.tpr[:-1]
    return float(0.5 * np.sum(dx * mid))


def youden_threshold(curve: RocCurve) -> float:
    """Threshold maximizing J = TPR - FPR; ties break toward smaller FPR.

    The returned value sits halfway between the optimal distinct score and the
    next score below it, so small perturbations of either group don't flip the
    decision.  Degenerate curves (single distinct score) fall back to 0.5.
    """
    if len(curve) <= 2:
        warnings.warn("all scores identical; falling back to threshold 0.5",
                      DegenerateMetricWarning, stacklevel=2)
        return 0.5
    j = curve.tpr - curve.fpr
    best = int(np.argmax(j))  # argmax keeps the first = smallest-fpr tie
    if best == 0:
        # sentinel wins: classify nothing as AI; any value above every score works
        return float(curve.thresholds[1] + 1.0)
    t = float(curve.thresholds[best])
    if best + 1 < len(curve):
        return 0.5 * (t + float(curve.thresholds[best + 1]))
    return t


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def as_dict(self):
        return {"precision": self.precision, "recall": self.recall,
                "f1": self.f1, "support": self.support}


@dataclass
class EvalReport:
    accuracy: float
    per_class: dict[str, ClassMetrics]
    macro_avg: ClassMetrics
    weighted_avg: ClassMetrics
    confusion: np.ndarray  # rows = true, cols = predicted, order (Human, AI)
    auc: float | None = None
    threshold: float | None = None

    def to_json_dict(self) -> dict:
        d = {
            "accuracy": self.accuracy,
            "classes": {k: v.as_dict() for k, v in self.per_class.items()},
            "macro_avg": self.macro_avg.as_dict(),
            "weighted_avg": self.weighted_avg.as_dict(),
            "confusion": self.confusion.tolist(),
        }
        if self.auc is not None:
            d["auc"] = self.auc
        if self.threshold is not None:
            d["threshold"] = self.threshold
        return d


def _safe_div(num: float, den: float, what: str) -> float:
    if den == 0.0:
        warnings.warn(f"{what}: 0/0 reported as 0", DegenerateMetricWarning,
                      stacklevel=3)
        return 0.0
    return num / den


def classification_report(pred, labels, auc_value: float | None = None,
                          threshold: float | None = None) -> EvalReport:
    pred = np.asarray(pred, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if pred.shape != labels.shape:
        raise LengthMismatchError(f"{pred.shape} predictions vs {labels.shape} labels")
    if pred.size == 0:
        raise ValueError("empty inputs")
    for arr, what in ((pred, "predictions"), (labels, "labels")):
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError(f"{what} must be 0 or 1")

    confusion = np.zeros((2, 2), dtype=np.int64)
    np.add.at(confusion, (labels, pred), 1)

    per_class: dict[str, ClassMetrics] = {}
    for c, name in ((0, HUMAN_NAME), (1, AI_NAME)):
        tp = int(confusion[c, c])
        p = _safe_div(tp, int(confusion[:, c].sum()), f"precision[{name}]")
        r = _safe_div(tp, int(confusion[c, :].sum()), f"recall[{name}]")
        f1 = 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)
        per_class[name] = ClassMetrics(p, r, f1, int(confusion[c, :].sum()))

    h, a = per_class[HUMAN_NAME], per_class[AI_NAME]
    total = pred.size
    macro = ClassMetrics(*(0.5 * (getattr(h, f) + getattr(a, f))
                           for f in ("precision", "recall", "f1")), support=total)
    weighted = ClassMetrics(
        *((h.support * getattr(h, f) + a.support * getattr(a, f)) / total
          for f in ("precision", "recall", "f1")), support=total)

    return EvalReport(accuracy=float(np.trace(confusion)) / total,
                      per_class=per_class, macro_avg=macro,
                      weighted_avg=weighted, confusion=confusion,
                      auc=auc_value, threshold=threshold)


# ---------------------------------------------------------------------------
# Plot-data emission
# ---------------------------------------------------------------------------

def _roc_rows(curve: RocCurve):
    yield "fpr,tpr,threshold"
    for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds):
        yield f"{_fmt(f)},{_fmt(t)},{_fmt(th)}"


def _loss_rows(history: LossHistory):
    yield "epoch,train_loss,valid_loss"
    has_valid = len(history.valid_loss) == len(history.epochs)
    for i, e in enumerate(history.epochs):
        va = _fmt(history.valid_loss[i]) if has_valid else ""
        yield f"{e},{_fmt(history.train_loss[i])},{va}"


def _report_rows(report: EvalReport):
    yield "metric,class,value"
    yield f"accuracy,,{_fmt(report.accuracy)}"
    for name in (HUMAN_NAME, AI_NAME):
        m = report.per_class[name]
        for f in ("precision", "recall", "f1", "support"):
            yield f"{f},{name},{_fmt(getattr(m, f))}"
    for label, m in (("macro_avg", report.macro_avg),
                     ("weighted_avg", report.weighted_avg)):
        for f in ("precision", "recall", "f1"):
            yield f"{f},{label},{_fmt(getattr(m, f))}"
    for i, true_name in enumerate((HUMAN_NAME, AI_NAME)):
        for j, pred_name in enumerate((HUMAN_NAME, AI_NAME)):
            yield f"confusion,{true_name}->{pred_name},{report.confusion[i, j]}"
    if report.auc is not None:
        yield f"auc,,{_fmt(report.auc)}"
    if report.threshold is not None:
        yield f"threshold,,{_fmt(report.threshold)}"


def emit_plot_data(obj, path) -> None:
    """Write a CSV for a RocCurve, LossHistory, or EvalReport.

    Formatting is deterministic: 17 significant digits, '.' decimals, LF line
    endings, so identical inputs produce byte-identical files.
    """
    if isinstance(obj, RocCurve):
        rows = _roc_rows(obj)
    elif isinstance(obj, LossHistory):
        rows = _loss_rows(obj)
    elif isinstance(obj, EvalReport):
        rows = _report_rows(obj)
    else:
        raise TypeError(f"cannot emit plot data for {type(obj).__name__}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(row + "\n")

"""Max-voting combination of detector outputs.

Votes are hard labels (score >= threshold -> AI); each document's final label
is the majority vote.  Even detector counts can tie, so they require scores:
a tied document goes to AI iff its mean score is >= 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EvenKWithoutScoresError(ValueError):
    pass


class VoteShapeError(ValueError):
    pass


class DetectorError(RuntimeError):
    """A member model failed; carries which one."""

    def __init__(self, detector_id: str, cause: BaseException):
        super().__init__(f"detector {detector_id!r} failed: {cause}")
        self.detector_id = detector_id


@dataclass
class VoteMatrix:
    votes: np.ndarray                 # k x n, values in {0, 1}
    detector_ids: list[str]
    scores: np.ndarray | None = None  # k x n, open interval (0, 1)

    def __post_init__(self):
        self.votes = np.asarray(self.votes, dtype=np.int64)
        if self.votes.ndim != 2:
            raise VoteShapeError("votes must be k x n")
        if np.any((self.votes != 0) & (self.votes != 1)):
            raise VoteShapeError("votes must be 0 or 1")
        if len(self.detector_ids) != self.votes.shape[0]:
            raise VoteShapeError(
                f"{len(self.detector_ids)} ids vs {self.votes.shape[0]} vote rows")
        if self.scores is not None:
            self.scores = np.asarray(self.scores, dtype=np.float64)
            if self.scores.shape != self.votes.shape:
                raise VoteShapeError(
                    f"scores {self.scores.shape} vs votes {self.votes.shape}")

    @property
    def k(self):
        return self.votes.shape[0]

    @property
    def n(self):
        return self.votes.shape[1]


def max_vote(vm: VoteMatrix) -> np.ndarray:
    if vm.k < 1:
        raise VoteShapeError("need at least one detector")
    if vm.k % 2 == 0 and vm.scores is None:
        raise EvenKWithoutScoresError(
            "even detector counts can tie; scores are required")
    ayes = vm.votes.sum(axis=0)
    labels = (2 * ayes > vm.k).astype(np.int64)
    if vm.k % 2 == 0:
        tied = 2 * ayes == vm.k
        if np.any(tied):
            labels[tied] = (vm.scores[:, tied].mean(axis=0) >= 0.5).astype(np.int64)
    return labels


def ensemble_predict(models, inputs, detector_ids=None,
                     threshold: float = 0.5) -> tuple[np.ndarray, VoteMatrix]:
    """Score every model on its own input, vote, and keep the ballot.

    ``models[i]`` must offer predict_scores(inputs[i]) -> probabilities; all
    models must cover the same documents in the same order.  Votes come from
    each model's own predict() when it has one (so calibrated per-model
    thresholds apply), else from ``score >= threshold``.  Member failures
    surface as DetectorError naming the culprit.
    """
    if len(models) != len(inputs):
        raise VoteShapeError(f"{len(models)} models vs {len(inputs)} input sets")
    if detector_ids is None:
        detector_ids = [f"detector_{i}" for i in range(len(models))]
    if len(detector_ids) != len(models):
        raise VoteShapeError(f"{len(detector_ids)} ids vs {len(models)} models")

    score_rows, vote_rows = [], []
    for det_id, model, x in zip(detector_ids, models, inputs):
        try:
            s = np.asarray(model.predict_scores(x), dtype=np.float64)
            if hasattr(model, "predict"):
                v = np.asarray(model.predict(x), dtype=np.int64)
            else:
                v = (s >= threshold).astype(np.int64)
        except Exception as exc:  # annotate, keep the original as __cause__
            raise DetectorError(det_id, exc) from exc
        if s.ndim != 1 or v.shape != s.shape:
            raise DetectorError(det_id, VoteShapeError("scores must be 1-D"))
        score_rows.append(s)
        vote_rows.append(v)
    n = score_rows[0].shape[0]
    for det_id, s in zip(detector_ids, score_rows):
        if s.shape[0] != n:
            raise DetectorError(det_id, VoteShapeError(f"{s.shape[0]} docs vs {n}"))

    vm = VoteMatrix(votes=np.vstack(vote_rows),
                    detector_ids=list(detector_ids),
                    scores=np.vstack(score_rows))
    return max_vote(vm), vm


def export_votes(vm: VoteMatrix, doc_ids, path) -> None:
    """Audit CSV: one row per document, one column per detector, plus `final`."""
    if len(doc_ids) != vm.n:
        raise VoteShapeError(f"{len(doc_ids)} doc ids vs {vm.n} columns")
    final = max_vote(vm)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("doc_id," + ",".join(vm.detector_ids) + ",final\n")
        for j, doc_id in enumerate(doc_ids):
            row = ",".join(str(int(v)) for v in vm.votes[:, j])
            fh.write(f"{doc_id},{row},{int(final[j])}\n")

"""Fairness and accuracy metrics over predictions and label vectors."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class OutcomeRecord:
    image_id: str
    y_true: int
    y_pred: int
    groups: frozenset = frozenset()
    score: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "groups", frozenset(self.groups))
        if self.y_true not in (0, 1) or self.y_pred not in (0, 1):
            raise ValidationError(f"record {self.image_id!r}: y_true/y_pred must be 0 or 1")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"record {self.image_id!r}: score outside [0, 1]")


@dataclass(frozen=True)
class LabelVectorRecord:
    image_id: str
    labels: tuple
    attribute: int

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.attribute not in (0, 1):
            raise ValidationError(f"record {self.image_id!r}: attribute must be 0 or 1")


def eod_from_tpr(tprs: Sequence[float]) -> float:
    """Sample standard deviation (n - 1) of per-group true positive rates."""
    t = np.asarray(tprs, dtype=float)
    if t.size == 0:
        raise ValidationError("no groups")
    if t.size == 1 or (t == t[0]).all():
        return 0.0
    return float(t.std(ddof=1))


def equalized_odds_disparity(records: Iterable[OutcomeRecord]) -> tuple[float, dict]:
    """Disparity in equalized odds across co-occurring groups.

    Returns the EoD value and the per-group TPR dict (groups sorted).
    """
    positives: dict = defaultdict(int)
    hits: dict = defaultdict(int)
    groups_seen: set = set()
    for r in records:
        groups_seen |= r.groups
        if r.y_true != 1:
            continue
        for g in r.groups:
            positives[g] += 1
            hits[g] += r.y_pred
    if not groups_seen:
        raise ValidationError("no groups referenced by any record")
    for g in sorted(groups_seen, key=str):
        if positives[g] == 0:
            raise ValidationError(f"group {g!r} has no positive records")
    tpr = {g: hits[g] / positives[g] for g in sorted(groups_seen, key=str)}
    return eod_from_tpr(list(tpr.values())), tpr


@dataclass
class AttackerModel:
    """Lookup attacker: majority attribute per label vector, global majority otherwise."""

    table: dict
    fallback: int
    fit_counts: dict = field(default_factory=dict)

    def predict(self, labels) -> int:
        return self.table.get(tuple(labels), self.fallback)


def fit_attacker(train: Sequence[LabelVectorRecord]) -> AttackerModel:
    if not train:
        raise ValidationError("attacker needs a nonempty training set")
    width = len(train[0].labels)
    tallies: dict = defaultdict(lambda: [0, 0])
    overall = [0, 0]
    for r in train:
        if len(r.labels) != width:
            raise ValidationError(f"label vector length mismatch at {r.image_id!r}")
        tallies[r.labels][r.attribute] += 1
        overall[r.attribute] += 1
    table = {v: int(c[1] > c[0]) for v, c in tallies.items()}
    return AttackerModel(
        table=table,
        fallback=int(overall[1] > overall[0]),
        fit_counts={v: tuple(c) for v, c in tallies.items()},
    )


def leakage(data: Sequence[LabelVectorRecord], attacker: AttackerModel) -> float:
    """Fraction of records whose attribute the attacker recovers from the labels."""
    if not data:
        raise ValidationError("leakage of an empty dataset")
    if attacker.fit_counts:
        width = len(next(iter(attacker.fit_counts)))
        for r in data:
            if len(r.labels) != width:
                raise ValidationError(f"label vector length mismatch at {r.image_id!r}")
    hits = sum(attacker.predict(r.labels) == r.attribute for r in data)
    return hits / len(data)


def binarize(records: Sequence[LabelVectorRecord], threshold: float = 0.5) -> list[LabelVectorRecord]:
    """Threshold score vectors into 0/1 label vectors (score >= threshold -> 1)."""
    return [
        LabelVectorRecord(r.image_id, tuple(int(float(v) >= threshold) for v in r.labels), r.attribute)
        for r in records
    ]


def _split(records, holdout: float, seed: int):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(records))
    n_test = max(1, int(round(holdout * len(records))))
    test = [records[i] for i in perm[:n_test]]
    train = [records[i] for i in perm[n_test:]] or test
    return train, test


def dataset_leakage(records, holdout: float | None = None, seed: int = 0) -> float:
    """Leakage of an attacker trained on ``records``; in-sample unless ``holdout`` is set."""
    records = list(records)
    if holdout is None:
        return leakage(records, fit_attacker(records))
    train, test = _split(records, holdout, seed)
    return leakage(test, fit_attacker(train))


def bias_amplification(
    gt: Sequence[LabelVectorRecord],
    pred: Sequence[LabelVectorRecord],
    threshold: float | None = 0.5,
    holdout: float | None = None,
    seed: int = 0,
) -> float:
    """Model leakage minus dataset leakage (``lambda_M - lambda_D``), as a fraction.

    ``pred`` label vectors are thresholded at ``threshold`` (pass ``None`` if
    they are already binary). Attributes always come from ``gt``; records are
    paired by image id.
    """
    gt_by_id = {r.image_id: r for r in gt}
    if len(gt_by_id) != len(gt):
        raise ValidationError("duplicate image id in ground truth")
    pred_ids = [r.image_id for r in pred]
    if set(pred_ids) != set(gt_by_id) or len(pred_ids) != len(gt_by_id):
        raise ValidationError("ground truth and prediction image ids differ")
    if threshold is not None:
        pred = binarize(pred, threshold)
    pred = [LabelVectorRecord(r.image_id, r.labels, gt_by_id[r.image_id].attribute) for r in pred]
    ordered_gt = [gt_by_id[i] for i in pred_ids]
    return dataset_leakage(pred, holdout, seed) - dataset_leakage(ordered_gt, holdout, seed)


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def representational_bias(pairs: Iterable[tuple[Hashable, Hashable]]) -> float:
    """Plug-in ``I(Z; Y) / H(Y)`` over observed ``(z, y)`` symbol pairs.

    Returns 0 when ``Y`` is constant.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValidationError("representational bias of an empty sample")
    joint = Counter(pairs)
    z_marg = Counter(z for z, _ in pairs)
    y_marg = Counter(y for _, y in pairs)
    h_y = _entropy(np.array(list(y_marg.values()), dtype=float))
    if h_y == 0:
        return 0.0
    h_z = _entropy(np.array(list(z_marg.values()), dtype=float))
    h_zy = _entropy(np.array(list(joint.values()), dtype=float))
    mi = max(h_z + h_y - h_zy, 0.0)
    return float(min(mi / h_y, 1.0))


def average_precision(scored: Sequence[tuple[float, int]]) -> float:
    """Mean precision at each positive, ranking by score descending (stable)."""
    if not scored:
        raise ValidationError("average precision of an empty list")
    scores = np.array([s for s, _ in scored], dtype=float)
    truth = np.array([int(y) for _, y in scored])
    if truth.sum() == 0:
        raise ValidationError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    hits = truth[order]
    precision = np.cumsum(hits) / np.arange(1, hits.size + 1)
    return float(precision[hits == 1].mean())


def mean_average_precision(per_category: dict) -> tuple[float, dict]:
    ap = {c: average_precision(v) for c, v in per_category.items()}
    return float(np.mean(list(ap.values()))), ap


def f1_score(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    tp = int((t & p).sum())
    denom = 2 * tp + int((t & ~p).sum()) + int((~t & p).sum())
    return 0.0 if denom == 0 else 2 * tp / denom

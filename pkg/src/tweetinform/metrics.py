"""Binary classification metrics with INFORMATIVE as the positive class."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import ClassLabel


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts for the positive (INFORMATIVE) class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion matrix counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    def f1(self) -> float:
        p, r = self.precision(), self.recall()
        return 2.0 * p * r / (p + r) if p + r else 0.0


def confusion(
    preds: Sequence[ClassLabel], golds: Sequence[ClassLabel]
) -> ConfusionMatrix:
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise ValueError("cannot evaluate an empty prediction list")
    tp = fp = fn = tn = 0
    positive = ClassLabel.INFORMATIVE
    for pred, gold in zip(preds, golds):
        if gold == positive:
            if pred == positive:
                tp += 1
            else:
                fn += 1
        else:
            if pred == positive:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def f1_informative(
    preds: Sequence[ClassLabel], golds: Sequence[ClassLabel]
) -> tuple[float, ConfusionMatrix]:
    """F1 on the INFORMATIVE class, the competition metric.

    Degenerate cases use the zero convention: precision or recall with a zero
    denominator counts as 0, and F1 is 0 when precision + recall is 0.
    """
    matrix = confusion(preds, golds)
    return matrix.f1(), matrix

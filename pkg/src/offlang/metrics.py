"""Evaluation metrics: confusion matrix, per-class F1, macro-F1.

Positive class is OFFENSIVE throughout. All functions are pure and safe for
concurrent use.

Degenerate-class convention: when a class has zero true instances and zero
predicted instances, its F1 is defined as 0. This matches the dominant
evaluation-library convention and matters on tiny fixtures, where one class
may be entirely absent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import Label
from .errors import ContractError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with OFFENSIVE as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ContractError(f"confusion matrix cell {name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}

    @classmethod
    def from_dict(cls, data: dict) -> "ConfusionMatrix":
        return cls(tp=data["tp"], fp=data["fp"], fn=data["fn"], tn=data["tn"])


@dataclass(frozen=True)
class MetricsReport:
    macro_f1: float
    f1_offensive: float
    f1_not_offensive: float
    confusion: ConfusionMatrix
    n: int

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "f1_offensive": self.f1_offensive,
            "f1_not_offensive": self.f1_not_offensive,
            "confusion": self.confusion.to_dict(),
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(
            macro_f1=data["macro_f1"],
            f1_offensive=data["f1_offensive"],
            f1_not_offensive=data["f1_not_offensive"],
            confusion=ConfusionMatrix.from_dict(data["confusion"]),
            n=data["n"],
        )


def confusion_matrix(
    gold: Sequence[Label], predicted: Sequence[Label]
) -> ConfusionMatrix:
    if len(gold) != len(predicted):
        raise ContractError(
            f"gold and predicted lengths differ: {len(gold)} vs {len(predicted)}"
        )
    if len(gold) == 0:
        raise ContractError("cannot evaluate empty label sequences")
    tp = fp = fn = tn = 0
    for g, p in zip(gold, predicted):
        if g is Label.OFFENSIVE:
            if p is Label.OFFENSIVE:
                tp += 1
            else:
                fn += 1
        else:
            if p is Label.OFFENSIVE:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def f1_binary_class(matrix: ConfusionMatrix, positive_class: Label) -> float:
    """F1 of one class. For NOT_OFFENSIVE the cell roles are swapped."""
    if positive_class is Label.OFFENSIVE:
        tp, fp, fn = matrix.tp, matrix.fp, matrix.fn
    else:
        tp, fp, fn = matrix.tn, matrix.fn, matrix.fp
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2 * tp / denom


def macro_f1(gold: Sequence[Label], predicted: Sequence[Label]) -> MetricsReport:
    """Unweighted mean of the two per-class F1 scores, with full report."""
    matrix = confusion_matrix(gold, predicted)
    f1_off = f1_binary_class(matrix, Label.OFFENSIVE)
    f1_not = f1_binary_class(matrix, Label.NOT_OFFENSIVE)
    return MetricsReport(
        macro_f1=(f1_off + f1_not) / 2,
        f1_offensive=f1_off,
        f1_not_offensive=f1_not,
        confusion=matrix,
        n=matrix.total,
    )

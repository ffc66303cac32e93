"""Confusion matrices and agreement metrics (precision/recall/F1, kappa, MCC)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Hashable, Sequence

import numpy as np

from ..errors import DegenerateMatrix, LengthMismatch, UnknownLabel


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]  # rows = truth, columns = prediction

    def __post_init__(self) -> None:
        k = len(self.labels)
        if len(self.counts) != k or any(len(row) != k for row in self.counts):
            raise ValueError("confusion matrix must be square with one row per label")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_array(cls, labels: Sequence[str], counts) -> "ConfusionMatrix":
        return cls(tuple(str(l) for l in labels), tuple(tuple(int(c) for c in row) for row in counts))

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    def array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64).reshape(len(self.labels), len(self.labels))


def confusion(truth: Sequence[Hashable], pred: Sequence[Hashable],
              label_order: Sequence[Hashable]) -> ConfusionMatrix:
    if len(truth) != len(pred):
        raise LengthMismatch(f"{len(truth)} truths vs {len(pred)} predictions")
    index = {str(l): i for i, l in enumerate(label_order)}
    k = len(index)
    counts = [[0] * k for _ in range(k)]
    for t, p in zip(truth, pred):
        t, p = str(t), str(p)
        for v in (t, p):
            if v not in index:
                raise UnknownLabel(f"label {v!r} not in {list(index)}")
        counts[index[t]][index[p]] += 1
    return ConfusionMatrix.from_array(list(index), counts)


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[str, ClassScores]
    accuracy: float
    macro_f1: float
    weighted_f1: float
    kappa: float
    mcc: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self, title: str = "") -> str:
        lines = [title] if title else []
        lines.append(f"{'class':<14}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>9}")
        for label, s in self.per_class.items():
            lines.append(f"{label:<14}{s.precision:>10.3f}{s.recall:>10.3f}{s.f1:>10.3f}{s.support:>9d}")
        lines.append(f"accuracy {self.accuracy:.3f}  macro F1 {self.macro_f1:.3f}  "
                     f"weighted F1 {self.weighted_f1:.3f}  kappa {self.kappa:.3f}  MCC {self.mcc:.3f}  n={self.n}")
        return "\n".join(lines)


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


def classification_metrics(cm: ConfusionMatrix) -> MetricsReport:
    c = cm.array().astype(float)
    n = c.sum()
    if n <= 0:
        raise DegenerateMatrix("confusion matrix has no counts")
    tp = np.diag(c)
    row = c.sum(axis=1)  # truth totals
    col = c.sum(axis=0)  # prediction totals
    per_class = {}
    f1s = []
    for i, label in enumerate(cm.labels):
        p = _ratio(tp[i], col[i])
        r = _ratio(tp[i], row[i])
        f = _ratio(2 * p * r, p + r)
        f1s.append(f)
        per_class[label] = ClassScores(p, r, f, int(row[i]))
    accuracy = tp.sum() / n
    p_e = float((row * col).sum()) / (n * n)
    kappa = 1.0 if p_e == 1.0 else (accuracy - p_e) / (1 - p_e)
    # multiclass MCC in covariance form
    cov_xy = tp.sum() * n - float((row * col).sum())
    cov_xx = n * n - float((col * col).sum())
    cov_yy = n * n - float((row * row).sum())
    denom = math.sqrt(cov_xx * cov_yy)
    mcc = cov_xy / denom if denom else 0.0
    weighted = float(np.dot(f1s, row) / row.sum())
    return MetricsReport(per_class, float(accuracy), float(np.mean(f1s)), weighted,
                         float(kappa), float(mcc), int(n))

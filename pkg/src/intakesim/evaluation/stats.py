"""Rank and reliability statistics: AUC, Pearson r, ICC(2,1), Mann-Whitney U, Cohen's d."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

from ..errors import DegenerateLabels, InsufficientData, LengthMismatch


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """P(score of a positive > score of a negative), ties counted half, via average ranks."""
    if len(scores) != len(labels):
        raise LengthMismatch(f"{len(scores)} scores vs {len(labels)} labels")
    y = np.asarray(labels, dtype=int)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos + n_neg != len(y):
        raise ValueError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUC needs both classes present")
    ranks = sps.rankdata(np.asarray(scores, dtype=float))
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)} values")
    if len(x) < 2:
        raise InsufficientData("Pearson r needs at least 2 pairs")
    a = np.asarray(x, dtype=float) - np.mean(x)
    b = np.asarray(y, dtype=float) - np.mean(y)
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0:
        raise InsufficientData("Pearson r is undefined for a constant series")
    return max(-1.0, min(1.0, float(a @ b) / denom))


def icc_two_way(scores) -> float:
    """ICC(2,1): two-way random effects, absolute agreement, single rater.

    *scores* is a raters x items matrix with no missing cells.
    """
    m = np.asarray(scores, dtype=float)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 2:
        raise InsufficientData("need at least 2 raters and 2 items")
    if np.isnan(m).any():
        raise InsufficientData("matrix has missing cells")
    y = m.T  # items x raters
    n, k = y.shape
    grand = y.mean()
    ss_items = k * ((y.mean(axis=1) - grand) ** 2).sum()
    ss_raters = n * ((y.mean(axis=0) - grand) ** 2).sum()
    ss_total = ((y - grand) ** 2).sum()
    ms_items = ss_items / (n - 1)
    ms_raters = ss_raters / (k - 1)
    ms_error = (ss_total - ss_items - ss_raters) / ((n - 1) * (k - 1))
    denom = ms_items + (k - 1) * ms_error + k * (ms_raters - ms_error) / n
    if denom == 0:
        raise InsufficientData("ICC undefined: no variance in the matrix")
    return float((ms_items - ms_error) / denom)


@dataclass(frozen=True)
class GroupComparison:
    u: float
    p_value: float
    cohens_d: float
    n_a: int
    n_b: int


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) < 2 or len(b) < 2:
        raise InsufficientData("Cohen's d needs at least 2 values per group")
    va, vb = np.var(a, ddof=1), np.var(b, ddof=1)
    pooled = math.sqrt(((len(a) - 1) * va + (len(b) - 1) * vb) / (len(a) + len(b) - 2))
    if pooled == 0:
        raise InsufficientData("Cohen's d undefined with zero pooled variance")
    return float((np.mean(a) - np.mean(b)) / pooled)


def compare_groups(a: Sequence[float], b: Sequence[float]) -> GroupComparison:
    """Two-sided Mann-Whitney U (normal approximation) plus Cohen's d."""
    res = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
    return GroupComparison(float(res.statistic), float(res.pvalue), cohens_d(a, b), len(a), len(b))

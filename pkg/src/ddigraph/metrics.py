"""Binary classification metrics: ROC-AUC, F1, AUPR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ddigraph.errors import EmptyInput, SingleClass, ShapeMismatch


@dataclass(frozen=True)
class Metrics:
    roc_auc: float
    f1: float
    aupr: float
    threshold: float = 0.5

    def line(self) -> str:
        return f"roc_auc={self.roc_auc:.6f} f1={self.f1:.6f} aupr={self.aupr:.6f}"


def _validate(scores, labels):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise ShapeMismatch(f"{s.size} scores vs {y.size} labels")
    if s.size == 0:
        raise EmptyInput("no scores given")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return s, y.astype(np.int64)


def _both_classes(y):
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise SingleClass("ROC-AUC and AUPR need both classes present")
    return n_pos, y.size - n_pos


def roc_auc_pairwise(scores, labels) -> float:
    """Fraction of (positive, negative) pairs ranked correctly, ties = 1/2."""
    s, y = _validate(scores, labels)
    n_pos, n_neg = _both_classes(y)
    neg = np.sort(s[y == 0])
    pos = s[y == 1]
    below = np.searchsorted(neg, pos, side="left")
    not_above = np.searchsorted(neg, pos, side="right")
    wins = below.sum() + 0.5 * (not_above - below).sum()
    return float(wins / (n_pos * n_neg))


def roc_curve(scores, labels):
    """``(fpr, tpr, thresholds)`` with one point per distinct score, plus (0, 0)."""
    s, y = _validate(scores, labels)
    n_pos, n_neg = _both_classes(y)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of each run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    return fpr, tpr, np.r_[np.inf, s[ends]]


def roc_auc_trapezoid(scores, labels) -> float:
    fpr, tpr, _ = roc_curve(scores, labels)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def precision_recall_curve(scores, labels):
    """``(precision, recall, thresholds)`` at each distinct score, descending."""
    s, y = _validate(scores, labels)
    n_pos, _ = _both_classes(y)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(y)[ends]
    precision = tp / (ends + 1)
    recall = tp / n_pos
    return precision, recall, s[ends]


def average_precision(scores, labels) -> float:
    """Step-wise AUPR: sum over thresholds of (recall gain) x precision there."""
    precision, recall, _ = precision_recall_curve(scores, labels)
    gains = np.diff(np.r_[0.0, recall])
    return float(np.sum(gains * precision))


def f1_score(scores, labels, threshold: float = 0.5) -> float:
    s, y = _validate(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def compute_metrics(scores, labels, threshold: float = 0.5) -> Metrics:
    return Metrics(
        roc_auc=roc_auc_pairwise(scores, labels),
        f1=f1_score(scores, labels, threshold),
        aupr=average_precision(scores, labels),
        threshold=threshold,
    )

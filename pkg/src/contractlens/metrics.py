"""Binary classification metrics with rank-statistic AUC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    recall: float
    precision: float
    f1: float
    auc: float

    def as_csv_fields(self) -> str:
        return (f"{self.accuracy:.6f},{self.recall:.6f},"
                f"{self.precision:.6f},{self.f1:.6f}")


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks; tied scores share the average of their rank span."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def rank_auc(scores, labels) -> float:
    """Mann-Whitney AUC; 0.5 for degenerate single-class inputs."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = _average_ranks(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate_scores(scores, labels, threshold: float) -> Metrics:
    """Confusion metrics at prediction = (score > threshold), plus AUC."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if len(scores) == 0:
        raise ValueError("cannot evaluate an empty test set")
    preds = scores > threshold
    tp = int(np.sum(preds & labels))
    tn = int(np.sum(~preds & ~labels))
    fp = int(np.sum(preds & ~labels))
    fn = int(np.sum(~preds & labels))
    accuracy = (tp + tn) / len(labels)
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if precision + recall else 0.0
    return Metrics(accuracy=accuracy, recall=recall, precision=precision,
                   f1=f1, auc=rank_auc(scores, labels))

"""Classification and regression metrics implemented from scratch.

roc_auc is the Mann-Whitney statistic with half credit for ties, computed
from ranks; it agrees bit-for-bit with exhaustive pair counting.  pr_auc
uses the average-precision convention (step curve, no interpolation), which
can differ from trapezoidal PR areas by a few points on tiny sets.
"""

from __future__ import annotations

import numpy as np

from .errors import UndefinedMetricError


def _as_labeled(labels, scores) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise ValueError("labels and scores must be 1-D and the same length")
    if labels.size == 0:
        raise ValueError("need at least one sample")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    return labels.astype(np.int8), scores


def _pos_rank_sum(labels: np.ndarray, scores: np.ndarray) -> float:
    """Sum of 1-based ranks of the positives, averaging ranks across ties."""
    order = np.argsort(scores, kind="quicksort")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    n = scores.size
    if not (sorted_scores[1:] == sorted_scores[:-1]).any():
        # No ties: ordinal ranks are the average ranks.
        return float(np.dot(sorted_labels, np.arange(1.0, n + 1.0)))
    idx = np.arange(n)
    new_run = np.empty(n, dtype=bool)
    new_run[0] = True
    new_run[1:] = sorted_scores[1:] != sorted_scores[:-1]
    run_start = np.maximum.accumulate(np.where(new_run, idx, 0))
    last_in_run = np.empty(n, dtype=bool)
    last_in_run[-1] = True
    last_in_run[:-1] = new_run[1:]
    run_end = np.minimum.accumulate(np.where(last_in_run, idx, n)[::-1])[::-1]
    midranks = (run_start + run_end) / 2.0 + 1.0
    return float(np.dot(sorted_labels, midranks))


def roc_auc(labels, scores) -> float:
    """P(score_pos > score_neg) + 0.5 * P(tie)."""
    labels, scores = _as_labeled(labels, scores)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("roc_auc needs both classes present")
    u = _pos_rank_sum(labels, scores) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def roc_auc_many(labels, score_matrix) -> np.ndarray:
    """roc_auc for every column of a score matrix against shared labels."""
    labels = np.asarray(labels).astype(np.int8)
    score_matrix = np.asarray(score_matrix, dtype=np.float64)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("roc_auc needs both classes present")
    offset = n_pos * (n_pos + 1) / 2.0
    out = np.empty(score_matrix.shape[1])
    for j in range(score_matrix.shape[1]):
        u = _pos_rank_sum(labels, np.ascontiguousarray(score_matrix[:, j])) - offset
        out[j] = u / (n_pos * n_neg)
    return out


def pr_auc(labels, scores) -> float:
    """Area under the precision-recall step curve, swept by descending score."""
    labels, scores = _as_labeled(labels, scores)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("pr_auc needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    s = scores[order]
    tp = np.cumsum(y, dtype=np.float64)
    fp = np.cumsum(1 - y, dtype=np.float64)
    # Evaluate only at the last sample of each distinct score (tied scores
    # enter the confusion counts together).
    last = np.ones(y.size, dtype=bool)
    last[:-1] = s[1:] != s[:-1]
    tp, fp = tp[last], fp[last]
    recall = tp / n_pos
    precision = tp / (tp + fp)
    return float(np.dot(np.diff(recall, prepend=0.0), precision))


def f1_accuracy(labels, scores, threshold: float = 0.5) -> tuple[float, float]:
    """(F1, accuracy) for predictions score > threshold; degenerate F1 is 0."""
    labels, scores = _as_labeled(labels, scores)
    pred = scores > threshold
    actual = labels == 1
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    denom = 2 * tp + fp + fn
    f1 = (2 * tp / denom) if denom > 0 else 0.0
    accuracy = float(np.mean(pred == actual))
    return f1, accuracy


def r2(predicted, actual) -> float:
    """Coefficient of determination, 1 - SS_res/SS_tot."""
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape or predicted.ndim != 1:
        raise ValueError("predicted and actual must be 1-D and the same length")
    if actual.size < 2:
        raise ValueError("need at least two samples")
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedMetricError("r2 undefined for constant actuals")
    ss_res = float(np.sum((actual - predicted) ** 2))
    return 1.0 - ss_res / ss_tot

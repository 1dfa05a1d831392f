"""External clustering quality: purity, mapped accuracy, pairwise F1.

Accuracy maximizes the match count over one-to-one label mappings,
solved as an assignment problem on the negated contingency table.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def contingency_table(pred, truth) -> np.ndarray:
    """K_pred x K_true count matrix over dense-remapped label values."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError("pred and truth must be equal-length 1-D sequences")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def purity(pred, truth) -> float:
    """Mean over predicted clusters' largest true-class intersection."""
    table = contingency_table(pred, truth)
    return float(table.max(axis=1).sum() / table.sum())


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect matching of a square cost matrix.

    Returns the column assigned to each row.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    rows, cols = linear_sum_assignment(cost)
    assignment = np.empty(cost.shape[0], dtype=np.int64)
    assignment[rows] = cols
    return assignment


def clustering_accuracy(pred, truth) -> float:
    """Best-mapping match fraction via the assignment solver."""
    table = contingency_table(pred, truth)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    assignment = hungarian(-padded.astype(np.float64))
    matched = padded[np.arange(size), assignment].sum()
    return float(matched / table.sum())


def pairwise_f1(pred, truth) -> tuple[float, float, float]:
    """Precision, recall and F1 over unordered instance pairs.

    A pair counts as TP when co-clustered in both labelings, FP when
    co-clustered only in pred, FN when co-clustered only in truth.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape[0] < 2:
        raise ValueError("pairwise F1 needs at least two instances")
    table = contingency_table(pred, truth)

    def pairs(counts: np.ndarray) -> int:
        return int(np.sum(counts * (counts - 1) // 2))

    tp = pairs(table.ravel())
    same_pred = pairs(table.sum(axis=1))
    same_truth = pairs(table.sum(axis=0))
    precision = tp / same_pred if same_pred else 0.0
    recall = tp / same_truth if same_truth else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return float(precision), float(recall), float(f1)

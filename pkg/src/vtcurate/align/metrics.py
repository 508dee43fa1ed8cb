"""Ranking metrics over similarity matrices.

Tie-breaking is fixed so results are platform-stable: among equal scores
the lower column index ranks first, which makes a tied ground-truth column
count as ranked above any tied column to its right.
"""

from __future__ import annotations

import numpy as np

from ..errors import BadK


def _rank_of(row: np.ndarray, col: int) -> int:
    """1-based rank of ``col`` in ``row`` under descending score with
    lower-index-first ties."""
    s = row[col]
    better = int(np.sum(row > s))
    tied_before = int(np.sum(row[:col] == s))
    return 1 + better + tied_before


def recall_at_k(sim, ground_truth, k: int) -> float:
    """Fraction of rows whose ground-truth column ranks in the top k."""
    m = np.asarray(sim, dtype=np.float64)
    if m.ndim != 2:
        raise BadK(f"similarity must be a matrix, got shape {m.shape}")
    n_rows, n_cols = m.shape
    if not (1 <= k <= n_cols):
        raise BadK(f"k={k} outside [1, {n_cols}]")
    gt = [ground_truth[i] for i in range(n_rows)]
    hits = sum(1 for i, col in enumerate(gt) if _rank_of(m[i], col) <= k)
    return hits / n_rows


def topk_accuracy(sim, labels, k: int) -> float:
    """Top-k classification accuracy of class-similarity rows."""
    return recall_at_k(sim, list(labels), k)


def avg_top1_top5(sim, labels) -> float:
    """Mean of top-1 and top-5 accuracy."""
    return (topk_accuracy(sim, labels, 1) + topk_accuracy(sim, labels, 5)) / 2.0

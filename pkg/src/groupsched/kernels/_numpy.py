"""Numpy implementations of the hot kernels.

This is the fallback selected when the compiled extension is unavailable (or
when GROUPSCHED_PURE_PYTHON=1). Semantics match groupsched.kernels._core
exactly at the decision level: identical neighbor ranking and vote
tie-breaking, identical metric definitions. Floating-point results may differ
from the compiled path in the last bits because summation orders differ.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

BACKEND = "python"

METRIC_EUCLIDEAN = 0
METRIC_COSINE = 1


def knn_vote(queries: np.ndarray, refs: np.ndarray, codes: np.ndarray, k: int) -> np.ndarray:
    """Assign each query the majority label code among its k nearest refs.

    Neighbors are ranked by descending cosine similarity with ties broken by
    reference order; vote ties go to the tied label whose best neighbor ranks
    highest. Returns an int64 array of winning codes, one per query.
    """
    qn = np.linalg.norm(queries, axis=1)
    rn = np.linalg.norm(refs, axis=1)
    sims = (queries @ refs.T) / np.outer(qn, rn)
    out = np.empty(queries.shape[0], dtype=np.int64)
    for i in range(sims.shape[0]):
        # stable sort keeps reference order among exactly equal similarities
        order = np.argsort(-sims[i], kind="stable")[:k]
        top = codes[order]
        counts = Counter(top.tolist())
        best = max(counts.values())
        for c in top:
            if counts[c] == best:
                out[i] = c
                break
    return out


def softmax_xent(
    X: np.ndarray, y: np.ndarray, W: np.ndarray, b: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean softmax cross-entropy of a batch plus its analytic gradient.

    Returns (loss, dW, dB) where dW, dB have the shapes of W (C x D) and
    b (C,). The log-sum-exp is max-shifted so finite inputs never overflow.
    """
    n = X.shape[0]
    z = X @ W.T + b
    m = z.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
    rows = np.arange(n)
    loss = float((lse - z[rows, y]).mean())
    P = np.exp(z - lse[:, None])
    P[rows, y] -= 1.0
    dW = P.T @ X / n
    db = P.sum(axis=0) / n
    return loss, dW, db


def mean_pairwise(X: np.ndarray, metric: int) -> float:
    """Mean distance over all unordered pairs of rows of X."""
    n = X.shape[0]
    total = 0.0
    if metric == METRIC_COSINE:
        Xn = X / np.linalg.norm(X, axis=1, keepdims=True)
        for i in range(n - 1):
            total += float((1.0 - Xn[i + 1 :] @ Xn[i]).sum())
    else:
        for i in range(n - 1):
            diff = X[i + 1 :] - X[i]
            total += float(np.sqrt((diff * diff).sum(axis=1)).sum())
    return total / (n * (n - 1) // 2)

"""Hot-kernel dispatch.

The compiled Cython core is used when it built successfully; otherwise (or
when the environment variable GROUPSCHED_PURE_PYTHON=1 is set) the numpy
fallback takes over. Callers go through the wrappers below, which coerce
inputs to the contiguous float64/int64 layouts both implementations expect.
"""

from __future__ import annotations

import os

import numpy as np

from . import _numpy

_impl = _numpy
if os.environ.get("GROUPSCHED_PURE_PYTHON", "") != "1":
    try:
        from . import _core

        _impl = _core
    except ImportError:
        pass

#: Which implementation is active: "native" or "python".
BACKEND: str = _impl.BACKEND

_METRICS = {"euclidean": _numpy.METRIC_EUCLIDEAN, "cosine": _numpy.METRIC_COSINE}


def _as_matrix(a, name: str) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got ndim={out.ndim}")
    return out


def knn_vote(queries, refs, codes, k: int) -> np.ndarray:
    """Winning label code per query row; see _numpy.knn_vote for the rules."""
    q = _as_matrix(queries, "queries")
    r = _as_matrix(refs, "refs")
    c = np.ascontiguousarray(codes, dtype=np.int64)
    if q.shape[1] != r.shape[1]:
        raise ValueError(f"dimension mismatch: queries {q.shape[1]} vs refs {r.shape[1]}")
    if not 1 <= k <= r.shape[0]:
        raise ValueError(f"k must be in [1, {r.shape[0]}], got {k}")
    return _impl.knn_vote(q, r, c, k)


def softmax_xent(X, y, W, b) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy loss of a batch and its gradient w.r.t. (W, b)."""
    Xm = _as_matrix(X, "X")
    Wm = _as_matrix(W, "W")
    ym = np.ascontiguousarray(y, dtype=np.int64)
    bm = np.ascontiguousarray(b, dtype=np.float64)
    return _impl.softmax_xent(Xm, ym, Wm, bm)


def mean_pairwise(X, metric: str = "euclidean") -> float:
    """Mean distance over all unordered pairs of rows of X."""
    try:
        code = _METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(_METRICS)}")
    return float(_impl.mean_pairwise(_as_matrix(X, "X"), code))

"""Dataset-level analyses: group statistics, category-count sampling study,
and the mean pairwise-distance probe.

The category-count study measures how many distinct categories a random
sample touches — drawn either from the whole pool or per group — and the
distance probe summarizes how spread a set of vectors is. Both are seeded and
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import AnalysisError
from .grouping import GroupedDataset
from .ingest import DEFAULT_LENGTH_BASIS, Dataset, LengthBasis, record_length
from .rng import check_seed, derive_rng

DEFAULT_SAMPLE_SIZE = 500
DEFAULT_RUNS = 10


@dataclass(frozen=True)
class StatsReport:
    total: int
    basis: str
    counts: Mapping[str, int]
    length_histograms: Mapping[str, tuple[tuple[int, int], ...]]

    def to_json(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "basis": self.basis,
            "counts": dict(self.counts),
            "length_histograms": {
                g: [[value, count] for value, count in hist]
                for g, hist in self.length_histograms.items()
            },
        }


def group_stats(
    grouped: GroupedDataset,
    dataset: Dataset,
    basis: LengthBasis = DEFAULT_LENGTH_BASIS,
) -> StatsReport:
    """Per-group record counts and exact length histograms."""
    grouped.assert_partition_of(dataset)
    counts = {}
    histograms = {}
    for label, ids in grouped.groups.items():
        counts[label] = len(ids)
        tally: dict[int, int] = {}
        for i in ids:
            length = record_length(dataset.by_id[i], basis)
            tally[length] = tally.get(length, 0) + 1
        histograms[label] = tuple(sorted(tally.items()))
    return StatsReport(
        total=len(dataset),
        basis=basis.value,
        counts=counts,
        length_histograms=histograms,
    )


@dataclass(frozen=True)
class CategoryCountResult:
    sample_size: int
    runs: int
    counts: tuple[int, ...]
    mean: float

    def to_json(self) -> dict[str, Any]:
        return {
            "sample_size": self.sample_size,
            "runs": self.runs,
            "counts": list(self.counts),
            "mean": self.mean,
        }


def embedding_category_count(
    ids: Sequence[str],
    labels: Mapping[str, str],
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    stream: int = 0,
) -> CategoryCountResult:
    """Distinct-category counts of repeated without-replacement samples.

    Each run draws its own generator stream from (seed, run), so runs are
    independent and may execute in any order; `stream` namespaces concurrent
    studies sharing one seed (per-group sampling uses the group index).
    """
    check_seed(seed)
    if not ids:
        raise AnalysisError("no ids to sample from")
    if not 1 <= sample_size <= len(ids):
        raise AnalysisError(
            f"sample_size must be in [1, {len(ids)}], got {sample_size}",
            sample_size=sample_size, population=len(ids),
        )
    if runs < 1:
        raise AnalysisError(f"runs must be >= 1, got {runs}", runs=runs)
    missing = [i for i in ids if i not in labels]
    if missing:
        raise AnalysisError(
            f"{len(missing)} id(s) have no category label (first: {missing[0]!r})",
            ids=missing[:20],
        )

    pool = list(ids)
    counts = []
    for run in range(runs):
        rng = derive_rng(seed, run, 2, stream)
        picked = rng.choice(len(pool), size=sample_size, replace=False)
        counts.append(len({labels[pool[i]] for i in picked}))
    return CategoryCountResult(
        sample_size=sample_size,
        runs=runs,
        counts=tuple(counts),
        mean=float(np.mean(counts)),
    )


@dataclass(frozen=True)
class GroupedCategoryCounts:
    per_group: Mapping[str, CategoryCountResult]
    mean: float  # average of the per-group means

    def to_json(self) -> dict[str, Any]:
        return {
            "per_group": {g: r.to_json() for g, r in self.per_group.items()},
            "mean": self.mean,
        }


def grouped_category_count(
    grouped: GroupedDataset,
    labels: Mapping[str, str],
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
) -> GroupedCategoryCounts:
    """Run the category-count study inside each group, then average.

    Groups smaller than sample_size are sampled exhaustively rather than
    rejected, since grouping rarely divides a corpus into equal parts.
    """
    per_group = {}
    for gi, (label, ids) in enumerate(grouped.groups.items()):
        per_group[label] = embedding_category_count(
            ids, labels, min(sample_size, len(ids)), runs, seed, stream=gi + 1
        )
    return GroupedCategoryCounts(
        per_group=per_group,
        mean=float(np.mean([r.mean for r in per_group.values()])),
    )


def mean_pairwise_distance(
    vectors: Sequence[Sequence[float]], metric: str = "euclidean"
) -> float:
    """Mean distance over all unordered pairs of vectors."""
    if len(vectors) < 2:
        raise AnalysisError(f"need at least 2 vectors, got {len(vectors)}")
    rows = [np.asarray(v, dtype=np.float64) for v in vectors]
    dim = rows[0].shape
    for i, r in enumerate(rows):
        if r.ndim != 1 or r.shape != dim:
            raise AnalysisError(
                f"vector {i} has shape {r.shape}, expected {dim}"
            )
        if not np.all(np.isfinite(r)):
            raise AnalysisError(f"vector {i} has non-finite entries")
    X = np.stack(rows)
    if metric == "cosine" and not np.all(np.linalg.norm(X, axis=1) > 0):
        raise AnalysisError("cosine distance is undefined for zero-norm vectors")
    if metric not in ("euclidean", "cosine"):
        raise AnalysisError(f"unknown metric {metric!r} (expected euclidean or cosine)")
    return kernels.mean_pairwise(X, metric)

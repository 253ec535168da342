"""Partition a dataset into labeled groups by task, length or embedding.

All three strategies produce a GroupedDataset: a partition of the dataset's
record ids into non-empty labeled groups, with ids inside each group kept in
dataset order. Grouping is fully deterministic; rerunning on the same inputs
serializes to identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import jsonio, kernels
from .errors import FileFormatError, GroupingError
from .ingest import DEFAULT_LENGTH_BASIS, Dataset, LengthBasis, record_length

DEFAULT_NUM_BINS = 8
DEFAULT_K = 8

STRATEGIES = ("task", "length", "embedding")


@dataclass(frozen=True)
class GroupedDataset:
    """A labeled partition of record ids.

    groups maps label -> ids; the map's own order is the construction order
    (first appearance for task/embedding, ascending bins for length) and is
    preserved through serialization.
    """

    strategy: str
    params: Mapping[str, Any]
    groups: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise GroupingError(f"unknown strategy {self.strategy!r}", strategy=self.strategy)
        seen: set[str] = set()
        for label, ids in self.groups.items():
            if not label:
                raise GroupingError("group labels must be non-empty")
            if not ids:
                raise GroupingError(f"group {label!r} is empty", label=label)
            for i in ids:
                if i in seen:
                    raise GroupingError(
                        f"id {i!r} appears in more than one group", id=i
                    )
                seen.add(i)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.groups.keys())

    @property
    def sizes(self) -> dict[str, int]:
        return {label: len(ids) for label, ids in self.groups.items()}

    def all_ids(self) -> tuple[str, ...]:
        return tuple(i for ids in self.groups.values() for i in ids)

    def id_to_group(self) -> dict[str, str]:
        return {i: label for label, ids in self.groups.items() for i in ids}

    def check_partition_of(self, dataset: Dataset) -> list[str]:
        """Return problems (empty list when this exactly partitions dataset)."""
        problems: list[str] = []
        ours = set(self.all_ids())
        theirs = set(dataset.ids)
        for extra in sorted(ours - theirs):
            problems.append(f"grouped id {extra!r} is not in the dataset")
        for missing in sorted(theirs - ours):
            problems.append(f"dataset id {missing!r} is not in any group")
        return problems

    def assert_partition_of(self, dataset: Dataset) -> None:
        problems = self.check_partition_of(dataset)
        if problems:
            raise GroupingError(
                f"grouping does not partition the dataset: {problems[0]} "
                f"({len(problems)} problem(s) total)",
                problems=problems,
            )

    def to_json(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "params": dict(self.params),
            "groups": {label: list(ids) for label, ids in self.groups.items()},
        }

    def content_hash(self) -> str:
        """Hash of the logical content, independent of file layout."""
        canonical = jsonio.dumps_compact(
            {
                "strategy": self.strategy,
                "params": dict(sorted(self.params.items())),
                "groups": {k: list(v) for k, v in self.groups.items()},
            }
        )
        return jsonio.sha256_hex(canonical)


def save_grouped(grouped: GroupedDataset, path: str | Path, config: dict | None = None) -> None:
    obj = grouped.to_json()
    if config is not None:
        obj["config"] = config
    jsonio.write_json(path, obj)


def load_grouped(path: str | Path) -> GroupedDataset:
    obj = jsonio.read_json(path)
    if not isinstance(obj, dict):
        raise FileFormatError(f"{path}: expected a JSON object", path=str(path))
    for key in ("strategy", "params", "groups"):
        if key not in obj:
            raise FileFormatError(f"{path}: missing key {key!r}", path=str(path), key=key)
    groups = {label: tuple(ids) for label, ids in obj["groups"].items()}
    return GroupedDataset(strategy=obj["strategy"], params=obj["params"], groups=groups)


def group_by_task(dataset: Dataset) -> GroupedDataset:
    """One group per distinct task label, in first-appearance order.

    Every record needs a task label; the error lists the offending ids.
    """
    missing = [r.id for r in dataset if r.task is None]
    if missing:
        raise GroupingError(
            f"{len(missing)} record(s) have no task label "
            f"(first: {missing[0]!r}); task grouping needs labels on every record",
            ids=missing,
        )
    groups: dict[str, list[str]] = {}
    for r in dataset:
        groups.setdefault(r.task, []).append(r.id)
    return GroupedDataset(
        strategy="task",
        params={},
        groups={label: tuple(ids) for label, ids in groups.items()},
    )


def group_by_length(
    dataset: Dataset,
    num_bins: int = DEFAULT_NUM_BINS,
    basis: LengthBasis = DEFAULT_LENGTH_BASIS,
) -> GroupedDataset:
    """Equal-count quantile bins over record lengths.

    Records are ranked by (length, dataset order) and cut into num_bins
    contiguous slices whose sizes differ by at most one; the first
    N mod num_bins slices take the extra record. Each label records the bin's
    observed [min,max] length. Within a bin, ids are emitted in dataset order.
    """
    n = len(dataset)
    if not 1 <= num_bins <= n:
        raise GroupingError(
            f"num_bins must be in [1, {n}] for a dataset of {n} record(s), got {num_bins}",
            num_bins=num_bins, dataset_size=n,
        )
    lengths = {r.id: record_length(r, basis) for r in dataset}
    ranked = sorted(dataset.ids, key=lambda i: (lengths[i], dataset.position[i]))

    base, remainder = divmod(n, num_bins)
    bins: list[list[str]] = []
    start = 0
    for b in range(num_bins):
        size = base + (1 if b < remainder else 0)
        bins.append(ranked[start : start + size])
        start += size

    raw_labels = [
        f"len[{min(lengths[i] for i in bin_ids)},{max(lengths[i] for i in bin_ids)}]"
        for bin_ids in bins
    ]
    # Ties can make adjacent bins share their [lo,hi]; suffix duplicates so
    # labels stay unique.
    labels = list(raw_labels)
    for name in set(raw_labels):
        if raw_labels.count(name) > 1:
            hits = [i for i, l in enumerate(raw_labels) if l == name]
            for occurrence, i in enumerate(hits, start=1):
                labels[i] = f"{name}#{occurrence}"

    groups = {
        label: tuple(sorted(bin_ids, key=dataset.position.__getitem__))
        for label, bin_ids in zip(labels, bins)
    }
    return GroupedDataset(
        strategy="length",
        params={"num_bins": num_bins, "basis": basis.value},
        groups=groups,
    )


class EmbeddingTable:
    """Dense vectors keyed by record id, all of one dimension."""

    def __init__(self, vectors: Mapping[str, Sequence[float]]):
        if not vectors:
            raise GroupingError("embedding table is empty")
        self.vectors: dict[str, np.ndarray] = {}
        self.dim = -1
        for rid, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise GroupingError(f"embedding for {rid!r} is not a flat vector", id=rid)
            if self.dim < 0:
                self.dim = arr.shape[0]
            elif arr.shape[0] != self.dim:
                raise GroupingError(
                    f"embedding for {rid!r} has dim {arr.shape[0]}, expected {self.dim}",
                    id=rid,
                )
            if not np.all(np.isfinite(arr)):
                raise GroupingError(f"embedding for {rid!r} has non-finite entries", id=rid)
            self.vectors[rid] = arr

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, rid: str) -> bool:
        return rid in self.vectors

    def matrix_for(self, ids: Sequence[str]) -> np.ndarray:
        missing = [i for i in ids if i not in self.vectors]
        if missing:
            raise GroupingError(
                f"{len(missing)} id(s) have no embedding (first: {missing[0]!r})",
                ids=missing[:20],
            )
        return np.stack([self.vectors[i] for i in ids])

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        vectors: dict[str, Any] = {}
        for lineno, obj in jsonio.iter_jsonl(path):
            obj = jsonio.require_object(obj, path, lineno)
            if "id" not in obj or "vector" not in obj:
                raise FileFormatError(
                    f"{path}: line {lineno}: expected keys 'id' and 'vector'",
                    path=str(path), line=lineno,
                )
            if obj["id"] in vectors:
                raise FileFormatError(
                    f"{path}: line {lineno}: duplicate id {obj['id']!r}",
                    path=str(path), line=lineno,
                )
            vectors[obj["id"]] = obj["vector"]
        return cls(vectors)

    def save(self, path: str | Path) -> None:
        jsonio.write_jsonl(
            path,
            ({"id": rid, "vector": vec.tolist()} for rid, vec in self.vectors.items()),
        )


class ReferenceSet:
    """Labeled exemplar vectors used to classify records by similarity.

    Entries keep their input order (similarity ties break toward earlier
    entries) and one label may appear on many exemplars.
    """

    def __init__(self, entries: Iterable[tuple[str, Sequence[float]]]):
        labels: list[str] = []
        rows: list[np.ndarray] = []
        for label, vec in entries:
            if not label or not isinstance(label, str):
                raise GroupingError("reference labels must be non-empty strings")
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise GroupingError(f"reference vector for {label!r} is not a flat vector")
            if rows and arr.shape[0] != rows[0].shape[0]:
                raise GroupingError(
                    f"reference vector for {label!r} has dim {arr.shape[0]}, "
                    f"expected {rows[0].shape[0]}"
                )
            if not np.all(np.isfinite(arr)):
                raise GroupingError(f"reference vector for {label!r} has non-finite entries")
            if not np.any(arr):
                raise GroupingError(f"reference vector for {label!r} has zero norm")
            labels.append(label)
            rows.append(arr)
        if not rows:
            raise GroupingError("reference set is empty")
        self.labels = tuple(labels)
        self.matrix = np.stack(rows)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def label_codes(self) -> tuple[np.ndarray, list[str]]:
        """Encode labels as ints in first-appearance order."""
        code_of: dict[str, int] = {}
        codes = np.empty(len(self.labels), dtype=np.int64)
        for i, label in enumerate(self.labels):
            codes[i] = code_of.setdefault(label, len(code_of))
        ordered = [None] * len(code_of)
        for label, c in code_of.items():
            ordered[c] = label
        return codes, ordered

    @classmethod
    def load(cls, path: str | Path) -> "ReferenceSet":
        entries = []
        for lineno, obj in jsonio.iter_jsonl(path):
            obj = jsonio.require_object(obj, path, lineno)
            if "label" not in obj or "vector" not in obj:
                raise FileFormatError(
                    f"{path}: line {lineno}: expected keys 'label' and 'vector'",
                    path=str(path), line=lineno,
                )
            entries.append((obj["label"], obj["vector"]))
        return cls(entries)

    def save(self, path: str | Path) -> None:
        jsonio.write_jsonl(
            path,
            (
                {"label": label, "vector": row.tolist()}
                for label, row in zip(self.labels, self.matrix)
            ),
        )


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine of the angle between two vectors, clipped into [-1, 1]."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1:
        raise GroupingError(
            f"dimension mismatch: {av.shape} vs {bv.shape}",
        )
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise GroupingError("cosine similarity is undefined for zero-norm vectors")
    return float(np.clip(float(av @ bv) / (na * nb), -1.0, 1.0))


def knn_classify(query: Sequence[float], reference: ReferenceSet, k: int) -> str:
    """Majority label among the k reference entries most similar to query.

    Ranking is by descending cosine similarity with ties broken by reference
    order; a vote tie goes to the tied label whose best neighbor ranks
    highest. k=1 degenerates to nearest-neighbor assignment.
    """
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != reference.dim:
        raise GroupingError(
            f"query dim {q.shape} does not match reference dim {reference.dim}"
        )
    if not 1 <= k <= len(reference):
        raise GroupingError(
            f"k must be in [1, {len(reference)}], got {k}", k=k, reference_size=len(reference)
        )
    if not np.any(q):
        raise GroupingError("cannot classify a zero-norm query vector")
    codes, ordered = reference.label_codes()
    winner = kernels.knn_vote(q[None, :], reference.matrix, codes, k)[0]
    return ordered[int(winner)]


def group_by_embedding(
    dataset: Dataset,
    embeddings: EmbeddingTable,
    reference: ReferenceSet,
    k: int = DEFAULT_K,
) -> GroupedDataset:
    """Assign every record the kNN-vote category of its embedding.

    Groups are keyed by assigned category in first-appearance order;
    categories that win no records are simply absent.
    """
    if embeddings.dim != reference.dim:
        raise GroupingError(
            f"embedding dim {embeddings.dim} does not match reference dim {reference.dim}"
        )
    if not 1 <= k <= len(reference):
        raise GroupingError(
            f"k must be in [1, {len(reference)}], got {k}", k=k, reference_size=len(reference)
        )
    queries = embeddings.matrix_for(dataset.ids)
    zero = np.flatnonzero(~np.any(queries, axis=1))
    if zero.size:
        raise GroupingError(
            f"embedding for {dataset.ids[zero[0]]!r} has zero norm; cosine "
            "assignment is undefined",
            id=dataset.ids[int(zero[0])],
        )
    codes, ordered = reference.label_codes()
    winners = kernels.knn_vote(queries, reference.matrix, codes, k)
    groups: dict[str, list[str]] = {}
    for rid, code in zip(dataset.ids, winners):
        groups.setdefault(ordered[int(code)], []).append(rid)
    return GroupedDataset(
        strategy="embedding",
        params={"k": k, "reference_size": len(reference), "dim": reference.dim},
        groups={label: tuple(ids) for label, ids in groups.items()},
    )

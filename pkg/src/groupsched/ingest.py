"""Loading, validation and length measurement for instruction datasets.

A dataset file is UTF-8 with one JSON object per line:

    {"id": "r1", "instruction": "...", "input": "...", "output": "...", "task": "qa"}

``output`` is the supervision target and must be non-empty. ``input`` may be
empty or absent (Alpaca-style records usually have none) and ``task`` is
optional; records without a task label load fine and are only rejected later
by task grouping. Unknown keys are kept on the record and written back out on
save, so load -> save -> load round-trips.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Iterator, Mapping

from . import jsonio
from .errors import DatasetError

_REQUIRED_FIELDS = ("id", "instruction", "output")
_KNOWN_FIELDS = ("id", "instruction", "input", "output", "task")


class LengthBasis(str, Enum):
    """What to measure when a record's length is needed.

    Token counts split the chosen text on whitespace; the character count is
    in code points. "Source" means instruction plus input.
    """

    TARGET_TOKENS = "target-tokens"
    SOURCE_TOKENS = "source-tokens"
    FULL_TOKENS = "full-tokens"
    TARGET_CHARS = "target-chars"


DEFAULT_LENGTH_BASIS = LengthBasis.TARGET_TOKENS


@dataclass(frozen=True)
class Record:
    """One instruction-tuning example: instruction, optional input, target."""

    id: str
    instruction: str
    input: str
    target: str
    task: str | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "id": self.id,
            "instruction": self.instruction,
            "input": self.input,
            "output": self.target,
        }
        if self.task is not None:
            obj["task"] = self.task
        obj.update(self.extra)
        return obj


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of records, in the exact order of the source file.

    Order matters: grouping and scheduling break ties by dataset position, so
    reordering records changes downstream artifacts.
    """

    records: tuple[Record, ...]
    source_path: str = field(default="", compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)

    @cached_property
    def by_id(self) -> Mapping[str, Record]:
        return {r.id: r for r in self.records}

    @cached_property
    def position(self) -> Mapping[str, int]:
        return {r.id: i for i, r in enumerate(self.records)}


def _record_from_obj(obj: dict, path: str, lineno: int) -> Record:
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            raise DatasetError(
                f"{path}: line {lineno}: missing required field {name!r}",
                path=path, line=lineno, field=name,
            )
    for name in _KNOWN_FIELDS:
        if name in obj and not isinstance(obj[name], str):
            raise DatasetError(
                f"{path}: line {lineno}: field {name!r} must be a string",
                path=path, line=lineno, field=name,
            )
    if not obj["id"]:
        raise DatasetError(
            f"{path}: line {lineno}: field 'id' must be non-empty",
            path=path, line=lineno, field="id",
        )
    if not obj["output"]:
        raise DatasetError(
            f"{path}: line {lineno}: field 'output' must be non-empty "
            "(a record without a supervision target is invalid)",
            path=path, line=lineno, field="output",
        )
    if obj.get("task") == "":
        raise DatasetError(
            f"{path}: line {lineno}: field 'task' must be non-empty when present",
            path=path, line=lineno, field="task",
        )
    return Record(
        id=obj["id"],
        instruction=obj["instruction"],
        input=obj.get("input", ""),
        target=obj["output"],
        task=obj.get("task"),
        extra={k: v for k, v in obj.items() if k not in _KNOWN_FIELDS},
    )


def load_dataset(path: str | Path) -> Dataset:
    """Load a line-delimited dataset file, preserving file order.

    Raises DatasetError on a malformed line (with its line number), a
    duplicate id, a missing required field, or an empty file.
    """
    p = Path(path)
    records: list[Record] = []
    first_line: dict[str, int] = {}
    for lineno, obj in jsonio.iter_jsonl(p):
        obj = jsonio.require_object(obj, p, lineno)
        rec = _record_from_obj(obj, str(p), lineno)
        if rec.id in first_line:
            raise DatasetError(
                f"{p}: line {lineno}: duplicate id {rec.id!r} "
                f"(first seen on line {first_line[rec.id]})",
                path=str(p), line=lineno, id=rec.id,
            )
        first_line[rec.id] = lineno
        records.append(rec)
    if not records:
        raise DatasetError(f"{p}: empty dataset (no records)", path=str(p))
    return Dataset(records=tuple(records), source_path=str(p))


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    jsonio.write_jsonl(path, (r.to_json() for r in dataset.records))


def record_length(record: Record, basis: LengthBasis = DEFAULT_LENGTH_BASIS) -> int:
    """Deterministic length of a record under the chosen basis."""
    if basis is LengthBasis.TARGET_TOKENS:
        return len(record.target.split())
    if basis is LengthBasis.SOURCE_TOKENS:
        return len(f"{record.instruction} {record.input}".split())
    if basis is LengthBasis.FULL_TOKENS:
        return len(f"{record.instruction} {record.input} {record.target}".split())
    if basis is LengthBasis.TARGET_CHARS:
        return len(record.target)
    raise ValueError(f"unknown length basis: {basis!r}")


@dataclass(frozen=True)
class ValidationReport:
    """Summary of a loaded dataset; informational only, never raises."""

    record_count: int
    tasks: tuple[str, ...]
    records_with_task: int
    task_coverage: float
    length_basis: LengthBasis
    length_min: int
    length_max: int
    length_mean: float

    def to_json(self) -> dict[str, Any]:
        return {
            "record_count": self.record_count,
            "tasks": list(self.tasks),
            "records_with_task": self.records_with_task,
            "task_coverage": self.task_coverage,
            "length_basis": self.length_basis.value,
            "length_min": self.length_min,
            "length_max": self.length_max,
            "length_mean": self.length_mean,
        }


def validate_dataset(
    dataset: Dataset, basis: LengthBasis = DEFAULT_LENGTH_BASIS
) -> ValidationReport:
    """Report counts, task coverage and length statistics for a dataset.

    Task coverage below 1.0 means group-by-task will reject the dataset;
    check it here first.
    """
    lengths = [record_length(r, basis) for r in dataset.records]
    with_task = [r for r in dataset.records if r.task is not None]
    return ValidationReport(
        record_count=len(dataset),
        tasks=tuple(sorted({r.task for r in with_task})),
        records_with_task=len(with_task),
        task_coverage=len(with_task) / len(dataset),
        length_basis=basis,
        length_min=min(lengths),
        length_max=max(lengths),
        length_mean=sum(lengths) / len(lengths),
    )

"""Readers and writers for the toolkit's line-delimited file formats.

This package talks to the grouping/scheduling toolkit purely through its
files — datasets and schedule manifests in, embedding and reference tables
out — so the formats are (re)implemented here from their contracts rather
than imported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

from .errors import ExporterError

_REQUIRED_FIELDS = ("id", "instruction", "output")
_STRING_FIELDS = ("id", "instruction", "input", "output", "task")


@dataclass(frozen=True)
class SourceRecord:
    """One dataset record, as much of it as embedding export needs."""

    id: str
    instruction: str
    input: str
    target: str
    task: str | None = None


@dataclass(frozen=True)
class LabeledText:
    """One reference entry: a category label and the text that defines it."""

    label: str
    text: str


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed object), failing fast on a bad line."""
    p = Path(path)
    if not p.exists():
        raise ExporterError(f"file not found: {p}", path=str(p))
    with open(p, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                raise ExporterError(f"{p}: line {lineno}: blank line",
                                    path=str(p), line=lineno)
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ExporterError(f"{p}: line {lineno}: invalid JSON: {e.msg}",
                                    path=str(p), line=lineno) from e
            if not isinstance(obj, dict):
                raise ExporterError(
                    f"{p}: line {lineno}: expected a JSON object, "
                    f"got {type(obj).__name__}",
                    path=str(p), line=lineno,
                )
            yield lineno, obj


def read_dataset(path: str | Path) -> list[SourceRecord]:
    """Read a dataset JSONL file, enforcing the toolkit's record format."""
    p = Path(path)
    records: list[SourceRecord] = []
    first_line: dict[str, int] = {}
    for lineno, obj in iter_jsonl(p):
        for name in _REQUIRED_FIELDS:
            if name not in obj:
                raise ExporterError(
                    f"{p}: line {lineno}: missing required field {name!r}",
                    path=str(p), line=lineno, field=name,
                )
        for name in _STRING_FIELDS:
            if name in obj and not isinstance(obj[name], str):
                raise ExporterError(
                    f"{p}: line {lineno}: field {name!r} must be a string",
                    path=str(p), line=lineno, field=name,
                )
        if not obj["id"]:
            raise ExporterError(f"{p}: line {lineno}: field 'id' must be non-empty",
                                path=str(p), line=lineno)
        if not obj["output"]:
            raise ExporterError(
                f"{p}: line {lineno}: field 'output' must be non-empty",
                path=str(p), line=lineno,
            )
        if obj["id"] in first_line:
            raise ExporterError(
                f"{p}: line {lineno}: duplicate id {obj['id']!r} "
                f"(first seen on line {first_line[obj['id']]})",
                path=str(p), line=lineno, id=obj["id"],
            )
        first_line[obj["id"]] = lineno
        records.append(SourceRecord(
            id=obj["id"],
            instruction=obj["instruction"],
            input=obj.get("input", ""),
            target=obj["output"],
            task=obj.get("task"),
        ))
    if not records:
        raise ExporterError(f"{p}: empty dataset (no records)", path=str(p))
    return records


def read_labeled_texts(path: str | Path) -> list[LabeledText]:
    """Read reference texts: one {"label", "text"} object per line."""
    p = Path(path)
    entries: list[LabeledText] = []
    for lineno, obj in iter_jsonl(p):
        for name in ("label", "text"):
            if name not in obj:
                raise ExporterError(
                    f"{p}: line {lineno}: missing required field {name!r}",
                    path=str(p), line=lineno, field=name,
                )
            if not isinstance(obj[name], str):
                raise ExporterError(
                    f"{p}: line {lineno}: field {name!r} must be a string",
                    path=str(p), line=lineno, field=name,
                )
        if not obj["label"]:
            raise ExporterError(
                f"{p}: line {lineno}: field 'label' must be non-empty",
                path=str(p), line=lineno,
            )
        entries.append(LabeledText(label=obj["label"], text=obj["text"]))
    if not entries:
        raise ExporterError(f"{p}: empty reference input (no entries)", path=str(p))
    return entries


def _vector_json(vector: Sequence[float]) -> list[float]:
    """Round to 32-bit floats and emit plain decimals.

    The written decimals are the shortest strings that round-trip to the
    float32 values, so re-export is byte-identical and loaders that parse
    to float64 see the float32 values exactly.
    """
    arr = np.asarray(vector, dtype=np.float32)
    if arr.ndim != 1:
        raise ExporterError("embedding vectors must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ExporterError("embedding vectors must be finite")
    return [float(x) for x in arr]


def write_embeddings(path: str | Path, rows: Iterable[tuple[str, Sequence[float]]]) -> int:
    """Write an embedding table: one {"id", "vector"} object per line."""
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for rid, vector in rows:
            obj = {"id": rid, "vector": _vector_json(vector)}
            f.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
            f.write("\n")
            count += 1
    return count


def write_reference(path: str | Path, rows: Iterable[tuple[str, Sequence[float]]]) -> int:
    """Write a reference table: one {"label", "vector"} object per line."""
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for label, vector in rows:
            obj = {"label": label, "vector": _vector_json(vector)}
            f.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
            f.write("\n")
            count += 1
    return count

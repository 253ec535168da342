"""Replay a schedule manifest as a stream of batch id lists.

The adapter an external fine-tuning framework plugs into its data loader:
it yields each training step's ids in step order, exactly as the manifest
dictates — never reordering, merging, or dropping batches. Lines on disk
may be in any order; the step indices are authoritative.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import ExporterError
from .formats import iter_jsonl

_STEP_FIELDS = ("epoch", "step", "group", "ids")


@dataclass(frozen=True)
class ReplayStep:
    """One training step: which epoch, which group, which record ids."""

    epoch: int
    step: int
    group: str | None
    ids: tuple[str, ...]


def replay_schedule(manifest_path: str | Path) -> Iterator[ReplayStep]:
    """Yield every step of a schedule manifest in step-index order.

    The first line must be the schedule header; every other line one step.
    Malformed lines, duplicate step indices, and gaps in the step sequence
    all fail fast with the offending line or index named.
    """
    p = Path(manifest_path)
    header = None
    steps: dict[int, ReplayStep] = {}
    step_lines: dict[int, int] = {}
    for lineno, obj in iter_jsonl(p):
        if lineno == 1:
            if "mode" not in obj or "step" in obj:
                raise ExporterError(
                    f"{p}: line 1: expected a schedule header with a 'mode' field",
                    path=str(p), line=1,
                )
            header = obj
            continue
        for name in _STEP_FIELDS:
            if name not in obj:
                raise ExporterError(
                    f"{p}: line {lineno}: step is missing field {name!r}",
                    path=str(p), line=lineno, field=name,
                )
        if not isinstance(obj["epoch"], int) or not isinstance(obj["step"], int):
            raise ExporterError(
                f"{p}: line {lineno}: 'epoch' and 'step' must be integers",
                path=str(p), line=lineno,
            )
        if obj["group"] is not None and not isinstance(obj["group"], str):
            raise ExporterError(
                f"{p}: line {lineno}: 'group' must be a string or null",
                path=str(p), line=lineno,
            )
        ids = obj["ids"]
        if (not isinstance(ids, list) or not ids
                or not all(isinstance(i, str) and i for i in ids)):
            raise ExporterError(
                f"{p}: line {lineno}: 'ids' must be a non-empty list of ids",
                path=str(p), line=lineno,
            )
        index = obj["step"]
        if index in steps:
            raise ExporterError(
                f"{p}: line {lineno}: duplicate step {index} "
                f"(first seen on line {step_lines[index]})",
                path=str(p), line=lineno, step=index,
            )
        steps[index] = ReplayStep(
            epoch=obj["epoch"], step=index, group=obj["group"], ids=tuple(ids)
        )
        step_lines[index] = lineno
    if header is None:
        raise ExporterError(f"{p}: empty manifest (no header line)", path=str(p))
    if not steps:
        raise ExporterError(f"{p}: manifest has a header but no steps", path=str(p))
    for index in range(len(steps)):
        if index not in steps:
            raise ExporterError(
                f"{p}: step indices are not consecutive: missing step {index}",
                path=str(p), step=index,
            )
        yield steps[index]

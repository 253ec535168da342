"""Deterministic multi-epoch batch schedules over a grouped dataset.

The default mode builds every mini-batch from a single group and shuffles the
batch order uniformly; two ablation modes relax each half of that contract
(vanilla: no group constraint; sequential: no interleaving). Schedules are
pure functions of (grouping, batch_size, epochs, seed, tail policy, mode) and
serialize to a line-oriented manifest that fully determines training order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import jsonio
from .errors import FileFormatError, ScheduleError
from .grouping import GroupedDataset
from .rng import GENERATOR_ID, check_seed, derive_rng

DEFAULT_BATCH_SIZE = 32


class ScheduleMode(enum.Enum):
    COMMONIT = "CommonIT"
    VANILLA = "Vanilla"
    SEQUENTIAL = "SequentialGroups"

    @classmethod
    def parse(cls, text: str) -> "ScheduleMode":
        table = {
            "commonit": cls.COMMONIT,
            "vanilla": cls.VANILLA,
            "sequential": cls.SEQUENTIAL,
            "sequentialgroups": cls.SEQUENTIAL,
        }
        try:
            return table[text.strip().lower()]
        except KeyError:
            raise ScheduleError(
                f"unknown schedule mode {text!r} (expected commonit, vanilla or sequential)",
                mode=text,
            ) from None


class TailPolicy(enum.Enum):
    KEEP = "Keep"
    DROP = "Drop"

    @classmethod
    def parse(cls, text: str) -> "TailPolicy":
        try:
            return {"keep": cls.KEEP, "drop": cls.DROP}[text.strip().lower()]
        except KeyError:
            raise ScheduleError(
                f"unknown tail policy {text!r} (expected keep or drop)", tail_policy=text
            ) from None


@dataclass(frozen=True)
class Batch:
    """One mini-batch: ids drawn from a single group (None in vanilla mode)."""

    group: str | None
    ids: tuple[str, ...]
    is_tail: bool

    def __post_init__(self):
        if not self.ids:
            raise ScheduleError("a batch cannot be empty")

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class ScheduleStep:
    epoch: int
    step: int
    batch: Batch

    def to_json(self) -> dict[str, Any]:
        return {
            "epoch": self.epoch,
            "step": self.step,
            "group": self.batch.group,
            "ids": list(self.batch.ids),
        }


@dataclass(frozen=True)
class Schedule:
    mode: ScheduleMode
    batch_size: int
    epochs: int
    seed: int
    tail_policy: TailPolicy
    grouping_hash: str
    repartition: bool
    steps: tuple[ScheduleStep, ...]
    generator: str = GENERATOR_ID

    def __len__(self) -> int:
        return len(self.steps)

    def steps_for_epoch(self, epoch: int) -> tuple[ScheduleStep, ...]:
        return tuple(s for s in self.steps if s.epoch == epoch)

    def header_json(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "generator": self.generator,
            "tail_policy": self.tail_policy.value,
            "grouping_hash": self.grouping_hash,
            "repartition": self.repartition,
        }

    def content_hash(self) -> str:
        canonical = jsonio.dumps_compact(
            {
                "header": dict(sorted(self.header_json().items())),
                "steps": [s.to_json() for s in self.steps],
            }
        )
        return jsonio.sha256_hex(canonical)


def build_partitions(
    grouped: GroupedDataset,
    batch_size: int,
    tail_policy: TailPolicy,
    rng,
) -> list[Batch]:
    """Shuffle each group and slice it into consecutive runs of batch_size.

    The final short run of a group is kept as a tail batch under Keep and
    discarded under Drop; groups are consumed in grouping order so the result
    is a pure function of (grouped, batch_size, tail_policy, rng state).
    """
    if batch_size < 1:
        raise ScheduleError(f"batch_size must be >= 1, got {batch_size}", batch_size=batch_size)
    batches: list[Batch] = []
    for label, gids in grouped.groups.items():
        shuffled = [gids[i] for i in rng.permutation(len(gids))]
        batches.extend(_slice_into_batches(label, shuffled, batch_size, tail_policy))
    return batches


def _slice_into_batches(
    group: str | None,
    ids: Sequence[str],
    batch_size: int,
    tail_policy: TailPolicy,
) -> list[Batch]:
    batches = []
    for start in range(0, len(ids), batch_size):
        run = tuple(ids[start : start + batch_size])
        if len(run) < batch_size:
            if tail_policy is TailPolicy.DROP:
                break
            batches.append(Batch(group=group, ids=run, is_tail=True))
        else:
            batches.append(Batch(group=group, ids=run, is_tail=False))
    return batches


def shuffle_schedule(batches: Sequence[Batch], rng) -> list[Batch]:
    """Uniformly permute batch order with the given generator."""
    return [batches[i] for i in rng.permutation(len(batches))]


def build_schedule(
    grouped: GroupedDataset,
    batch_size: int,
    epochs: int,
    seed: int,
    tail_policy: TailPolicy = TailPolicy.KEEP,
    mode: ScheduleMode = ScheduleMode.COMMONIT,
    *,
    repartition_each_epoch: bool = True,
) -> Schedule:
    """Build the full multi-epoch schedule.

    Each epoch draws two fresh generator streams derived from (seed, epoch):
    one for partitioning ids into batches, one for ordering the batches. With
    repartition_each_epoch=False the epoch-0 batches are reused and only the
    order is redrawn, so batch composition stays fixed across epochs.
    """
    check_seed(seed)
    if batch_size < 1:
        raise ScheduleError(f"batch_size must be >= 1, got {batch_size}", batch_size=batch_size)
    if epochs < 1:
        raise ScheduleError(f"epochs must be >= 1, got {epochs}", epochs=epochs)
    if not grouped.groups:
        raise ScheduleError("cannot schedule an empty grouping")

    steps: list[ScheduleStep] = []
    t = 0
    base: list[Batch] = []
    for epoch in range(epochs):
        partition_rng = derive_rng(seed, epoch, 0)
        order_rng = derive_rng(seed, epoch, 1)
        if repartition_each_epoch or epoch == 0:
            if mode is ScheduleMode.VANILLA:
                ids = grouped.all_ids()
                shuffled = [ids[i] for i in partition_rng.permutation(len(ids))]
                base = _slice_into_batches(None, shuffled, batch_size, tail_policy)
            else:
                base = build_partitions(grouped, batch_size, tail_policy, partition_rng)
            if not base:
                raise ScheduleError(
                    f"tail policy Drop discards everything: no group has >= "
                    f"{batch_size} records",
                    batch_size=batch_size,
                    group_sizes=grouped.sizes,
                )

        if mode is ScheduleMode.COMMONIT:
            ordered = shuffle_schedule(base, order_rng)
        elif mode is ScheduleMode.VANILLA:
            # A fresh id-level shuffle already randomizes vanilla epochs; only
            # reused partitions need their order redrawn.
            ordered = base if repartition_each_epoch else shuffle_schedule(base, order_rng)
        else:
            by_group: dict[str | None, list[Batch]] = {}
            for b in base:
                by_group.setdefault(b.group, []).append(b)
            labels = list(by_group.keys())
            ordered = []
            for gi in order_rng.permutation(len(labels)):
                ordered.extend(by_group[labels[gi]])

        for batch in ordered:
            steps.append(ScheduleStep(epoch=epoch, step=t, batch=batch))
            t += 1

    return Schedule(
        mode=mode,
        batch_size=batch_size,
        epochs=epochs,
        seed=seed,
        tail_policy=tail_policy,
        grouping_hash=grouped.content_hash(),
        repartition=repartition_each_epoch,
        steps=tuple(steps),
    )


def save_schedule(schedule: Schedule, path: str | Path, config: dict | None = None) -> None:
    """Write the manifest: one header line, then one line per step."""
    header = schedule.header_json()
    if config is not None:
        header["config"] = config
    lines: Iterable[dict] = [header] + [s.to_json() for s in schedule.steps]
    jsonio.write_jsonl(path, lines)


def load_schedule(path: str | Path) -> Schedule:
    rows = list(jsonio.iter_jsonl(path))
    if not rows:
        raise FileFormatError(f"{path}: empty schedule manifest", path=str(path))
    lineno, header = rows[0]
    header = jsonio.require_object(header, path, lineno)
    for key in ("mode", "batch_size", "epochs", "seed", "generator", "tail_policy",
                "grouping_hash"):
        if key not in header:
            raise FileFormatError(
                f"{path}: line {lineno}: header is missing {key!r}",
                path=str(path), line=lineno, key=key,
            )
    mode = ScheduleMode(header["mode"])
    tail = TailPolicy(header["tail_policy"])
    batch_size = header["batch_size"]

    parsed: list[ScheduleStep] = []
    for lineno, obj in rows[1:]:
        obj = jsonio.require_object(obj, path, lineno)
        for key in ("epoch", "step", "group", "ids"):
            if key not in obj:
                raise FileFormatError(
                    f"{path}: line {lineno}: step is missing {key!r}",
                    path=str(path), line=lineno, key=key,
                )
        ids = tuple(obj["ids"])
        if not ids:
            raise FileFormatError(
                f"{path}: line {lineno}: step has no ids", path=str(path), line=lineno
            )
        parsed.append(
            ScheduleStep(
                epoch=obj["epoch"],
                step=obj["step"],
                batch=Batch(group=obj["group"], ids=ids, is_tail=len(ids) < batch_size),
            )
        )
    parsed.sort(key=lambda s: s.step)
    for expected, s in enumerate(parsed):
        if s.step != expected:
            raise FileFormatError(
                f"{path}: step indices are not consecutive from 0 "
                f"(expected {expected}, found {s.step})",
                path=str(path),
            )
    return Schedule(
        mode=mode,
        batch_size=batch_size,
        epochs=header["epochs"],
        seed=header["seed"],
        tail_policy=tail,
        grouping_hash=header["grouping_hash"],
        repartition=header.get("repartition", True),
        steps=tuple(parsed),
        generator=header["generator"],
    )


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    violations: tuple[str, ...]
    epochs_checked: int
    steps_checked: int
    dropped_per_epoch: tuple[int, ...]
    expected_dropped_per_epoch: int
    content_hash: str

    def to_json(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": list(self.violations),
            "epochs_checked": self.epochs_checked,
            "steps_checked": self.steps_checked,
            "dropped_per_epoch": list(self.dropped_per_epoch),
            "expected_dropped_per_epoch": self.expected_dropped_per_epoch,
            "content_hash": self.content_hash,
        }


def verify_schedule(schedule: Schedule, grouped: GroupedDataset) -> VerificationReport:
    """Check homogeneity, per-epoch coverage, batch bounds and step indexing.

    Violations are collected (not raised) so a corrupted manifest can be
    reported in full; a schedule straight out of build_schedule yields none.
    """
    violations: list[str] = []
    id_to_group = grouped.id_to_group()
    all_ids = set(id_to_group)
    n = schedule.batch_size

    if schedule.tail_policy is TailPolicy.DROP:
        if schedule.mode is ScheduleMode.VANILLA:
            expected_drop = len(all_ids) % n
        else:
            expected_drop = sum(size % n for size in grouped.sizes.values())
    else:
        expected_drop = 0

    for expected, s in enumerate(schedule.steps):
        if s.step != expected:
            violations.append(
                f"step index {s.step} at position {expected} breaks 0-based ordering"
            )
        if not 0 <= s.epoch < schedule.epochs:
            violations.append(f"step {s.step}: epoch {s.epoch} outside [0, {schedule.epochs})")
        size = len(s.batch)
        if size > n:
            violations.append(f"step {s.step}: batch has {size} ids, exceeds batch_size {n}")
        if schedule.tail_policy is TailPolicy.DROP and size != n:
            violations.append(
                f"step {s.step}: short batch of {size} ids under tail policy Drop"
            )
        if s.batch.is_tail != (size < n):
            violations.append(f"step {s.step}: is_tail flag inconsistent with batch size")
        if schedule.mode is ScheduleMode.VANILLA:
            if s.batch.group is not None:
                violations.append(
                    f"step {s.step}: vanilla batches carry no group, found {s.batch.group!r}"
                )
        else:
            if s.batch.group not in grouped.groups:
                violations.append(f"step {s.step}: unknown group {s.batch.group!r}")
            else:
                foreign = [i for i in s.batch.ids if id_to_group.get(i) != s.batch.group]
                if foreign:
                    violations.append(
                        f"step {s.step}: batch labeled {s.batch.group!r} mixes in "
                        f"{len(foreign)} id(s) from other groups (first: {foreign[0]!r})"
                    )

    dropped: list[int] = []
    for epoch in range(schedule.epochs):
        epoch_steps = schedule.steps_for_epoch(epoch)
        seen: dict[str, int] = {}
        for s in epoch_steps:
            for i in s.batch.ids:
                seen[i] = seen.get(i, 0) + 1
        dupes = [i for i, c in seen.items() if c > 1]
        if dupes:
            violations.append(
                f"epoch {epoch}: {len(dupes)} id(s) scheduled more than once "
                f"(first: {dupes[0]!r})"
            )
        unknown = [i for i in seen if i not in all_ids]
        if unknown:
            violations.append(
                f"epoch {epoch}: {len(unknown)} id(s) not in the grouping "
                f"(first: {unknown[0]!r})"
            )
        missing = len(all_ids) - len(set(seen) & all_ids)
        dropped.append(missing)
        if missing != expected_drop:
            violations.append(
                f"epoch {epoch}: {missing} id(s) missing, expected {expected_drop} "
                f"under tail policy {schedule.tail_policy.value}"
            )
        if schedule.mode is ScheduleMode.SEQUENTIAL:
            run_labels = [s.batch.group for s in epoch_steps]
            compact = [g for i, g in enumerate(run_labels) if i == 0 or run_labels[i - 1] != g]
            repeats = [g for g in set(compact) if compact.count(g) > 1]
            if repeats:
                violations.append(
                    f"epoch {epoch}: group {repeats[0]!r} is interleaved, "
                    "sequential mode requires contiguous group runs"
                )

    return VerificationReport(
        ok=not violations,
        violations=tuple(violations),
        epochs_checked=schedule.epochs,
        steps_checked=len(schedule.steps),
        dropped_per_epoch=tuple(dropped),
        expected_dropped_per_epoch=expected_drop,
        content_hash=schedule.content_hash(),
    )

"""Data builders shared across the test modules."""

from __future__ import annotations

import json

import numpy as np

from groupsched.ingest import Dataset, Record


def make_record(
    rid: str,
    instruction: str = "summarize the passage",
    inp: str = "",
    output: str = "a short answer",
    task: str | None = None,
    **extra,
) -> Record:
    return Record(id=rid, instruction=instruction, input=inp, target=output,
                  task=task, extra=extra)


def make_dataset(n: int, tasks: list[str] | None = None, seed: int = 0) -> Dataset:
    """n records; when tasks is given they are assigned round-robin."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        words = int(rng.integers(1, 40))
        records.append(
            make_record(
                f"r{i:04d}",
                instruction=f"instruction {i}",
                inp="ctx " * int(rng.integers(0, 5)),
                output=" ".join(f"w{j}" for j in range(words)),
                task=tasks[i % len(tasks)] if tasks else None,
            )
        )
    return Dataset(records=tuple(records))


def write_dataset_jsonl(path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")


def dataset_rows(n: int, tasks: list[str] | None = None) -> list[dict]:
    rows = []
    for i in range(n):
        row = {
            "id": f"r{i:04d}",
            "instruction": f"instruction {i}",
            "input": "",
            "output": f"answer {i} " + "pad " * (i % 7),
        }
        if tasks:
            row["task"] = tasks[i % len(tasks)]
        rows.append(row)
    return rows

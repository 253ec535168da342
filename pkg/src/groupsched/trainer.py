"""Desk-scale trainer: a softmax linear classifier driven by a Schedule.

The model is a stand-in for the fine-tuned LLM — the batching contract under
test is model-agnostic — so training is plain SGD over mean cross-entropy,
stepping through batches in exact manifest order. Everything here is a pure
function of its inputs; identical (schedule, examples, config) reproduce the
loss trace bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import jsonio, kernels
from .errors import TrainerError
from .grouping import GroupedDataset
from .rng import derive_rng
from .scheduler import Schedule

DEFAULT_LEARNING_RATE = 0.1


@dataclass(frozen=True)
class ToyExample:
    id: str
    features: np.ndarray
    label: int
    group: str

    def __post_init__(self):
        arr = np.asarray(self.features, dtype=np.float64)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise TrainerError(f"example {self.id!r} needs a finite 1-D feature vector")
        object.__setattr__(self, "features", arr)
        if self.label < 0:
            raise TrainerError(f"example {self.id!r} has negative class {self.label}")


@dataclass
class ToyModel:
    weights: np.ndarray  # (C, D)
    bias: np.ndarray  # (C,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1 \
                or self.weights.shape[0] != self.bias.shape[0]:
            raise TrainerError(
                f"model shapes disagree: weights {self.weights.shape}, bias {self.bias.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise TrainerError("model parameters must be finite")

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "ToyModel":
        return ToyModel(self.weights.copy(), self.bias.copy())

    @classmethod
    def zeros(cls, num_classes: int, dim: int) -> "ToyModel":
        return cls(np.zeros((num_classes, dim)), np.zeros(num_classes))

    @classmethod
    def gaussian(cls, num_classes: int, dim: int, seed: int, scale: float = 0.01) -> "ToyModel":
        rng = derive_rng(seed, 3)
        return cls(
            scale * rng.standard_normal((num_classes, dim)),
            scale * rng.standard_normal(num_classes),
        )


def _stack(model: ToyModel, batch: Sequence[ToyExample]) -> tuple[np.ndarray, np.ndarray]:
    if not batch:
        raise TrainerError("batch is empty")
    X = np.stack([ex.features for ex in batch])
    y = np.array([ex.label for ex in batch], dtype=np.int64)
    if X.shape[1] != model.dim:
        raise TrainerError(
            f"feature dim {X.shape[1]} does not match model dim {model.dim}"
        )
    bad = [ex.id for ex in batch if ex.label >= model.num_classes]
    if bad:
        raise TrainerError(
            f"class index out of range for {bad[0]!r} (model has {model.num_classes} classes)"
        )
    return X, y


def batch_loss(model: ToyModel, batch: Sequence[ToyExample]) -> float:
    """Mean negative log softmax probability of the true classes."""
    X, y = _stack(model, batch)
    loss, _, _ = kernels.softmax_xent(X, y, model.weights, model.bias)
    return loss


def gradient(model: ToyModel, batch: Sequence[ToyExample]) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of batch_loss w.r.t. (weights, bias)."""
    X, y = _stack(model, batch)
    _, dW, db = kernels.softmax_xent(X, y, model.weights, model.bias)
    return dW, db


def predict(model: ToyModel, features: np.ndarray) -> np.ndarray:
    logits = features @ model.weights.T + model.bias
    return np.argmax(logits, axis=1)


def evaluate(model: ToyModel, examples: Sequence[ToyExample]) -> dict[str, float]:
    """Training-set accuracy per group."""
    per_group: dict[str, list[ToyExample]] = {}
    for ex in examples:
        per_group.setdefault(ex.group, []).append(ex)
    out = {}
    for group, members in per_group.items():
        X = np.stack([ex.features for ex in members])
        y = np.array([ex.label for ex in members])
        out[group] = float(np.mean(predict(model, X) == y))
    return out


def examples_fingerprint(examples: Sequence[ToyExample]) -> str:
    h = hashlib.sha256()
    for ex in sorted(examples, key=lambda e: e.id):
        h.update(ex.id.encode("utf-8"))
        h.update(b"\x00")
        h.update(str(ex.label).encode("ascii"))
        h.update(ex.group.encode("utf-8"))
        h.update(np.ascontiguousarray(ex.features).tobytes())
    return h.hexdigest()


def synthesize_multitask(
    num_tasks: int,
    per_task: int,
    dim: int,
    num_classes: int,
    noise_sigma: float,
    seed: int,
    separation: float = 3.0,
) -> tuple[list[ToyExample], GroupedDataset]:
    """Synthetic multi-task classification data plus its task grouping.

    Each task owns num_classes Gaussian cluster centers (unit directions
    scaled by `separation`) and its own cluster->class permutation; example i
    of a task sits on cluster i mod num_classes plus isotropic noise. With
    noise_sigma=0 every example lies exactly on its center.
    """
    if num_tasks < 1 or per_task < 1 or dim < 1:
        raise TrainerError(
            f"sizes must be positive, got tasks={num_tasks} per_task={per_task} dim={dim}"
        )
    if num_classes < 2:
        raise TrainerError(f"need at least 2 classes, got {num_classes}")
    if noise_sigma < 0:
        raise TrainerError(f"noise_sigma must be >= 0, got {noise_sigma}")

    rng = derive_rng(seed, 2)
    examples: list[ToyExample] = []
    groups: dict[str, tuple[str, ...]] = {}
    for t in range(num_tasks):
        task = f"task{t}"
        centers = rng.standard_normal((num_classes, dim))
        centers /= np.linalg.norm(centers, axis=1, keepdims=True)
        centers *= separation
        class_of_cluster = rng.permutation(num_classes)
        ids = []
        for i in range(per_task):
            cluster = i % num_classes
            feats = centers[cluster]
            if noise_sigma > 0:
                feats = feats + noise_sigma * rng.standard_normal(dim)
            rid = f"{task}-{i:04d}"
            examples.append(
                ToyExample(
                    id=rid,
                    features=feats,
                    label=int(class_of_cluster[cluster]),
                    group=task,
                )
            )
            ids.append(rid)
        groups[task] = tuple(ids)

    grouped = GroupedDataset(
        strategy="task",
        params={"synthetic": True, "num_tasks": num_tasks, "per_task": per_task},
        groups=groups,
    )
    return examples, grouped


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    init: str = "zeros"  # or "gaussian"
    init_seed: int = 0
    init_scale: float = 0.01
    num_classes: int | None = None  # inferred from examples when None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise TrainerError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.init not in ("zeros", "gaussian"):
            raise TrainerError(f"unknown init {self.init!r} (expected zeros or gaussian)")

    def to_json(self) -> dict[str, Any]:
        return {
            "learning_rate": self.learning_rate,
            "init": self.init,
            "init_seed": self.init_seed,
            "init_scale": self.init_scale,
            "num_classes": self.num_classes,
        }


@dataclass(frozen=True)
class TrainRun:
    mode: str
    config: TrainConfig
    schedule_seed: int
    loss_trace: tuple[float, ...]
    trace_meta: tuple[tuple[int, int, str | None], ...]  # (epoch, step, group) per loss
    per_task_accuracy: Mapping[str, float]
    examples_hash: str
    final_model: ToyModel = field(compare=False)

    @property
    def final_loss(self) -> float:
        return self.loss_trace[-1]

    def header_json(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "schedule_seed": self.schedule_seed,
            "steps": len(self.loss_trace),
            "examples_hash": self.examples_hash,
            "per_task_accuracy": dict(sorted(self.per_task_accuracy.items())),
            "config": self.config.to_json(),
        }


def train(schedule: Schedule, examples: Sequence[ToyExample], config: TrainConfig) -> TrainRun:
    """Run SGD through the schedule, recording each batch's loss pre-update."""
    by_id: dict[str, ToyExample] = {}
    for ex in examples:
        if ex.id in by_id:
            raise TrainerError(f"duplicate example id {ex.id!r}")
        by_id[ex.id] = ex
    if not by_id:
        raise TrainerError("no examples to train on")

    num_classes = config.num_classes
    if num_classes is None:
        num_classes = max(ex.label for ex in examples) + 1
    dim = next(iter(by_id.values())).features.shape[0]
    if config.init == "zeros":
        model = ToyModel.zeros(num_classes, dim)
    else:
        model = ToyModel.gaussian(num_classes, dim, config.init_seed, config.init_scale)

    losses: list[float] = []
    meta: list[tuple[int, int, str | None]] = []
    for s in schedule.steps:
        try:
            batch = [by_id[i] for i in s.batch.ids]
        except KeyError as exc:
            raise TrainerError(
                f"step {s.step}: schedule id {exc.args[0]!r} has no example",
                step=s.step,
            ) from None
        X, y = _stack(model, batch)
        loss, dW, db = kernels.softmax_xent(X, y, model.weights, model.bias)
        losses.append(loss)
        meta.append((s.epoch, s.step, s.batch.group))
        model.weights -= config.learning_rate * dW
        model.bias -= config.learning_rate * db

    return TrainRun(
        mode=schedule.mode.value,
        config=config,
        schedule_seed=schedule.seed,
        loss_trace=tuple(losses),
        trace_meta=tuple(meta),
        per_task_accuracy=evaluate(model, examples),
        examples_hash=examples_fingerprint(examples),
        final_model=model,
    )


def save_run(run: TrainRun, path: str | Path, config: dict | None = None) -> None:
    """Manifest-style export: header line, then {epoch, step, group, loss}."""
    header = run.header_json()
    if config is not None:
        header["cli_config"] = config
    lines: list[dict] = [header]
    for (epoch, step, group), loss in zip(run.trace_meta, run.loss_trace):
        lines.append({"epoch": epoch, "step": step, "group": group, "loss": loss})
    jsonio.write_jsonl(path, lines)


@dataclass(frozen=True)
class ComparisonReport:
    mode_a: str
    mode_b: str
    final_loss_a: float
    final_loss_b: float
    per_task_accuracy: Mapping[str, tuple[float, float]]
    curve_a: tuple[float, ...]
    curve_b: tuple[float, ...]

    @property
    def loss_gap(self) -> float:
        """final_loss_a - final_loss_b; sign reported, never asserted."""
        return self.final_loss_a - self.final_loss_b

    def to_json(self) -> dict[str, Any]:
        return {
            "mode_a": self.mode_a,
            "mode_b": self.mode_b,
            "final_loss_a": self.final_loss_a,
            "final_loss_b": self.final_loss_b,
            "loss_gap": self.loss_gap,
            "per_task_accuracy": {
                task: {"a": a, "b": b}
                for task, (a, b) in sorted(self.per_task_accuracy.items())
            },
            "curves": {"a": list(self.curve_a), "b": list(self.curve_b)},
        }


def compare_runs(run_a: TrainRun, run_b: TrainRun) -> ComparisonReport:
    if run_a.examples_hash != run_b.examples_hash:
        raise TrainerError(
            "runs were trained on different example sets and cannot be compared"
        )
    tasks = sorted(set(run_a.per_task_accuracy) | set(run_b.per_task_accuracy))
    table = {
        t: (run_a.per_task_accuracy.get(t, 0.0), run_b.per_task_accuracy.get(t, 0.0))
        for t in tasks
    }
    return ComparisonReport(
        mode_a=run_a.mode,
        mode_b=run_b.mode,
        final_loss_a=run_a.final_loss,
        final_loss_b=run_b.final_loss,
        per_task_accuracy=table,
        curve_a=run_a.loss_trace,
        curve_b=run_b.loss_trace,
    )


def save_comparison(report: ComparisonReport, path: str | Path) -> None:
    jsonio.write_json(path, report.to_json())

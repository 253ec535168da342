"""Command-line surface wiring the pipeline stages together.

Usage:
    groupsched group --dataset data.jsonl --strategy length --bins 8 --out run/
    groupsched schedule run/grouped.json --batch-size 32 --epochs 3 --seed 7 --out run/
    groupsched train-demo --epochs 3 --seed 7 --out run/
    groupsched analyze distance --embeddings emb.jsonl --out run/
    groupsched analyze categories run/categories.json --grouped run/grouped.json --out run/

Stages couple only through files, every artifact embeds the config that
produced it, and reruns with identical flags write identical bytes. Exit
codes: 0 success, 2 input/usage error (machine-readable object on stderr),
70 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, jsonio
from .analysis import (
    DEFAULT_RUNS,
    DEFAULT_SAMPLE_SIZE,
    embedding_category_count,
    group_stats,
    grouped_category_count,
    mean_pairwise_distance,
)
from .errors import ToolkitError
from .grouping import (
    DEFAULT_K,
    DEFAULT_NUM_BINS,
    EmbeddingTable,
    ReferenceSet,
    group_by_embedding,
    group_by_length,
    group_by_task,
    load_grouped,
    save_grouped,
)
from .ingest import DEFAULT_LENGTH_BASIS, LengthBasis, load_dataset
from .scheduler import (
    DEFAULT_BATCH_SIZE,
    ScheduleMode,
    TailPolicy,
    build_schedule,
    save_schedule,
    verify_schedule,
)
from .trainer import (
    DEFAULT_LEARNING_RATE,
    TrainConfig,
    compare_runs,
    save_comparison,
    save_run,
    synthesize_multitask,
    train,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 70


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_group(args) -> int:
    dataset = load_dataset(args.dataset)
    basis = LengthBasis(args.length_basis)
    config = {
        "command": "group",
        "dataset": args.dataset,
        "strategy": args.strategy,
        "bins": args.bins,
        "length_basis": args.length_basis,
        "k": args.k,
        "reference": args.reference,
        "embeddings": args.embeddings,
    }
    if args.strategy == "task":
        grouped = group_by_task(dataset)
    elif args.strategy == "length":
        grouped = group_by_length(dataset, args.bins, basis)
    else:
        if not args.embeddings or not args.reference:
            raise ToolkitError(
                "--strategy embedding needs both --embeddings and --reference"
            )
        table = EmbeddingTable.load(args.embeddings)
        reference = ReferenceSet.load(args.reference)
        grouped = group_by_embedding(dataset, table, reference, args.k)

    out = _out_dir(args)
    save_grouped(grouped, out / "grouped.json", config)
    stats = group_stats(grouped, dataset, basis)
    jsonio.write_json(out / "stats.json", {**stats.to_json(), "config": config})
    print(f"grouped {len(dataset)} records into {len(grouped.groups)} groups "
          f"-> {out / 'grouped.json'}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    grouped = load_grouped(args.grouped)
    mode = ScheduleMode.parse(args.mode)
    tail = TailPolicy.parse(args.tail)
    config = {
        "command": "schedule",
        "grouped": args.grouped,
        "batch_size": args.batch_size,
        "epochs": args.epochs,
        "seed": args.seed,
        "tail": args.tail,
        "mode": args.mode,
        "repartition": not args.no_repartition,
    }
    schedule = build_schedule(
        grouped,
        args.batch_size,
        args.epochs,
        args.seed,
        tail,
        mode,
        repartition_each_epoch=not args.no_repartition,
    )
    out = _out_dir(args)
    save_schedule(schedule, out / "schedule.jsonl", config)
    report = verify_schedule(schedule, grouped)
    jsonio.write_json(out / "verification.json", {**report.to_json(), "config": config})
    if not report.ok:
        raise RuntimeError(
            f"freshly built schedule failed verification: {report.violations[0]}"
        )
    print(f"scheduled {len(schedule.steps)} steps over {schedule.epochs} epoch(s) "
          f"-> {out / 'schedule.jsonl'}")
    return EXIT_OK


def cmd_train_demo(args) -> int:
    config = {
        "command": "train-demo",
        "tasks": args.tasks,
        "per_task": args.per_task,
        "dim": args.dim,
        "classes": args.classes,
        "noise": args.noise,
        "lr": args.lr,
        "batch_size": args.batch_size,
        "epochs": args.epochs,
        "seed": args.seed,
        "tail": args.tail,
    }
    examples, grouped = synthesize_multitask(
        args.tasks, args.per_task, args.dim, args.classes, args.noise, args.seed
    )
    tail = TailPolicy.parse(args.tail)
    train_config = TrainConfig(learning_rate=args.lr)
    runs = {}
    for mode in (ScheduleMode.COMMONIT, ScheduleMode.VANILLA):
        schedule = build_schedule(
            grouped, args.batch_size, args.epochs, args.seed, tail, mode
        )
        runs[mode] = train(schedule, examples, train_config)

    out = _out_dir(args)
    save_run(runs[ScheduleMode.COMMONIT], out / "run_commonit.jsonl", config)
    save_run(runs[ScheduleMode.VANILLA], out / "run_vanilla.jsonl", config)
    report = compare_runs(runs[ScheduleMode.COMMONIT], runs[ScheduleMode.VANILLA])
    jsonio.write_json(out / "comparison.json", {**report.to_json(), "config": config})
    print(f"final loss {report.mode_a}={report.final_loss_a:.6f} "
          f"{report.mode_b}={report.final_loss_b:.6f} -> {out / 'comparison.json'}")
    return EXIT_OK


def cmd_analyze_distance(args) -> int:
    table = EmbeddingTable.load(args.embeddings)
    value = mean_pairwise_distance(list(table.vectors.values()), args.metric)
    config = {
        "command": "analyze distance",
        "embeddings": args.embeddings,
        "metric": args.metric,
    }
    out = _out_dir(args)
    jsonio.write_json(
        out / "distance.json",
        {
            "metric": args.metric,
            "count": len(table),
            "mean_distance": value,
            "config": config,
        },
    )
    print(f"mean {args.metric} distance over {len(table)} vectors: {value:.6f}")
    return EXIT_OK


def cmd_analyze_categories(args) -> int:
    categories = load_grouped(args.categories)
    labels = categories.id_to_group()
    config = {
        "command": "analyze categories",
        "categories": args.categories,
        "grouped": args.grouped,
        "sample_size": args.sample_size,
        "runs": args.runs,
        "seed": args.seed,
    }
    if args.grouped:
        sampling = load_grouped(args.grouped)
        result = grouped_category_count(
            sampling, labels, args.sample_size, args.runs, args.seed
        )
    else:
        result = embedding_category_count(
            categories.all_ids(), labels, args.sample_size, args.runs, args.seed
        )
    out = _out_dir(args)
    jsonio.write_json(out / "categories.json", {**result.to_json(), "config": config})
    print(f"mean distinct categories: {result.mean:.2f} -> {out / 'categories.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupsched",
        description="Group instruction-tuning data and build deterministic "
                    "single-group batch schedules.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("group", help="partition a dataset into labeled groups")
    p.add_argument("--dataset", required=True, help="dataset JSONL file")
    p.add_argument("--strategy", required=True, choices=["task", "length", "embedding"])
    p.add_argument("--bins", type=int, default=DEFAULT_NUM_BINS,
                   help="quantile bins for --strategy length")
    p.add_argument("--length-basis", default=DEFAULT_LENGTH_BASIS.value,
                   choices=[b.value for b in LengthBasis])
    p.add_argument("--k", type=int, default=DEFAULT_K,
                   help="neighbors for --strategy embedding")
    p.add_argument("--reference", help="labeled reference vectors (JSONL)")
    p.add_argument("--embeddings", help="record embeddings (JSONL)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("schedule", help="build and verify a batch schedule")
    p.add_argument("grouped", help="grouped JSON file from `group`")
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tail", default="keep", choices=["keep", "drop"])
    p.add_argument("--mode", default="commonit",
                   choices=["commonit", "vanilla", "sequential"])
    p.add_argument("--no-repartition", action="store_true",
                   help="reuse the epoch-0 batches every epoch (reshuffle order only)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("train-demo",
                       help="train the toy classifier under two schedule modes")
    p.add_argument("--tasks", type=int, default=3)
    p.add_argument("--per-task", type=int, default=120)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--lr", type=float, default=DEFAULT_LEARNING_RATE)
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tail", default="keep", choices=["keep", "drop"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_demo)

    p = sub.add_parser("analyze", help="dataset-level studies")
    asub = p.add_subparsers(dest="analysis", required=True)

    d = asub.add_parser("distance", help="mean pairwise distance of embeddings")
    d.add_argument("--embeddings", required=True)
    d.add_argument("--metric", default="euclidean", choices=["euclidean", "cosine"])
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_analyze_distance)

    c = asub.add_parser("categories",
                        help="distinct-category counts of random samples")
    c.add_argument("categories", help="grouped JSON whose groups are the categories")
    c.add_argument("--grouped", help="sample within this grouping instead of the pool")
    c.add_argument("--sample-size", type=int, default=DEFAULT_SAMPLE_SIZE)
    c.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_analyze_categories)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as err:
        print(jsonio.dumps_compact(err.to_json()), file=sys.stderr)
        return EXIT_INPUT
    except Exception as err:  # pragma: no cover - exercised via CLI tests
        print(
            jsonio.dumps_compact({"error": type(err).__name__, "message": str(err)}),
            file=sys.stderr,
        )
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface for the embedding exporter.

Usage:
    embed-export dataset --dataset data.jsonl --out embeddings.jsonl
    embed-export reference --labeled refs.jsonl --out reference.jsonl
    embed-export replay --manifest schedule.jsonl

Exit codes: 0 success, 2 input problem (JSON error report on stderr),
70 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .encoder import DEFAULT_ENCODE_BATCH, DEFAULT_MODEL, EncoderConfig
from .errors import ExporterError
from .export import DEFAULT_TEXT_FIELD, TEXT_FIELDS, export_embeddings, export_reference
from .replay import replay_schedule


def _encoder_config(args: argparse.Namespace) -> EncoderConfig:
    return EncoderConfig(model=args.model, batch_size=args.batch_size,
                         device=args.device)


def cmd_dataset(args: argparse.Namespace) -> int:
    summary = export_embeddings(args.dataset, args.out,
                                config=_encoder_config(args), field=args.field)
    print(f"embedded {summary.count} records (dim {summary.dim}, "
          f"field {summary.field}) -> {args.out}")
    return 0


def cmd_reference(args: argparse.Namespace) -> int:
    summary = export_reference(args.labeled, args.out,
                               config=_encoder_config(args))
    print(f"embedded {summary.count} reference entries (dim {summary.dim}) "
          f"-> {args.out}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    for step in replay_schedule(args.manifest):
        print(json.dumps(
            {"epoch": step.epoch, "step": step.step, "group": step.group,
             "ids": list(step.ids)},
            ensure_ascii=False, separators=(",", ":"),
        ))
    return 0


def _add_encoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default=DEFAULT_MODEL,
                   help="pretrained sentence-encoder identifier")
    p.add_argument("--batch-size", type=int, default=DEFAULT_ENCODE_BATCH,
                   help="texts per encoder forward pass")
    p.add_argument("--device", default=None,
                   help="device hint for the encoder (e.g. cpu, cuda)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="export sentence embeddings and replay batch schedules",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="embed every record of a dataset file")
    p.add_argument("--dataset", required=True, help="dataset JSONL file")
    p.add_argument("--field", default=DEFAULT_TEXT_FIELD, choices=TEXT_FIELDS,
                   help="which text to embed")
    _add_encoder_flags(p)
    p.add_argument("--out", required=True, help="embedding JSONL to write")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("reference", help="embed labeled reference texts")
    p.add_argument("--labeled", required=True,
                   help='JSONL with one {"label", "text"} object per line')
    _add_encoder_flags(p)
    p.add_argument("--out", required=True, help="reference JSONL to write")
    p.set_defaults(func=cmd_reference)

    p = sub.add_parser("replay",
                       help="print a schedule's steps in step order, one JSON "
                            "object per line")
    p.add_argument("--manifest", required=True, help="schedule JSONL manifest")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExporterError as e:
        print(json.dumps(e.to_json(), ensure_ascii=False, separators=(",", ":")),
              file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0
    except Exception as e:  # pragma: no cover - bug path
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 70


if __name__ == "__main__":
    raise SystemExit(main())

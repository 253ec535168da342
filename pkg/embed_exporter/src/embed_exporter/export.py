"""Export dataset and reference embeddings in the toolkit's file formats."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoder import Encoder, EncoderConfig, load_encoder
from .errors import ExporterError
from .formats import (
    SourceRecord,
    read_dataset,
    read_labeled_texts,
    write_embeddings,
    write_reference,
)

TEXT_FIELDS = ("source", "instruction", "target", "full")
DEFAULT_TEXT_FIELD = "source"


def select_text(record: SourceRecord, field: str = DEFAULT_TEXT_FIELD) -> str:
    """The text to embed for a record.

    "source" is the instruction plus the input (the default: supervision
    targets stay out of the embedding); "full" appends the target as well.
    """
    if field == "source":
        return f"{record.instruction} {record.input}" if record.input else record.instruction
    if field == "instruction":
        return record.instruction
    if field == "target":
        return record.target
    if field == "full":
        source = select_text(record, "source")
        return f"{source} {record.target}"
    raise ExporterError(
        f"unknown text field {field!r}; expected one of {', '.join(TEXT_FIELDS)}"
    )


@dataclass(frozen=True)
class ExportSummary:
    count: int
    dim: int
    field: str | None
    model: str


def _encode_rows(texts: list[str], config: EncoderConfig | None,
                 encoder: Encoder | None) -> np.ndarray:
    if encoder is None:
        encoder = load_encoder(config or EncoderConfig())
    matrix = np.asarray(encoder(texts))
    if matrix.ndim != 2 or matrix.shape[0] != len(texts):
        raise ExporterError(
            f"encoder returned shape {matrix.shape} for {len(texts)} texts; "
            "expected one row per text"
        )
    return matrix


def export_embeddings(
    dataset_path: str | Path,
    out_path: str | Path,
    config: EncoderConfig | None = None,
    field: str = DEFAULT_TEXT_FIELD,
    encoder: Encoder | None = None,
) -> ExportSummary:
    """Embed every record of a dataset file and write an embedding table.

    One {"id", "vector"} line per record, in dataset order, vectors rounded
    to float32. Pass `encoder` to reuse a loaded model (or substitute any
    texts -> matrix callable); otherwise `config` decides what to load.
    """
    records = read_dataset(dataset_path)
    if field not in TEXT_FIELDS:
        raise ExporterError(
            f"unknown text field {field!r}; expected one of {', '.join(TEXT_FIELDS)}"
        )
    matrix = _encode_rows([select_text(r, field) for r in records], config, encoder)
    count = write_embeddings(out_path, zip((r.id for r in records), matrix))
    return ExportSummary(
        count=count,
        dim=int(matrix.shape[1]),
        field=field,
        model=(config or EncoderConfig()).model if encoder is None else "<injected>",
    )


def export_reference(
    labeled_path: str | Path,
    out_path: str | Path,
    config: EncoderConfig | None = None,
    encoder: Encoder | None = None,
) -> ExportSummary:
    """Embed labeled reference texts and write a reference table.

    One {"label", "vector"} line per input line, in input order; labels may
    repeat (several exemplars of one category).
    """
    entries = read_labeled_texts(labeled_path)
    matrix = _encode_rows([e.text for e in entries], config, encoder)
    count = write_reference(out_path, zip((e.label for e in entries), matrix))
    return ExportSummary(
        count=count,
        dim=int(matrix.shape[1]),
        field=None,
        model=(config or EncoderConfig()).model if encoder is None else "<injected>",
    )

"""Sentence-embedding export and schedule replay for the groupsched formats.

This package is the bridge between the grouping/scheduling toolkit and the
outside world: it turns dataset records and labeled reference texts into
the embedding/reference JSONL files the toolkit's embedding grouping
consumes, and replays schedule manifests as batch id streams for an
external fine-tuning framework's data loader. All coupling is through the
files; nothing here imports the toolkit.
"""

from .encoder import DEFAULT_ENCODE_BATCH, DEFAULT_MODEL, Encoder, EncoderConfig, load_encoder
from .errors import ExporterError
from .export import (
    DEFAULT_TEXT_FIELD,
    TEXT_FIELDS,
    ExportSummary,
    export_embeddings,
    export_reference,
    select_text,
)
from .formats import (
    LabeledText,
    SourceRecord,
    read_dataset,
    read_labeled_texts,
    write_embeddings,
    write_reference,
)
from .replay import ReplayStep, replay_schedule

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_ENCODE_BATCH",
    "DEFAULT_MODEL",
    "DEFAULT_TEXT_FIELD",
    "Encoder",
    "EncoderConfig",
    "ExportSummary",
    "ExporterError",
    "LabeledText",
    "ReplayStep",
    "SourceRecord",
    "TEXT_FIELDS",
    "export_embeddings",
    "export_reference",
    "load_encoder",
    "read_dataset",
    "read_labeled_texts",
    "replay_schedule",
    "select_text",
    "write_embeddings",
    "write_reference",
    "__version__",
]

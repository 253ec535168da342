"""Commonality-aware grouping and batch scheduling for instruction data.

The pipeline: load a dataset, partition it into groups (by task label,
length quantile, or nearest-neighbor embedding category), build a
deterministic multi-epoch schedule whose mini-batches each come from a single
group, then train or analyze on top of the manifest.
"""

__version__ = "0.1.0"

from .analysis import (
    CategoryCountResult,
    GroupedCategoryCounts,
    StatsReport,
    embedding_category_count,
    group_stats,
    grouped_category_count,
    mean_pairwise_distance,
)
from .errors import (
    AnalysisError,
    DatasetError,
    FileFormatError,
    GroupingError,
    ScheduleError,
    ToolkitError,
    TrainerError,
)
from .grouping import (
    EmbeddingTable,
    GroupedDataset,
    ReferenceSet,
    cosine_similarity,
    group_by_embedding,
    group_by_length,
    group_by_task,
    knn_classify,
    load_grouped,
    save_grouped,
)
from .ingest import (
    Dataset,
    LengthBasis,
    Record,
    ValidationReport,
    load_dataset,
    record_length,
    save_dataset,
    validate_dataset,
)
from .rng import GENERATOR_ID, derive_rng
from .scheduler import (
    Batch,
    Schedule,
    ScheduleMode,
    ScheduleStep,
    TailPolicy,
    VerificationReport,
    build_partitions,
    build_schedule,
    load_schedule,
    save_schedule,
    shuffle_schedule,
    verify_schedule,
)
from .trainer import (
    ComparisonReport,
    ToyExample,
    ToyModel,
    TrainConfig,
    TrainRun,
    batch_loss,
    compare_runs,
    evaluate,
    gradient,
    synthesize_multitask,
    train,
)

__all__ = [
    "GENERATOR_ID",
    "AnalysisError",
    "Batch",
    "CategoryCountResult",
    "ComparisonReport",
    "Dataset",
    "DatasetError",
    "EmbeddingTable",
    "FileFormatError",
    "GroupedCategoryCounts",
    "GroupedDataset",
    "GroupingError",
    "LengthBasis",
    "Record",
    "ReferenceSet",
    "Schedule",
    "ScheduleError",
    "ScheduleMode",
    "ScheduleStep",
    "StatsReport",
    "TailPolicy",
    "ToolkitError",
    "ToyExample",
    "ToyModel",
    "TrainConfig",
    "TrainRun",
    "TrainerError",
    "ValidationReport",
    "VerificationReport",
    "batch_loss",
    "build_partitions",
    "build_schedule",
    "compare_runs",
    "cosine_similarity",
    "derive_rng",
    "embedding_category_count",
    "evaluate",
    "gradient",
    "group_by_embedding",
    "group_by_length",
    "group_by_task",
    "group_stats",
    "grouped_category_count",
    "knn_classify",
    "load_dataset",
    "load_grouped",
    "load_schedule",
    "mean_pairwise_distance",
    "record_length",
    "save_dataset",
    "save_grouped",
    "save_schedule",
    "shuffle_schedule",
    "synthesize_multitask",
    "train",
    "validate_dataset",
    "verify_schedule",
]

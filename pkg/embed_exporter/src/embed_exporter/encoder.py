"""Sentence-encoder wrapper.

The heavyweight dependency (sentence-transformers, and torch underneath) is
imported lazily so that schedule replay and file-format work never pay for
it, and so the package imports cleanly on machines without the encoder
stack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ExporterError

DEFAULT_MODEL = "sentence-transformers/all-mpnet-base-v2"
DEFAULT_ENCODE_BATCH = 32

# An encoder maps a list of texts to a (len(texts), dim) float array, row i
# encoding text i. Anything with that shape works, which is what the tests
# use to stay independent of model downloads.
Encoder = Callable[[Sequence[str]], np.ndarray]


@dataclass(frozen=True)
class EncoderConfig:
    """Which pretrained sentence encoder to run, and how."""

    model: str = DEFAULT_MODEL
    batch_size: int = DEFAULT_ENCODE_BATCH
    device: str | None = None

    def __post_init__(self):
        if not self.model:
            raise ExporterError("encoder model identifier must be non-empty")
        if self.batch_size < 1:
            raise ExporterError(f"encode batch size must be >= 1, got {self.batch_size}")


def load_encoder(config: EncoderConfig) -> Encoder:
    """Load the pretrained model and return a deterministic encode callable.

    Inference runs in evaluation mode with gradients disabled; rows come
    back in input order regardless of any internal batching.
    """
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as e:
        raise ExporterError(
            "sentence-transformers is not installed; install it or pass an "
            "encoder callable explicitly"
        ) from e
    try:
        model = SentenceTransformer(config.model, device=config.device)
    except Exception as remote_error:
        # The hub may be unreachable while the model is fully cached; a
        # local-only load keeps cached models usable offline.
        try:
            model = SentenceTransformer(config.model, device=config.device,
                                        local_files_only=True)
        except Exception:
            raise ExporterError(
                f"could not load encoder model {config.model!r}: {remote_error}",
                model=config.model,
            ) from remote_error
    model.eval()

    def encode(texts: Sequence[str]) -> np.ndarray:
        return model.encode(
            list(texts),
            batch_size=config.batch_size,
            convert_to_numpy=True,
            normalize_embeddings=False,
            show_progress_bar=False,
        )

    return encode

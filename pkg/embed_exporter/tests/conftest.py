import hashlib
import json

import numpy as np
import pytest


def hash_encoder(texts, dim=8):
    """Deterministic stand-in encoder: one vector per text, equal texts give
    equal vectors. Keeps format/ordering tests independent of model
    downloads."""
    rows = []
    for text in texts:
        seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
        rows.append(np.random.default_rng(seed).standard_normal(dim))
    return np.asarray(rows)


@pytest.fixture
def encoder():
    return hash_encoder


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(name, objs):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as f:
            for obj in objs:
                f.write(json.dumps(obj) + "\n")
        return path

    return _write


@pytest.fixture
def dataset_file(write_jsonl):
    def _make(rows, name="data.jsonl"):
        return write_jsonl(name, rows)

    return _make

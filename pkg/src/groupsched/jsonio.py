"""JSON helpers for the line-delimited file formats.

All artifacts are UTF-8. Writers are deterministic: the same in-memory object
always produces the same bytes, which the pipeline relies on for its
byte-identical rerun guarantee.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import FileFormatError


def dumps_compact(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def write_json(path: str | Path, obj: Any) -> None:
    text = json.dumps(obj, ensure_ascii=False, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path: str | Path) -> Any:
    p = Path(path)
    if not p.exists():
        raise FileFormatError(f"file not found: {p}", path=str(p))
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{p}: invalid JSON: {e.msg}", path=str(p)) from e


def write_jsonl(path: str | Path, objs: Iterable[Any]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for obj in objs:
            f.write(dumps_compact(obj))
            f.write("\n")


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed object) pairs, failing fast on a bad line."""
    p = Path(path)
    if not p.exists():
        raise FileFormatError(f"file not found: {p}", path=str(p))
    with open(p, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                raise FileFormatError(
                    f"{p}: line {lineno}: blank line", path=str(p), line=lineno
                )
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise FileFormatError(
                    f"{p}: line {lineno}: invalid JSON: {e.msg}",
                    path=str(p),
                    line=lineno,
                ) from e


def require_object(obj: Any, path: str | Path, lineno: int) -> dict:
    if not isinstance(obj, dict):
        raise FileFormatError(
            f"{path}: line {lineno}: expected a JSON object, got {type(obj).__name__}",
            path=str(path),
            line=lineno,
        )
    return obj


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()

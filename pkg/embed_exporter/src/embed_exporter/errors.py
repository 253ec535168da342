"""Error type for the exporter; mirrors the primary toolkit's conventions."""

from __future__ import annotations

from typing import Any


class ExporterError(Exception):
    """Any input problem: bad files, bad flags, impossible configs."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict[str, Any]:
        return {"error": str(self), **self.details}

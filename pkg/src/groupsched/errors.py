"""Exception types shared across the toolkit.

Everything raised on purpose derives from ToolkitError, which carries a
machine-readable detail dict. The CLI maps ToolkitError to exit code 2 and
prints the JSON form on stderr; any other exception escaping a command is a
bug and exits 70.
"""

from __future__ import annotations

from typing import Any


class ToolkitError(Exception):
    """Base for failures caused by bad inputs, files or parameters."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "details": self.details,
        }


class FileFormatError(ToolkitError):
    """A line-delimited file could not be parsed (carries the line number)."""


class DatasetError(ToolkitError):
    """A dataset violates the record or dataset invariants."""


class GroupingError(ToolkitError):
    """Invalid grouping inputs: bad labels, vectors, bins or k."""


class ScheduleError(ToolkitError):
    """Invalid scheduling inputs or an unsatisfiable batch configuration."""


class TrainerError(ToolkitError):
    """Invalid training inputs."""


class AnalysisError(ToolkitError):
    """Invalid analysis inputs."""

"""Error type shared across the package.

Every failure the library raises on purpose is a FootfallError carrying a
machine-readable payload, so the CLI can serialize failures as JSON.
"""

from __future__ import annotations


class FootfallError(Exception):
    """Package-level error with a structured payload."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = dict(details)

    def to_dict(self) -> dict:
        return {"error": self.message, "details": self.details}

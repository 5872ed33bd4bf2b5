"""Shared error types and validation diagnostics."""

from __future__ import annotations

from dataclasses import dataclass


class ConfigError(Exception):
    """Structural configuration problem (bad key, bad combination, bad file)."""


class PhysicsError(ValueError):
    """A physical parameter violates a hard constraint (e.g. the FDA cap)."""


class TraceError(Exception):
    """A simulation trace is internally inconsistent."""

    def __init__(self, message: str, slot: int | None = None):
        super().__init__(message)
        self.slot = slot


@dataclass(frozen=True)
class Violation:
    """One violated invariant, reported instead of raised by validators.

    kind is "config" for structural problems and "physics" for parameter
    values outside their physically admissible range.
    """

    kind: str
    key: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.key}: {self.message}"

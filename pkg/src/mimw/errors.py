"""Diagnostics and exception types shared by the compiler passes and the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    site: str | None = None
    notes: tuple[str, ...] = ()
    severity: str = "error"

    def render(self, color: bool = False) -> str:
        head = f"{self.severity}[{self.code}]: {self.message}"
        if color:
            tint = "\x1b[31m" if self.severity == "error" else "\x1b[33m"
            head = f"{tint}{head}\x1b[0m"
        lines = [head]
        if self.site:
            lines.append(f"  --> {self.site}")
        for note in self.notes:
            lines.append(f"  note: {note}")
        return "\n".join(lines)


class ParseError(Exception):
    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        msg = f"{line}:{col}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class DiagnosticError(Exception):
    """Raised by a pass that cannot produce a program."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.render() for d in self.diagnostics))


class LayoutError(DiagnosticError):
    pass


class LegalityError(DiagnosticError):
    pass


class ValidationError(DiagnosticError):
    pass


@dataclass
class SimFault(Exception):
    """A halting simulation fault.

    ``kind`` is one of Deadlock, RaceDetected, CollectiveMismatch,
    CapacityExceeded, Malformed, StepLimit.
    """

    kind: str
    message: str
    details: dict[str, Any] = field(default_factory=dict)
    trace: list[dict] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        super().__init__(f"{self.kind}: {self.message}")

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"

"""
Exception hierarchy for osf-forge.

Every error carries the process exit code the CLI reports for it:
  1  input could not be parsed
  2  input parsed but is semantically invalid (or a checked property failed)
  3  a configured resource cap was exceeded
"""
from typing import Optional

from app.core.constants import EXIT_CAP, EXIT_PARSE, EXIT_SEMANTIC


class OsfForgeError(Exception):
    exit_code: int = EXIT_SEMANTIC

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# ── Input (exit 1) ──────────────────────────────────────────────


class InputError(OsfForgeError):
    exit_code = EXIT_PARSE


class UsageError(InputError):
    """Bad command-line usage or an unreadable input file."""


class NewickParseError(InputError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.reason = message
        self.position = position


class InvalidTreeError(InputError):
    pass


class InvalidForestError(InputError):
    pass


class LeafMapError(InputError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class OsfMapFormatError(InputError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NetworkFormatError(InputError):
    pass


# ── Semantic (exit 2) ───────────────────────────────────────────


class SemanticError(OsfForgeError):
    exit_code = EXIT_SEMANTIC


class UnknownNodeError(SemanticError):
    def __init__(self, node):
        super().__init__(f"Unknown node: {node!r}")
        self.node = node


class InvalidTripleError(SemanticError):
    pass


class InvalidOsfError(SemanticError):
    pass


class NotStrictError(SemanticError):
    pass


class InvalidIntrogressionSetError(SemanticError):
    def __init__(self, message: str, condition: Optional[str] = None):
        super().__init__(message)
        self.condition = condition


class InvalidPathError(SemanticError):
    pass


class NetworkAxiomError(SemanticError):
    pass


class PreconditionError(SemanticError):
    pass


class MalformedMoveError(SemanticError):
    pass


class BoundViolationError(SemanticError):
    pass


class InvariantViolationError(SemanticError):
    pass


# ── Resources (exit 3) ──────────────────────────────────────────


class CapExceededError(OsfForgeError):
    exit_code = EXIT_CAP

    def __init__(self, what: str, cap: int, needed: Optional[int] = None):
        detail = f"{what} exceeds cap {cap}"
        if needed is not None:
            detail += f" (needs {needed})"
        super().__init__(detail)
        self.what = what
        self.cap = cap
        self.needed = needed

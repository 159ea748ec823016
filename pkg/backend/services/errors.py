"""
Error types shared by every service.

Each error carries a stable DIAG code and the exit status the CLI uses.
"""
from typing import Optional


class ToolkitError(Exception):
    code = "error"
    exit_status = 1

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        self.message = message
        if code:
            self.code = code

    def diag(self) -> str:
        return f"DIAG {self.code} {self.message}".rstrip()


class InputError(ToolkitError):
    """Malformed input or a violated precondition (exit 1)."""
    code = "input-error"


class ParseError(InputError):
    code = "parse-error"

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"at {line}:{column} {message}")
        self.line = line
        self.column = column


class VocabularyError(InputError):
    code = "vocabulary-mismatch"


class GuardError(ToolkitError):
    """A configured cap was exceeded (exit 2). Never silently truncated."""
    code = "guard-exceeded"
    exit_status = 2


class NotCommutativeError(InputError):
    code = "not-commutative"

    def __init__(self, witness: str):
        super().__init__(f"witness={witness}")
        self.witness = witness


class NondeterminismError(InputError):
    code = "nondeterministic"

    def __init__(self, path: str, candidates: int):
        super().__init__(f"node={path or 'root'} candidates={candidates}")
        self.path = path
        self.candidates = candidates


class MissingKeyError(InputError):
    code = "missing-key"


def check_guard(value: int, cap: int, what: str) -> None:
    """Raise GuardError when value exceeds cap."""
    if value > cap:
        raise GuardError(f"{what}={value} cap={cap}")

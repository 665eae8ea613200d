"""Error types for the BASIC subset, carrying the classic error names."""

from __future__ import annotations


class BasicError(Exception):
    """Base class; `message` is the classic error name (e.g. "SYNTAX")."""

    def __init__(self, message: str, line: int | None = None, detail: str = ""):
        self.message = message
        self.line = line
        self.detail = detail
        super().__init__(str(self))

    def __str__(self) -> str:
        text = f"?{self.message} ERROR"
        if self.line is not None:
            text += f" IN {self.line}"
        if self.detail:
            text += f" ({self.detail})"
        return text


class BasicSyntaxError(BasicError):
    """Tokenizer or parser failure."""

    def __init__(self, line: int | None = None, detail: str = "", column: int | None = None):
        self.column = column
        super().__init__("SYNTAX", line=line, detail=detail)


class BasicRuntimeError(BasicError):
    """Execution failure (DIVISION BY ZERO, ILLEGAL QUANTITY, ...)."""

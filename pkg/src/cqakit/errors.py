"""Exception types shared across the package."""


class CqaError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CqaError):
    """Syntax error in an input text, with optional position information."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class UnsafeRuleError(ParseError):
    """A rule uses a variable that does not occur in a positive body atom."""


class SchemaError(CqaError):
    """Arity mismatch, unknown predicate, or malformed schema."""


class GuardExceededError(CqaError):
    """A configurable resource guard was exceeded; never a silent truncation."""


class InconsistentProgramError(CqaError):
    """The program has no stable models, so cautious answers are vacuous."""


class RewriteFallbackError(CqaError):
    """The first-order rewriting does not apply to this query or constraint
    set; use the enumeration or program-based method instead."""

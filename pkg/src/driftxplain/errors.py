"""Exception hierarchy."""


class DriftXplainError(Exception):
    """Base class for all library errors."""


class ValidationError(DriftXplainError, ValueError):
    """Malformed input: bad posterior, weights, shapes, or config values."""


class UnsupportedConfigError(DriftXplainError, ValueError):
    """Structurally valid input the method cannot operate on (e.g. one bin)."""


class EmptyBinError(DriftXplainError, ValueError):
    """A time bin referenced by an operation holds no samples."""


class InfeasibleAssignmentError(DriftXplainError, ValueError):
    """No injective assignment exists; carries the blocked row indices."""

    def __init__(self, blocked_rows, message=None):
        self.blocked_rows = tuple(int(r) for r in blocked_rows)
        if message is None:
            message = f"no feasible assignment for rows {list(self.blocked_rows)}"
        super().__init__(message)


class IngestionError(DriftXplainError, ValueError):
    """Malformed external data; message carries the offending row."""


class StreamError(DriftXplainError, RuntimeError):
    """Failure while processing a stream; message carries the position."""

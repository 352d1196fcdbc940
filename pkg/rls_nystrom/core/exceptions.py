"""
Exception hierarchy for the RLS-Nystrom toolkit.

Every error raised by the library derives from NystromError and carries the
process exit code the command-line interface reports for it.
"""

from typing import Optional


class NystromError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class UsageError(NystromError):
    """Invalid or conflicting command-line usage."""

    exit_code = 2


class ArgumentError(NystromError, ValueError):
    """Invalid argument value, shape or index."""


class OracleCapacityError(ArgumentError):
    """Dense oracle asked to handle more points than its hard cap."""


class DataFormatError(NystromError):
    """Structurally malformed input file (ragged rows, unordered indices)."""

    def __init__(self, message: str, row: Optional[int] = None):
        """Initialize the error.

        Args:
            message: Description of the problem
            row: 1-based row (line) number where the problem was found
        """
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class DataParseError(DataFormatError):
    """A token in an input file could not be parsed as a number."""


class NumericalError(NystromError):
    """A linear-algebra step failed even after jitter escalation."""

    exit_code = 3


class EmptySampleError(NumericalError):
    """Bernoulli selection kept producing an empty landmark set."""


class DegenerateScoresError(NumericalError):
    """Ridge leverage scores sum to zero, so no sampling distribution exists."""


class DegenerateKernelError(NumericalError):
    """Kernel submatrix has zero trace, so no regularization can be derived."""


class VerificationError(NystromError):
    """One or more verification checks failed."""

    exit_code = 4


def with_context(error: NystromError, context: str) -> NystromError:
    """Build a copy of an error with extra context appended to its message.

    Args:
        error: Original error
        context: Text appended in parentheses

    Returns:
        New error instance of the same type
    """
    message = f"{error} ({context})"
    if isinstance(error, DataFormatError):
        clone = type(error)(message)
        clone.row = error.row
        return clone
    return type(error)(message)

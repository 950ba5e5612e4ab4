"""Exception hierarchy shared by every engine package.

Each error carries the process exit code the CLI maps it to:
2 usage/config, 3 privacy budget, 4 training, 5 schema.
"""
from typing import Optional, Sequence, Union


class PrivRiskError(ValueError):
    """Base class for engine errors."""
    exit_code: int = 2


class InvalidParams(PrivRiskError):
    """Mechanism or privacy parameters out of range."""


class InvalidConfig(PrivRiskError):
    """Configuration rejected (generator, trainer or run config)."""


class InvalidFraction(PrivRiskError):
    """Sampling fraction outside (0, 1]."""


class EmptyInput(PrivRiskError):
    """Operation needs at least one value."""


class UnknownColumn(PrivRiskError):
    """Column name not handled by the requested transform."""


class OutOfRange(PrivRiskError):
    """Ratio outside [0, 1]."""


class InvalidAmounts(PrivRiskError):
    """Currency amounts violate a credit-risk precondition."""


class DivisionByZero(PrivRiskError, ZeroDivisionError):
    """Denominator is zero or negative where a positive one is required."""


class BudgetExhausted(PrivRiskError):
    """A privacy spend would exceed the accountant's budget."""
    exit_code = 3

    def __init__(self, message: str, query_id: Optional[str] = None):
        super().__init__(message)
        self.query_id = query_id


class TrainingError(PrivRiskError):
    """Model fitting or scoring failed."""
    exit_code = 4


class NotFitted(TrainingError):
    """Pipeline used before fit."""


class NonFiniteLoss(TrainingError):
    """Gradient descent diverged."""


class SingleClass(TrainingError):
    """Classifier labels contain only one class."""


class WidthMismatch(TrainingError):
    """Feature width differs from the width seen at training."""


class SchemaMismatch(PrivRiskError):
    """Input columns do not match the expected schema."""
    exit_code = 5

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class ParseError(SchemaMismatch):
    """A CSV cell could not be parsed."""

    def __init__(self, message: str, row: int, column: str):
        super().__init__(message, column=column)
        self.row = row


class RecordInvariantViolation(SchemaMismatch):
    """A parsed record breaks a LoanRecord invariant."""

    def __init__(self, message: str, row: int):
        super().__init__(message)
        self.row = row


class VersionMismatch(SchemaMismatch):
    """Portable document written by an unsupported format version."""


def json_path(loc: Sequence[Union[str, int]], prefix: Sequence[Union[str, int]] = ()) -> str:
    """Render a pydantic error location as $.a.b[0].c."""
    path = "$"
    for part in (*prefix, *loc):
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


class MalformedDocument(SchemaMismatch):
    """Portable document is unreadable or fails validation."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{message} (at {path})")
        self.path = path


class RunFailed(PrivRiskError):
    """An experiment run failed; wraps the original error."""

    def __init__(self, run_id: int, cause: PrivRiskError):
        super().__init__(f"run {run_id} failed: {cause}")
        self.run_id = run_id
        self.cause = cause
        self.exit_code = cause.exit_code

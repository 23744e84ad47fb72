"""Exception types shared across the package."""


class CausalabError(Exception):
    """Base class for all package errors."""


class SizeLimitError(CausalabError):
    """Requested an enumeration beyond the supported node count."""


class DimensionMismatchError(CausalabError):
    """Operands built for different node counts."""


class InconsistentTrialError(CausalabError):
    """Outcome disagrees with the fixed values of its intervention."""


class DegenerateEvidenceError(CausalabError):
    """Evidence has zero likelihood under the entire prior support."""


class DegenerateContextError(CausalabError):
    """Edge-state context admits no acyclic completion."""


class UndefinedFocusError(CausalabError):
    """Focus has no defined uncertainty (confirmation with belief == null)."""


class FitFailureError(CausalabError):
    """Optimizer could not produce a finite objective at any start."""


class DataFormatError(CausalabError):
    """Behavioral data file violates the expected schema.

    Carries row/column context when raised by the CSV reader.
    """

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc += f" (row {row}"
            loc += f", column {column})" if column is not None else ")"
        super().__init__(message + loc)
        self.row = row
        self.column = column


class SequencingError(CausalabError):
    """Session operation attempted in the wrong phase."""


class CyclicJudgmentError(CausalabError):
    """Submitted judgment contains a directed loop."""


class PolicyError(CausalabError):
    """Operation disabled by the session's configuration."""


class SessionNotFoundError(CausalabError):
    """No session with the requested id."""

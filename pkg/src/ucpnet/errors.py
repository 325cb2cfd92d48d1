"""Exception hierarchy shared across the package.

Every error carries a short machine-readable ``code`` so the CLI and the
web service can map failures to stable identifiers without parsing
messages.
"""

from __future__ import annotations


class UcpError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "error"


class InvalidModelError(UcpError):
    """A net, factor, or Bayes net violates its structural contract."""

    code = "invalid-model"


class InvalidAssignmentError(UcpError):
    """An outcome or evidence assignment names unknown variables/values
    or fails to bind a required variable."""

    code = "invalid-assignment"


class IncompleteWeightsError(UcpError):
    """A weight vector is missing identifiers required by the net."""

    code = "incomplete-weights"


class SizeLimitError(UcpError):
    """An exact computation would exceed the configured enumeration bound."""

    code = "size-limit"


class ValidityRequiredError(UcpError):
    """Operation requires a valid net and the given net is not one."""

    code = "invalid-net"


class DuplicateLastVariableError(UcpError):
    """Two additive factors share the same trailing variable under the
    requested ordering, so no child assignment exists."""

    code = "duplicate-last-variable"

    def __init__(self, variable: str, factor_indices: tuple[int, int]):
        self.variable = variable
        self.factor_indices = factor_indices
        super().__init__(
            f"factors {factor_indices[0]} and {factor_indices[1]} both end at "
            f"variable {variable!r} under the given ordering"
        )


class ZeroProbabilityError(UcpError):
    """Evidence (or an action context) has probability zero."""

    code = "zero-probability"


class UnknownActionError(UcpError):
    code = "unknown-action"


class CompileFirstError(UcpError):
    """A Bayes-net action must be compiled to an explicit support list
    before linear weight analysis."""

    code = "compile-first"


class EmptyWeightSpaceError(UcpError):
    """The weight-space polytope is infeasible."""

    code = "infeasible"


class ContradictionError(UcpError):
    """Applying a response makes the weight space infeasible."""

    code = "contradiction"

    def __init__(self, message: str, constraints=None):
        self.constraints = tuple(constraints or ())
        super().__init__(message)


class ContradictoryQueryError(UcpError):
    """Every response of a query contradicts the current weight space."""

    code = "contradictory-query"


class DocumentError(UcpError):
    """A persisted document failed to parse or violates its schema."""

    code = "document"

    def __init__(self, message: str, *, path: str | None = None, where: str | None = None):
        self.path = path
        self.where = where
        prefix = f"{path}: " if path else ""
        suffix = f" (at {where})" if where else ""
        super().__init__(f"{prefix}{message}{suffix}")

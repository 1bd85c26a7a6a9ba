"""Exception hierarchy.

Validation problems (bad parameters, out-of-domain arguments) derive from
``ValueError``; numerical diagnostics that indicate a mis-specified model
derive from ``RuntimeError``.  The CLI maps the two families to exit codes
1 and 2 respectively.
"""


class StopruleError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(StopruleError, ValueError):
    """Invalid input: unknown variant, bad parameter, malformed request."""


class DomainError(ValidationError):
    """Argument outside the domain of a special function."""


class DiagnosticError(StopruleError, RuntimeError):
    """A computation produced a result inconsistent with its assumptions."""


class NonFiniteError(DiagnosticError):
    """A backward pass produced a non-finite value.

    ``k`` is the first offending index in pass order (the largest ``k``).
    """

    def __init__(self, k, value):
        self.k = int(k)
        self.value = value
        super().__init__(f"non-finite value {value!r} at k={self.k}")


class StructureError(DiagnosticError):
    """Sign-change or threshold structure differs from what was assumed."""


class IntegrationError(DiagnosticError):
    """ODE integration step produced a non-finite value."""

    def __init__(self, x, message=None):
        self.x = float(x)
        super().__init__(message or f"non-finite ODE state at x={self.x!r}")

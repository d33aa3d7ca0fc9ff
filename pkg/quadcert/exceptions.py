"""
Exception hierarchy for quadcert.

Every error raised on purpose by the package derives from ``QuadcertError``.
Input problems also derive from ``ValueError`` and numerical failures from
``RuntimeError`` so callers can keep catching the builtin types.
"""


class QuadcertError(Exception):
    """Base class for all quadcert errors."""


class DomainError(QuadcertError, ValueError):
    """Point or interval outside the domain of a relation."""


class AmbiguityError(QuadcertError, ValueError):
    """Relation does not define a single value at the requested point."""


class PreconditionError(QuadcertError, ValueError):
    """Operation called with arguments violating its preconditions."""


class SamplingError(PreconditionError):
    """Generated exterior point lies on the graph of the relation."""


class ParseError(QuadcertError, ValueError):
    """Malformed input file. The message carries the location."""

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class AssemblyError(QuadcertError, ValueError):
    """Inconsistent cone program (unknown block, dimension mismatch)."""


class SolverError(QuadcertError, RuntimeError):
    """Solver failed where a result is mandatory."""

    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message if status is None else f"{message} (status: {status})")


class ApproximationError(QuadcertError, RuntimeError):
    """Polynomial approximation error bound could not be validated."""


class InconsistencyError(QuadcertError, RuntimeError):
    """Propagated bounds contradict each other (e.g. empty polytope)."""


class ConfigError(QuadcertError, ValueError):
    """Invalid run configuration."""

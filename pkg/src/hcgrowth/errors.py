"""Exception types shared across the package.

Every error carries a short machine-readable ``kind`` so that the command
line front end can map it to an exit code and a JSON record.
"""


class HCGrowthError(Exception):
    """Base class for all package errors."""

    kind = "error"


class DomainError(HCGrowthError, ValueError):
    """A score or argument lies outside the domain of a loss."""

    kind = "domain-error"


class ConstraintError(HCGrowthError, ValueError):
    """Constrained scores that do not sum to zero."""

    kind = "constraint-violation"


class ParameterError(HCGrowthError, ValueError):
    """An invalid parameter such as t outside [0, 1] or n < 2."""

    kind = "parameter-error"


class NotFoundError(HCGrowthError, KeyError):
    """No catalog entry for the requested identifier."""

    kind = "not-found"

    def __str__(self):
        return str(self.args[0]) if self.args else "not found"


class ResolutionError(HCGrowthError, ValueError):
    """A grid is too coarse to bracket a continuous optimum."""

    kind = "resolution-error"


class PreconditionError(HCGrowthError, ValueError):
    """The input does not satisfy the precondition of a result."""

    kind = "precondition-violated"


class InsufficientSamplesError(HCGrowthError, ValueError):
    """Too few usable samples for a regression."""

    kind = "insufficient-samples"


class NonPositiveError(HCGrowthError, ValueError):
    """A log-log fit saw T(t) <= 0 inside its window."""

    kind = "nonpositive-T"


class SchemaError(HCGrowthError, ValueError):
    """Malformed or unexpected JSON input."""

    kind = "schema-error"

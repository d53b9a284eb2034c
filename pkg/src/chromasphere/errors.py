"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: DomainError and its subclasses are usage
errors (exit 2); CertificateError means a numerical certificate failed on an
otherwise valid run (exit 1).
"""


class ChromaError(Exception):
    """Base class for all package errors."""


class DomainError(ChromaError):
    """Input outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """Radius belongs to the other parameter regime."""


class InvalidPointError(DomainError):
    """Coordinates are off the sphere beyond tolerance."""


class NoPreimageError(DomainError):
    """The inverse shrink map does not exist for this point."""


class InvalidParameterError(DomainError):
    """Parameter combination violates an analytic precondition."""


class StateError(ChromaError):
    """Operation called on an object in an unusable state."""


class InfeasibleError(ChromaError):
    """The covering LP has an uncoverable vertex."""


class IncompleteCoverError(ChromaError):
    """Sampled edges cannot cover the net; carries the uncovered vertex ids."""

    def __init__(self, uncovered, message=None):
        self.uncovered = list(uncovered)
        super().__init__(message or f"{len(self.uncovered)} vertices uncovered")


class CertificateError(ChromaError):
    """A numerical certificate failed."""

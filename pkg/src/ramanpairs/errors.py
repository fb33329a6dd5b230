"""Exception hierarchy shared by all modules."""


class RamanError(Exception):
    """Base class for errors raised by ramanpairs."""


class DomainError(RamanError, ValueError):
    """Input outside the physical or mathematical domain of an operation."""


class UnsupportedRegimeError(DomainError):
    """The requested closed form does not exist for these parameters."""


class ContractError(RamanError):
    """A required input field is missing."""


class UndefinedCorrelationError(DomainError):
    """A normalized correlation is undefined (vanishing denominator)."""


class IllConditionedError(UndefinedCorrelationError):
    """Intensities are so small that the normalized quantity is meaningless."""


class SingularFitError(DomainError):
    """Fit coefficients do not determine the parameters."""


class TruncationError(RamanError):
    """Requested truncation is outside the stable range."""


class InstabilityError(RamanError):
    """A truncated series does not converge."""


class InconclusiveError(RamanError):
    """Oracle result contaminated by truncation leakage."""


class ResourceError(RamanError):
    """Requested computation exceeds the resource budget."""

"""Stokes/anti-Stokes photon-pair correlations in Raman scattering."""

__version__ = "0.1.0"

from .errors import (
    ContractError,
    DomainError,
    IllConditionedError,
    InconclusiveError,
    InstabilityError,
    RamanError,
    ResourceError,
    SingularFitError,
    TruncationError,
    UndefinedCorrelationError,
    UnsupportedRegimeError,
)
from .model import (
    RamanParams,
    Regime,
    TwoModeMoments,
    moments_asymptotic,
    moments_general,
    moments_lossless,
    moments_thermal,
)

__all__ = [
    "__version__",
    "ContractError",
    "DomainError",
    "IllConditionedError",
    "InconclusiveError",
    "InstabilityError",
    "RamanError",
    "ResourceError",
    "SingularFitError",
    "TruncationError",
    "UndefinedCorrelationError",
    "UnsupportedRegimeError",
    "RamanParams",
    "Regime",
    "TwoModeMoments",
    "moments_asymptotic",
    "moments_general",
    "moments_lossless",
    "moments_thermal",
]

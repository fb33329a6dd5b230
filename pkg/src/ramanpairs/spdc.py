"""Twin-beam reference state of spontaneous parametric down-conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .model import TwoModeMoments


@dataclass(frozen=True)
class SpdcMoments:
    """Signal/idler mean photon number ``b`` and pair coefficient ``d`` >= 0."""

    b: float
    d: float

    def to_two_mode(self) -> TwoModeMoments:
        return TwoModeMoments(b_s=self.b, b_a=self.b, d_sa=complex(self.d))


def spdc_moments(gz: float) -> SpdcMoments:
    """Moments after a gain ``gz`` from the vacuum: b = sinh^2, d = sinh cosh."""
    if not (math.isfinite(gz) and gz >= 0):
        raise DomainError("gain gz must be finite and nonnegative")
    sh = math.sinh(gz)
    return SpdcMoments(b=sh * sh, d=sh * math.cosh(gz))


def spdc_matched(n_mean: float) -> SpdcMoments:
    """Twin beam with the given mean photon number per arm."""
    if not (math.isfinite(n_mean) and n_mean >= 0):
        raise DomainError("mean photon number must be finite and nonnegative")
    return SpdcMoments(b=n_mean, d=math.sqrt(n_mean * (n_mean + 1)))


def spdc_matched_to(moments: TwoModeMoments) -> TwoModeMoments:
    """Twin beam whose arms carry the average of the Stokes and anti-Stokes intensities.

    The pair coefficient takes the phase of ``moments.d_sa`` so that
    phase-sensitive quantities such as the parity Bell combination are
    compared at the same pump phase.
    """
    twin = spdc_matched((moments.b_s + moments.b_a) / 2)
    phase = moments.d_sa / abs(moments.d_sa) if moments.d_sa != 0 else 1.0
    return TwoModeMoments(b_s=twin.b, b_a=twin.b, d_sa=complex(twin.d * phase))

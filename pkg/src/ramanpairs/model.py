"""Stokes/anti-Stokes Gaussian moments of the undepleted-pump Raman process.

All public functions work in normalized units: the interaction strength enters
only through the cumulative pump amplitude ``pump_amp`` (Stokes coupling times
pump amplitude times medium length) and the position along the medium through
``zfrac = z / L``. Damping enters through ``gamma_n = gamma * L``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import ContractError, DomainError, SingularFitError, UnsupportedRegimeError

IMAG_TOL = 1e-10


class Regime(enum.Enum):
    EXPONENTIAL = "exponential"
    OSCILLATORY = "oscillatory"

    @classmethod
    def of(cls, epsilon: float) -> "Regime":
        return cls.EXPONENTIAL if epsilon <= 1.0 else cls.OSCILLATORY


@dataclass(frozen=True)
class RamanParams:
    """Physical inputs of the model.

    Parameters
    ----------
    epsilon : float
        Ratio of squared anti-Stokes and Stokes coupling moduli.
    pump_amp : float
        Normalized nonlinear pump amplitude.
    gamma_n : float
        Normalized damping constant of the vibrational mode.
    n_v : float
        Initial mean phonon number of the vibrational mode.
    n_t : float
        Mean phonon number of the reservoir.
    phi_l : float
        Pump phase in radians. At the default value the couplings are
        ``-i * pump_amp`` and ``-i * sqrt(epsilon) * pump_amp`` so that the
        pair coefficient ``d_sa`` is real and negative.
    """

    epsilon: float
    pump_amp: float
    gamma_n: float = 0.0
    n_v: float = 0.0
    n_t: float = 0.0
    phi_l: float = -math.pi / 2

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise DomainError(f"epsilon must be finite and positive, got {self.epsilon!r}")
        for name in ("pump_amp", "gamma_n", "n_v", "n_t"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be finite and nonnegative, got {value!r}")
        if not math.isfinite(self.phi_l):
            raise DomainError(f"phi_l must be finite, got {self.phi_l!r}")

    @property
    def regime(self) -> Regime:
        return Regime.of(self.epsilon)

    @property
    def lossless(self) -> bool:
        return self.gamma_n == 0.0

    def with_(self, **changes) -> "RamanParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class TwoModeMoments:
    """Coefficients of the normally ordered Gaussian characteristic function.

    ``b_s`` and ``b_a`` are the mean Stokes and anti-Stokes photon numbers,
    ``d_sa`` is the anti-diagonal coefficient <A_S A_A> and ``b_v`` the mean
    vibrational phonon number where it is available.
    """

    b_s: float
    b_a: float
    d_sa: complex
    b_v: Optional[float] = None

    @property
    def d_abs(self) -> float:
        return abs(self.d_sa)

    def positivity_margin(self) -> float:
        """Smallest slack of the two-mode positivity bounds (negative = violated)."""
        d2 = abs(self.d_sa) ** 2
        return min(self.b_s * (self.b_a + 1) - d2, self.b_a * (self.b_s + 1) - d2)

    def is_physical(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, abs(self.d_sa) ** 2)
        return (
            self.b_s >= -tol
            and self.b_a >= -tol
            and self.positivity_margin() >= -tol * scale
        )

    def check_physical(self, tol: float = 1e-12) -> "TwoModeMoments":
        if not self.is_physical(tol):
            raise DomainError(f"unphysical moments {self}")
        return self

    def rotated(self) -> tuple["TwoModeMoments", float]:
        """Return moments with ``d_sa`` made real nonnegative and the phase removed.

        The rotation is a local phase shift of one mode, so no correlation
        measure changes.
        """
        theta = cmath.phase(self.d_sa) if self.d_sa != 0 else 0.0
        return replace(self, d_sa=complex(abs(self.d_sa))), theta


@dataclass(frozen=True)
class SolutionCoefficients:
    """Operator-solution coefficients at one position.

    ``sum_f2l_sq``, ``sum_f3l_sq`` and ``sum_f2l_f3l`` are the reservoir sums,
    obtained from the equal-position commutation relations.
    """

    f1: complex
    f2_s: complex
    f2_a: complex
    f3_s: complex
    f3_a: complex
    f4_s: complex
    f4_a: complex
    sum_f2l_sq: float
    sum_f3l_sq: float
    sum_f2l_f3l: complex


def _sinhc(x: complex) -> complex:
    if abs(x) < 1e-4:
        x2 = x * x
        return 1 + x2 / 6 + x2 * x2 / 120
    return cmath.sinh(x) / x


def _exp_divdiff(nodes: tuple[complex, ...]) -> complex:
    """Divided difference of ``exp`` over (possibly confluent) complex nodes."""
    n = len(nodes)
    if n == 1:
        return cmath.exp(nodes[0])
    pairs = [(abs(nodes[i] - nodes[j]), i, j) for i in range(n) for j in range(i + 1, n)]
    spread, i, j = max(pairs)
    if spread < 1.0:
        # exp[x_0..x_k] = exp(c) * sum_m h_m(x - c) / (m + k)!
        c = sum(nodes) / n
        shifted = [x - c for x in nodes]
        h = [1.0 + 0j] + [0j] * 40
        for k, d in enumerate(shifted):
            if k == 0:
                h = [d**m for m in range(41)]
            else:
                for m in range(1, 41):
                    h[m] = h[m] + d * h[m - 1]
        total = sum(h[m] / math.factorial(m + n - 1) for m in range(41))
        return cmath.exp(c) * total
    without_i = nodes[:i] + nodes[i + 1 :]
    without_j = nodes[:j] + nodes[j + 1 :]
    return (_exp_divdiff(without_i) - _exp_divdiff(without_j)) / (nodes[j] - nodes[i])


def _check_zfrac(zfrac: float) -> None:
    if not (math.isfinite(zfrac) and 0.0 <= zfrac <= 1.0):
        raise DomainError(f"zfrac must lie in [0, 1], got {zfrac!r}")


def couplings(params: RamanParams) -> tuple[complex, complex]:
    """Normalized Stokes and anti-Stokes coupling constants g_S, g_A."""
    g_s = params.pump_amp * cmath.exp(1j * params.phi_l)
    return g_s, math.sqrt(params.epsilon) * g_s


def solution_coefficients(params: RamanParams, zfrac: float) -> SolutionCoefficients:
    """Evaluate the operator-solution coefficients at ``zfrac``.

    The vibrational amplitude obeys y'' + (gamma/2) y' + Omega^2 y = 0 with
    characteristic roots (-gamma +- Gamma)/4, Gamma = sqrt(gamma^2 - 16 Omega^2).
    Everything is expressed through divided differences of ``exp`` over these
    roots, which is one code path for the hyperbolic and the trigonometric
    branch and stays finite at Gamma = 0 and Omega = 0.
    """
    _check_zfrac(zfrac)
    g_s, g_a = couplings(params)
    z = zfrac
    a = params.gamma_n * z / 4
    w = params.pump_amp**2 * (params.epsilon - 1.0) * z * z  # Omega^2 z^2
    x = cmath.sqrt(a * a - w)  # Gamma z / 4
    mu_p, mu_m = -a + x, -a - x

    e2 = _exp_divdiff((mu_p, mu_m))
    s = z * e2  # integral kernel, 4 h p / Gamma
    s1 = z * z * _exp_divdiff((0j, mu_p, mu_m))  # integral of s over [0, z]
    f1 = cmath.exp(mu_m) + mu_p * e2

    f2_s = g_s * s
    f2_a = g_a * s
    f3_s = 1 + abs(g_s) ** 2 * s1
    f3_a = abs(g_a) ** 2 * s1 - 1
    f4_s = f4_a = -g_s * g_a * s1

    sum_f2l_sq = abs(f3_s) ** 2 - 1 - abs(f2_s) ** 2 - abs(f4_s) ** 2
    sum_f3l_sq = 1 - abs(f2_a) ** 2 - abs(f3_a) ** 2 + abs(f4_a) ** 2
    sum_f2l_f3l = -f2_s * f2_a - f3_s * f4_a + f4_s * f3_a
    return SolutionCoefficients(
        f1=f1,
        f2_s=f2_s,
        f2_a=f2_a,
        f3_s=f3_s,
        f3_a=f3_a,
        f4_s=f4_s,
        f4_a=f4_a,
        sum_f2l_sq=sum_f2l_sq,
        sum_f3l_sq=sum_f3l_sq,
        sum_f2l_f3l=sum_f2l_f3l,
    )


def _real(value: complex, name: str) -> float:
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        raise ArithmeticError(f"{name} has imaginary part {value.imag:g}")
    return value.real


def _phase_factor(phi_l: float) -> complex:
    # D_SA is proportional to g_S g_A = sqrt(eps) pump^2 exp(2i phi_l)
    return cmath.exp(2j * (phi_l + math.pi / 2))


def _lossless_closed(epsilon: float, a: float) -> tuple[float, float, float]:
    # sinhc rewriting removes the (1 - epsilon)^2 denominators
    x = a * cmath.sqrt(1.0 - epsilon)
    h2 = _sinhc(x / 2) ** 2
    b_a = _real(epsilon * a**4 * h2 * h2 / 4, "B_A")
    b_s = b_a + _real(a * a * _sinhc(x) ** 2, "B_S - B_A")
    half = a * a / 2 * h2
    d = -math.sqrt(epsilon) * _real(half * (1 + half), "D_SA")
    return b_s, b_a, d


def moments_lossless(params: RamanParams, zfrac: float = 1.0) -> TwoModeMoments:
    """Closed-form moments without damping and with an empty vibrational mode.

    Examples
    --------
    >>> m = moments_lossless(RamanParams(epsilon=4.0, pump_amp=math.pi / math.sqrt(3)))
    >>> round(m.b_s * 9, 12), round(m.d_sa.real * 9, 12)
    (16.0, -20.0)
    """
    _check_zfrac(zfrac)
    if params.gamma_n != 0 or params.n_v != 0 or params.n_t != 0:
        raise DomainError("moments_lossless requires gamma_n = n_v = n_t = 0")
    b_s, b_a, d = _lossless_closed(params.epsilon, params.pump_amp * zfrac)
    return TwoModeMoments(b_s, b_a, d * _phase_factor(params.phi_l), b_v=b_s - b_a)


def moments_thermal(params: RamanParams, zfrac: float = 1.0) -> TwoModeMoments:
    """Closed-form moments for a thermally populated, undamped vibrational mode.

    Only the oscillatory regime (epsilon > 1) has a closed form here.
    """
    _check_zfrac(zfrac)
    if params.gamma_n != 0 or params.n_t != 0:
        raise DomainError("moments_thermal requires gamma_n = n_t = 0")
    eps = params.epsilon
    if eps <= 1:
        raise UnsupportedRegimeError("thermal closed form is available only for epsilon > 1")
    a = params.pump_amp * zfrac
    b_s, b_a, d = _lossless_closed(eps, a)
    y = a * math.sqrt(eps - 1)
    beta = math.sin(y) ** 2 / (eps - 1)
    n_v = params.n_v
    # the thermal pair term is n_V f2_S f2_A = sqrt(eps) n_V beta
    return TwoModeMoments(
        b_s=b_s + n_v * beta,
        b_a=b_a + eps * n_v * beta,
        d_sa=(d - math.sqrt(eps) * n_v * beta) * _phase_factor(params.phi_l),
        b_v=n_v * math.cos(y) ** 2 + beta,
    )


def moments_from_coefficients(
    coeffs: SolutionCoefficients, n_v: float, n_t: float
) -> tuple[float, float, complex]:
    b_s = abs(coeffs.f2_s) ** 2 * (n_v + 1) + abs(coeffs.f4_s) ** 2 + coeffs.sum_f2l_sq * (n_t + 1)
    b_a = abs(coeffs.f2_a) ** 2 * n_v + abs(coeffs.f4_a) ** 2 + coeffs.sum_f3l_sq * n_t
    d = coeffs.f2_s * coeffs.f2_a * n_v - coeffs.f3_s * coeffs.f4_a + coeffs.sum_f2l_f3l * n_t
    return b_s, b_a, d


def moments_general(params: RamanParams, zfrac: float = 1.0) -> TwoModeMoments:
    """Moments for arbitrary damping and thermal populations at one position.

    ``b_v`` is filled in only for the undamped case.
    """
    coeffs = solution_coefficients(params, zfrac)
    b_s, b_a, d = moments_from_coefficients(coeffs, params.n_v, params.n_t)
    b_v = None
    if params.gamma_n == 0:
        b_v = abs(coeffs.f1) ** 2 * params.n_v + abs(coeffs.f2_s) ** 2
    return TwoModeMoments(b_s, b_a, d, b_v=b_v)


def moments_asymptotic(epsilon: float, n_t: float = 0.0) -> TwoModeMoments:
    """Limit of the damped moments for an infinitely strong pump."""
    if not epsilon > 1:
        raise DomainError("asymptotic state requires epsilon > 1")
    if not n_t >= 0:
        raise DomainError("n_t must be nonnegative")
    nt = (epsilon - 1) * n_t
    den = (epsilon - 1) ** 2
    return TwoModeMoments(
        b_s=(nt + 2 * epsilon - 1) / den,
        b_a=(epsilon * nt + epsilon) / den,
        d_sa=complex(-math.sqrt(epsilon) * (nt + epsilon) / den),
    )


def cross_position_correlator(params: RamanParams, z_s: float, z_a: float) -> complex:
    """<A_S(z_S) A_A(z_A)> for a zero-temperature reservoir.

    The intensity-fluctuation correlation <dI_S(z_S) dI_A(z_A)> is the squared
    modulus of the returned value.
    """
    if params.n_t != 0:
        raise UnsupportedRegimeError("cross-position correlator needs n_t = 0")
    cs = solution_coefficients(params, z_s)
    ca = solution_coefficients(params, z_a)
    return cs.f2_s * ca.f2_a * params.n_v - cs.f3_s * ca.f4_a


def balanced_pump_amplitudes(epsilon: float, m_max: int) -> list[tuple[float, float]]:
    """Pump amplitudes of perfect pairing and of return to vacuum, m = 1..m_max."""
    if not epsilon > 1:
        raise DomainError("balanced points exist only for epsilon > 1")
    if m_max < 1:
        raise DomainError("m_max must be at least 1")
    root = math.sqrt(epsilon - 1)
    return [((2 * m - 1) * math.pi / root, 2 * m * math.pi / root) for m in range(1, m_max + 1)]


def conservation_residual(moments: TwoModeMoments, n_v: float) -> float:
    """Deviation of <n_S - n_A - n_V> from its initial value -n_V."""
    if moments.b_v is None:
        raise ContractError("conservation check needs the vibrational phonon number b_v")
    return (moments.b_s - moments.b_a - moments.b_v) + n_v


def ratio_taylor_coefficients(epsilon: float, n_v: float) -> tuple[float, float]:
    """Coefficients (r_a, r_b) of B_A/B_S ~ r_a + r_b |alpha|^2 at weak pumping."""
    r_a = epsilon * n_v / (n_v + 1)
    r_b = epsilon / (4 * (n_v + 1)) * (1 - r_a)
    return r_a, r_b


def fit_epsilon_nv(r_a: float, r_b: float) -> tuple[float, float]:
    """Invert :func:`ratio_taylor_coefficients`."""
    if r_a == 1 or r_b == 0:
        raise SingularFitError("fit is singular for r_a = 1 or r_b = 0")
    return r_a + 4 * r_b / (1 - r_a), r_a * (1 - r_a) / (4 * r_b)


def asymptotic_ratio(epsilon: float, n_t: float = 0.0) -> float:
    """B_A / B_S of the asymptotic state."""
    if not epsilon > 1:
        raise DomainError("asymptotic state requires epsilon > 1")
    return (epsilon + epsilon * (epsilon - 1) * n_t) / (2 * epsilon - 1 + (epsilon - 1) * n_t)


def epsilon_from_asymptotic_ratio(r_asym: float) -> float:
    """Recover epsilon from the asymptotic intensity ratio at n_t = 0."""
    if not (0.5 < r_asym <= 1.0):
        raise DomainError("asymptotic ratio must lie in (1/2, 1]")
    return r_asym / (2 * r_asym - 1)

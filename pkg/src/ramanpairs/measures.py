"""Correlation and nonclassicality measures of two-mode Gaussian states.

Every function takes :class:`~ramanpairs.model.TwoModeMoments`. Covariance
matrices use the real quadrature basis (x_S, p_S, x_A, p_A) with
x = a + a^+, p = -i (a - a^+), so the vacuum has the identity matrix.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, IllConditionedError, UndefinedCorrelationError
from .model import TwoModeMoments, moments_asymptotic

ILL_CONDITIONED = 1e-9
TSIRELSON = 2 * math.sqrt(2)
PHYSICAL_TOL = 1e-9


@dataclass(frozen=True)
class CovarianceMatrix:
    """4x4 quadrature covariance matrix.

    ``theta`` is the phase removed from ``d_sa`` when the matrix was built in
    the rotated frame (zero otherwise).
    """

    matrix: np.ndarray
    theta: float = 0.0

    def block(self, mode: int) -> np.ndarray:
        k = 2 * mode
        return self.matrix[k : k + 2, k : k + 2]

    @property
    def det(self) -> float:
        return float(np.real(np.linalg.det(self.matrix)))


@dataclass(frozen=True)
class BellConfig:
    """Displacements of the parity Bell test.

    beta_S1 = -beta_A1 = i sqrt(j) and beta_S2 = -beta_A2 = -q beta_S1.
    """

    j: float
    q: float

    def __post_init__(self):
        if self.j < 0 or self.q < 0:
            raise DomainError("j and q must be nonnegative")

    def betas(self) -> tuple[complex, complex, complex, complex]:
        bs1 = 1j * math.sqrt(self.j)
        bs2 = -self.q * bs1
        return bs1, -bs1, bs2, -bs2


@dataclass(frozen=True)
class BellResult:
    config: BellConfig
    value: float
    converged: bool

    @property
    def nonlocal_(self) -> bool:
        return self.value > 2


@dataclass(frozen=True)
class MeasureReport:
    g2: float
    cs_violated: bool
    nrf: float
    lambda_sq: float
    log_neg: float
    purity: float
    tau: float
    steer_s_to_a: float
    steer_a_to_s: float
    bell: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _check_intensities(b_sum: float) -> None:
    if b_sum < ILL_CONDITIONED:
        raise IllConditionedError(
            f"total mean photon number {b_sum:.3g} is below {ILL_CONDITIONED:g}"
        )


def g2_cross(b_s: float, b_a: float, d_sa: complex) -> float:
    """Normalized intensity cross-correlation 1 + |d|^2 / (B_S B_A).

    Also valid for amplitudes taken at different positions.
    """
    _check_intensities(b_s + b_a)
    if b_s <= 0 or b_a <= 0:
        raise UndefinedCorrelationError("g2 needs nonzero Stokes and anti-Stokes intensities")
    return 1 + abs(d_sa) ** 2 / (b_s * b_a)


def g2(moments: TwoModeMoments) -> float:
    return g2_cross(moments.b_s, moments.b_a, moments.d_sa)


def cs_violated(moments: TwoModeMoments) -> bool:
    """Cauchy-Schwarz violation for chaotic marginals, i.e. g2 > 2."""
    return g2(moments) > 2


def nrf(moments: TwoModeMoments) -> float:
    """Noise-reduction factor <(d(n_S - n_A))^2> / (<n_S> + <n_A>)."""
    b_s, b_a = moments.b_s, moments.b_a
    _check_intensities(b_s + b_a)
    return 1 + (b_s**2 + b_a**2 - 2 * abs(moments.d_sa) ** 2) / (b_s + b_a)


def squeezing_variance(moments: TwoModeMoments) -> float:
    """Two-mode principal squeezing variance 1 + B_S + B_A - 2|D|."""
    return 1 + moments.b_s + moments.b_a - 2 * abs(moments.d_sa)


def covariance(moments: TwoModeMoments, rotate: bool = False, raw: bool = False) -> CovarianceMatrix:
    """Quadrature covariance matrix of the state.

    Parameters
    ----------
    rotate : bool
        Remove the phase of ``d_sa`` first (a local phase shift of the
        anti-Stokes mode), which leaves all correlation measures unchanged.
    raw : bool
        Return the complex-valued matrix with -i Im{D} off-diagonal cross
        entries literally as commonly printed; only for comparisons.
    """
    moments.check_physical(PHYSICAL_TOL)
    m, theta = moments.rotated() if rotate else (moments, 0.0)
    d = complex(m.d_sa)
    sig_s = (1 + 2 * m.b_s) * np.eye(2)
    sig_a = (1 + 2 * m.b_a) * np.eye(2)
    if raw:
        cross = 2 * np.array([[d.real, -1j * d.imag], [-1j * d.imag, -d.real]])
        dtype = complex
    else:
        cross = 2 * np.array([[d.real, d.imag], [d.imag, -d.real]])
        dtype = float
    mat = np.zeros((4, 4), dtype=dtype)
    mat[:2, :2] = sig_s
    mat[2:, 2:] = sig_a
    mat[:2, 2:] = cross
    mat[2:, :2] = cross.T if not raw else cross
    return CovarianceMatrix(mat, theta)


def symplectic_spectrum(matrix: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues (ascending) of a real 2n x 2n covariance matrix."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0] // 2
    omega = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    ev = np.abs(np.linalg.eigvals(1j * omega @ matrix))
    return np.sort(ev)[::2]


def partial_transpose(matrix: np.ndarray) -> np.ndarray:
    """Partial transposition of the anti-Stokes mode (p_A -> -p_A)."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    return flip @ matrix @ flip


def symplectic_eigs(moments: TwoModeMoments, raw: bool = False) -> tuple[float, float]:
    """Symplectic eigenvalues (xi_minus, xi_plus) of the partially transposed matrix.

    By default the phase of D is rotated away first, so Re{D^2} becomes |D|^2.
    ``raw=True`` keeps Re{D^2} of the unrotated coefficient.
    """
    moments.check_physical(PHYSICAL_TOL)
    b_s, b_a = moments.b_s, moments.b_a
    d2 = (moments.d_sa**2).real if raw else abs(moments.d_sa) ** 2
    base = (1 + 2 * b_s) ** 2 + (1 + 2 * b_a) ** 2 + 8 * d2
    disc = (b_s - b_a) ** 2 + 4 * d2
    if disc < 0:
        raise DomainError("negative discriminant in the symplectic spectrum")
    spread = 4 * (1 + b_s + b_a) * math.sqrt(disc)
    lo = (base - spread) / 2
    if lo < -1e-12:
        raise DomainError("moments violate the uncertainty principle")
    return math.sqrt(max(lo, 0.0)), math.sqrt((base + spread) / 2)


def log_negativity(moments: TwoModeMoments) -> float:
    """Logarithmic negativity max(0, -ln xi_minus) in nats."""
    xi_minus, _ = symplectic_eigs(moments)
    if xi_minus == 0:
        return math.inf
    return max(0.0, -math.log(xi_minus))


def _det_cov(moments: TwoModeMoments) -> float:
    moments.check_physical(PHYSICAL_TOL)
    d2 = abs(moments.d_sa) ** 2
    det = ((1 + 2 * moments.b_s) * (1 + 2 * moments.b_a) - 4 * d2) ** 2
    if det <= 0:
        raise DomainError("covariance matrix is singular")
    return det


def purity(moments: TwoModeMoments) -> float:
    """Purity 1/sqrt(det sigma)."""
    return 1 / math.sqrt(_det_cov(moments))


def nonclassicality_depth(moments: TwoModeMoments) -> float:
    b_s, b_a = moments.b_s, moments.b_a
    root = math.sqrt((b_s - b_a) ** 2 + 4 * abs(moments.d_sa) ** 2)
    return max(0.0, -(b_s + b_a) / 2 + root / 2)


def steering(moments: TwoModeMoments) -> tuple[float, float]:
    """Gaussian steerabilities (S->A, A->S) in nats."""
    det = _det_cov(moments)
    s_to_a = 0.5 * math.log((1 + 2 * moments.b_s) ** 2 / det)
    a_to_s = 0.5 * math.log((1 + 2 * moments.b_a) ** 2 / det)
    return max(0.0, s_to_a), max(0.0, a_to_s)


def _parity_many(moments: TwoModeMoments, beta_s: np.ndarray, beta_a: np.ndarray) -> np.ndarray:
    cov = covariance(moments).matrix
    inv = np.linalg.inv(cov)
    r = 2 * np.stack([beta_s.real, beta_s.imag, beta_a.real, beta_a.imag], axis=-1)
    quad = np.einsum("...i,ij,...j->...", r, inv, r)
    return np.exp(-0.5 * quad) / math.sqrt(np.linalg.det(cov))


def parity_expectation(moments: TwoModeMoments, beta_s: complex, beta_a: complex) -> float:
    """Mean of the displaced joint parity, (pi^2/4) W(beta_S, beta_A).

    The Wigner function of the zero-mean Gaussian state gives
    exp(-r^T sigma^-1 r / 2) / sqrt(det sigma), r = 2 (Re b_S, Im b_S, Re b_A, Im b_A).
    """
    return float(_parity_many(moments, np.asarray(complex(beta_s)), np.asarray(complex(beta_a))))


def _bell_grid(moments: TwoModeMoments, j: np.ndarray, q: np.ndarray) -> np.ndarray:
    bs1 = 1j * np.sqrt(j)
    bs2 = -q * bs1
    ba1, ba2 = -bs1, -bs2
    p = lambda x, y: _parity_many(moments, x, y)  # noqa: E731
    return p(bs1, ba1) + p(bs2, ba1) + p(bs1, ba2) - p(bs2, ba2)


def bell_parameter(moments: TwoModeMoments, config: BellConfig) -> float:
    """Four-term parity Bell combination; values above 2 indicate nonlocality."""
    return float(_bell_grid(moments, np.asarray(config.j, float), np.asarray(config.q, float)))


def bell_optimize(
    moments: TwoModeMoments,
    j_range: tuple[float, float] = (0.0, 0.05),
    q_range: tuple[float, float] = (0.5, 6.0),
    grid: int = 64,
) -> BellResult:
    """Maximize the Bell parameter over (j, q) with the phase pattern fixed.

    A ``grid`` x ``grid`` scan seeds a bounded Nelder-Mead refinement.
    Non-convergence is reported through ``BellResult.converged`` and a
    warning, together with the best point found.
    """
    jj, qq = np.meshgrid(np.linspace(*j_range, grid), np.linspace(*q_range, grid), indexing="ij")
    values = _bell_grid(moments, jj, qq)
    i, k = np.unravel_index(np.argmax(values), values.shape)
    start = np.array([jj[i, k], qq[i, k]])
    best_value = float(values[i, k])

    def objective(x):
        return -float(_bell_grid(moments, np.asarray(x[0]), np.asarray(x[1])))

    res = minimize(
        objective,
        start,
        method="Nelder-Mead",
        bounds=[j_range, q_range],
        options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000},
    )
    if -res.fun >= best_value:
        best_value, start = -float(res.fun), res.x
    if not res.success:
        warnings.warn(f"Bell optimization did not converge: {res.message}", RuntimeWarning)
    config = BellConfig(j=float(start[0]), q=float(start[1]))
    return BellResult(config=config, value=min(best_value, TSIRELSON), converged=bool(res.success))


def _safe(fn, moments):
    try:
        return fn(moments)
    except UndefinedCorrelationError:
        return math.nan


def measure_report(moments: TwoModeMoments, bell: bool = True) -> MeasureReport:
    """All measures of one state; undefined normalized quantities become NaN."""
    g = _safe(g2, moments)
    s_a, a_s = steering(moments)
    return MeasureReport(
        g2=g,
        cs_violated=bool(g > 2) if not math.isnan(g) else False,
        nrf=_safe(nrf, moments),
        lambda_sq=squeezing_variance(moments),
        log_neg=log_negativity(moments),
        purity=purity(moments),
        tau=nonclassicality_depth(moments),
        steer_s_to_a=s_a,
        steer_a_to_s=a_s,
        bell=bell_optimize(moments).value if bell else math.nan,
    )


def balanced_bell_closed(epsilon: float, j: float, q: float) -> float:
    """Bell combination at a balanced pump written through epsilon alone."""
    lam = squeezing_variance_balanced(epsilon)
    c = (epsilon**2 + 6 * epsilon + 1)
    cross = 2 * j * ((q * q + 1) * c - 8 * q * math.sqrt(epsilon) * (epsilon + 1)) / (epsilon - 1) ** 2
    return math.exp(-4 * j / lam) - math.exp(-4 * q * q * j / lam) + 2 * math.exp(-cross)


def squeezing_variance_balanced(epsilon: float) -> float:
    r = math.sqrt(epsilon)
    return (r - 1) ** 2 / (r + 1) ** 2


def balanced_point_report(epsilon: float, bell: bool = True) -> MeasureReport:
    """Closed-form measures at the balanced pump amplitudes."""
    if not epsilon > 1:
        raise DomainError("balanced points exist only for epsilon > 1")
    c = epsilon**2 + 6 * epsilon + 1
    lam = squeezing_variance_balanced(epsilon)
    g = c / (4 * epsilon)
    steer = max(0.0, math.log(c / (epsilon - 1) ** 2))
    value = math.nan
    if bell:
        res = minimize(
            lambda x: -balanced_bell_closed(epsilon, x[0], x[1]),
            np.array([3.5e-3, 3.09]),
            method="Nelder-Mead",
            bounds=[(0.0, 0.05), (0.5, 6.0)],
            options={"xatol": 1e-10, "fatol": 1e-13},
        )
        value = -float(res.fun)
    return MeasureReport(
        g2=g,
        cs_violated=g > 2,
        nrf=0.0,
        lambda_sq=lam,
        log_neg=max(0.0, -math.log(lam)) if lam > 0 else math.inf,
        purity=1.0,
        tau=max(0.0, (1 - lam) / 2),
        steer_s_to_a=steer,
        steer_a_to_s=steer,
        bell=value,
    )


def asymptotic_s_coefficients(epsilon: float, n_t: float) -> tuple[float, float, float]:
    """Auxiliary coefficients (s1, s2, s3) of the asymptotic entanglement formulas.

    s1 = sum_b (1 + 2 B_b)^2 + 8 D^2, s2 = 1 + B_S + B_A and
    s3 = (B_S - B_A)^2 + 4 D^2, written through epsilon and n_T.
    """
    nt = (epsilon - 1) * n_t
    e = epsilon
    s1 = 2 * (e + 1) * ((e**3 + 5 * e**2 - 3 * e + 1) + 2 * (e**2 + 4 * e - 1) * nt
                        + 2 * (e + 1) * nt**2) / (e - 1) ** 4
    s2 = (e + 1) * (e + nt) / (e - 1) ** 2
    s3 = ((4 * e**3 + e**2 - 2 * e + 1) + 2 * (e + 1) * (3 * e - 1) * nt
          + (e + 1) ** 2 * nt**2) / (e - 1) ** 4
    return s1, s2, s3


def asymptotic_report(epsilon: float, n_t: float = 0.0, bell: bool = True) -> MeasureReport:
    """Closed-form measures of the strong-pump steady state of the damped process."""
    if not epsilon > 1:
        raise DomainError("asymptotic state requires epsilon > 1")
    if n_t < 0:
        raise DomainError("n_t must be nonnegative")
    e = epsilon
    nt = (e - 1) * n_t
    s1, s2, s3 = asymptotic_s_coefficients(e, n_t)
    xi2 = (s1 - 4 * s2 * math.sqrt(s3)) / 2
    g = (e**2 + 2 * e - 1 + 4 * e * nt + 2 * nt**2) / ((nt + 1) * (nt + 2 * e - 1))
    den = (e + 1) * (e - 1 + 2 * nt)
    value = bell_optimize(moments_asymptotic(e, n_t)).value if bell else math.nan
    return MeasureReport(
        g2=g,
        cs_violated=g > 2,
        nrf=(e + (e - 1) * nt + nt**2) / (3 * e - 1 + (e + 1) * nt),
        lambda_sq=(e + nt) / (math.sqrt(e) + 1) ** 2,
        log_neg=max(0.0, -0.5 * math.log(xi2)),
        purity=(e - 1) ** 2 / den,
        tau=max(0.0, (1 - s2 + math.sqrt(s3)) / 2),
        steer_s_to_a=max(0.0, math.log((e**2 + 2 * e - 1 + 2 * nt) / den)),
        steer_a_to_s=max(0.0, math.log((e**2 + 1 + 2 * e * nt) / den)),
        bell=value,
    )

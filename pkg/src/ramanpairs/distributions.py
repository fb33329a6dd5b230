"""Photon-number distributions, s-ordered quasi-distributions of integrated
intensities, the multimode noise-reduction factor and the statistical
operator of the perfectly paired state."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InstabilityError, TruncationError
from .model import RamanParams, TwoModeMoments, moments_general

N_MAX_LIMIT = 60


@dataclass(frozen=True)
class JointPND:
    """Joint photon-number probabilities ``probs[n_S, n_A]`` for n <= n_max."""

    probs: np.ndarray
    n_max: int
    tail_mass: float

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> "JointPND":
        probs = np.asarray(probs, dtype=float)
        return cls(probs=probs, n_max=probs.shape[0] - 1, tail_mass=1.0 - float(probs.sum()))

    @property
    def marginal_s(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    @property
    def marginal_a(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def _n(self) -> np.ndarray:
        return np.arange(self.n_max + 1, dtype=float)

    @property
    def mean_s(self) -> float:
        return float(self._n() @ self.marginal_s)

    @property
    def mean_a(self) -> float:
        return float(self._n() @ self.marginal_a)

    def covariance_sa(self) -> float:
        """<dn_S dn_A> from the truncated table."""
        n = self._n()
        return float(n @ self.probs @ n - self.mean_s * self.mean_a)

    def variance_difference(self) -> float:
        n = self._n()
        diff = n[:, None] - n[None, :]
        mean = float((diff * self.probs).sum())
        return float((diff**2 * self.probs).sum()) - mean**2

    def nrf(self) -> float:
        """Noise-reduction factor evaluated by direct sums over the table."""
        return self.variance_difference() / (self.mean_s + self.mean_a)


def choose_n_max(b: float, tol: float = 1e-10) -> int:
    """Smallest n_max with geometric tail (b / (1 + b))^n_max below ``tol``."""
    if b < 0:
        raise DomainError("mean photon number must be nonnegative")
    if b == 0:
        return 1
    return max(1, math.ceil(math.log(tol) / math.log(b / (1 + b))))


def _check_n_max(n_max: int) -> None:
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    if n_max > N_MAX_LIMIT:
        raise TruncationError(f"n_max={n_max} exceeds the supported limit {N_MAX_LIMIT}")


def pnd_ideal_paired(b: float, n_max: Optional[int] = None) -> JointPND:
    """Diagonal distribution of perfectly paired photons with mean pair number ``b``."""
    if b < 0:
        raise DomainError("mean pair number must be nonnegative")
    n_max = choose_n_max(b) if n_max is None else n_max
    _check_n_max(n_max)
    n = np.arange(n_max + 1)
    probs = np.zeros((n_max + 1, n_max + 1))
    probs[n, n] = (b / (1 + b)) ** n / (1 + b)
    return JointPND.from_probs(probs)


def pnd_nv0(moments: TwoModeMoments, n_max: Optional[int] = None, tol: float = 1e-8) -> JointPND:
    """Distribution for an empty initial vibrational mode without damping.

    Valid when |D|^2 = B_A (1 + B_S); then photons are emitted either as
    pairs or as unpaired Stokes photons, so p(n_S, n_A) = 0 for n_S < n_A.
    """
    b_s, b_a = moments.b_s, moments.b_a
    d2 = abs(moments.d_sa) ** 2
    if abs(d2 - b_a * (1 + b_s)) > tol * max(1.0, d2):
        raise DomainError("pairing relation |D|^2 = B_A (1 + B_S) violated; use pnd_general")
    if b_s < b_a - tol:
        raise DomainError("pnd_nv0 needs B_S >= B_A")
    n_max = choose_n_max(b_s) if n_max is None else n_max
    _check_n_max(n_max)
    probs = np.zeros((n_max + 1, n_max + 1))
    u = max(b_s - b_a, 0.0) / (1 + b_s)
    v = b_a / (1 + b_s)
    for ns in range(n_max + 1):
        for na in range(ns + 1):
            # C(ns, na) u^(ns - na) v^na / (1 + B_S)
            probs[ns, na] = math.comb(ns, na) * u ** (ns - na) * v**na / (1 + b_s)
    return JointPND.from_probs(probs)


def pnd_general(moments: TwoModeMoments, n_max: Optional[int] = None) -> JointPND:
    """Joint distribution of any zero-mean two-mode Gaussian state.

    The probability generating function sum p(n, m) x^n y^m is the reciprocal
    of the bilinear polynomial c00 + c10 x + c01 y + c11 x y, so the table
    follows from the exact convolution recursion of that reciprocal.
    """
    b_s, b_a = moments.b_s, moments.b_a
    d2 = abs(moments.d_sa) ** 2
    n_max = choose_n_max(max(b_s, b_a)) if n_max is None else n_max
    _check_n_max(n_max)
    c00 = (1 + b_s) * (1 + b_a) - d2
    c10 = -b_s * (1 + b_a) + d2
    c01 = -b_a * (1 + b_s) + d2
    c11 = b_s * b_a - d2
    if c00 <= 0:
        raise DomainError("moments do not describe a normalizable state")
    p = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            acc = 1.0 if n == m == 0 else 0.0
            if n:
                acc -= c10 * p[n - 1, m]
            if m:
                acc -= c01 * p[n, m - 1]
            if n and m:
                acc -= c11 * p[n - 1, m - 1]
            p[n, m] = acc / c00
    return JointPND.from_probs(p)


@dataclass(frozen=True)
class QuasiDistribution:
    """Values of the s-ordered quasi-distribution on a rectangular grid.

    ``values[i, j]`` belongs to ``(w_s[i], w_a[j])``. ``divergence`` is the
    largest contribution of the outermost truncation shell relative to the
    largest |value|; a converged series gives a small number.
    """

    s: float
    w_s: np.ndarray
    w_a: np.ndarray
    values: np.ndarray
    n_max: int
    divergence: float

    @property
    def converged(self) -> bool:
        return self.divergence < 1e-3

    def integral(self) -> float:
        from scipy.integrate import trapezoid

        return float(trapezoid(trapezoid(self.values, self.w_a, axis=1), self.w_s))

    def negativity(self, threshold: float = -1e-6) -> tuple[float, tuple[float, float], float]:
        """Minimum value, its location and the fraction of grid points below ``threshold``."""
        i, j = np.unravel_index(np.argmin(self.values), self.values.shape)
        frac = float(np.mean(self.values < threshold))
        return float(self.values[i, j]), (float(self.w_s[i]), float(self.w_a[j])), frac


def laguerre_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """Rows L_0(x) .. L_{n_max}(x) by the three-term upward recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 - x
    for k in range(1, n_max):
        out[k + 1] = ((2 * k + 1 - x) * out[k] - k * out[k - 1]) / (k + 1)
    return out


def quasi_distribution(
    pnd: JointPND,
    s: float,
    w_s: Optional[np.ndarray] = None,
    w_a: Optional[np.ndarray] = None,
    strict: bool = True,
) -> QuasiDistribution:
    """s-ordered quasi-distribution of integrated Stokes/anti-Stokes intensities.

    P(W_S, W_A) = 4/(1-s)^2 exp(-2(W_S+W_A)/(1-s))
                  * sum p(n, m) r^(n+m) L_n(4 W_S/(1-s^2)) L_m(4 W_A/(1-s^2)),
    with r = (s+1)/(s-1) and standard Laguerre polynomials, so each term
    integrates to p(n, m).

    Parameters
    ----------
    pnd : JointPND
        Photon-number table; its size fixes the truncation of the double sum.
    s : float
        Ordering parameter in (0, 1).
    w_s, w_a : array_like, optional
        Intensity grids. Default: 101 points on [0, 5(1 + <n>)] for each field.
    strict : bool
        Raise :class:`InstabilityError` if the outermost shell of the series
        is not small compared with the result.
    """
    if not 0 < s < 1:
        raise DomainError("ordering parameter s must lie in (0, 1)")
    if w_s is None:
        w_s = np.linspace(0.0, 5 * (1 + pnd.mean_s), 101)
    if w_a is None:
        w_a = np.linspace(0.0, 5 * (1 + pnd.mean_a), 101)
    w_s = np.asarray(w_s, dtype=float)
    w_a = np.asarray(w_a, dtype=float)
    if np.any(w_s < 0) or np.any(w_a < 0):
        raise DomainError("intensities must be nonnegative")
    n = pnd.n_max
    r = (s + 1) / (s - 1)
    scale = 4 / (1 - s * s)
    ls = laguerre_table(n, scale * w_s) * np.exp(-2 * w_s / (1 - s))
    la = laguerre_table(n, scale * w_a) * np.exp(-2 * w_a / (1 - s))
    k = np.arange(n + 1)
    weights = pnd.probs * r ** (k[:, None] + k[None, :])
    pref = 4 / (1 - s) ** 2
    values = pref * ls.T @ weights @ la
    shell = weights.copy()
    shell[:n, :n] = 0.0
    last = pref * np.abs(ls.T @ shell @ la)
    peak = float(np.max(np.abs(values)))
    divergence = float(np.max(last)) / peak if peak > 0 else 0.0
    if pnd.tail_mass <= 1e-15:
        divergence = 0.0  # the table is complete, so the finite sum is exact
    qd = QuasiDistribution(s=s, w_s=w_s, w_a=w_a, values=values, n_max=n, divergence=divergence)
    if strict and not qd.converged:
        raise InstabilityError(
            f"series not converged at n_max={n} (outer shell {divergence:.3g} of peak); "
            "use a smaller s or a larger n_max"
        )
    return qd


def existence_threshold(moments: TwoModeMoments) -> float:
    """Largest s for which the s-ordered distribution of the Gaussian state exists.

    The s-ordered function is a Gaussian with normally ordered covariance
    shifted by (1 - s)/2; it exists while that matrix stays positive definite.
    """
    b_s, b_a, d = moments.b_s, moments.b_a, abs(moments.d_sa)
    # eigenvalue condition on [[B_S + c, D], [D, B_A + c]] with c = (1 - s)/2
    c_min = (-(b_s + b_a) + math.sqrt((b_s - b_a) ** 2 + 4 * d * d)) / 2
    return 1 - 2 * c_min


def _multimode_integrand(moments: TwoModeMoments) -> tuple[float, float]:
    b_s, b_a, d2 = moments.b_s, moments.b_a, abs(moments.d_sa) ** 2
    return b_s + b_a + b_s**2 + b_a**2 - 2 * d2, b_s + b_a


def multimode_nrf_closed(epsilon: float, delta: float) -> float:
    """Multimode noise-reduction factor around the first balanced pump, ideal case."""
    if not epsilon > 1:
        raise DomainError("epsilon must exceed 1")
    if not 0 < delta < 2:
        raise DomainError("delta must lie in (0, 2)")
    x = math.pi * delta
    num = 2 * x * (4 * epsilon - 1) - 8 * epsilon * math.sin(x) + math.sin(2 * x)
    den = 8 * (x * (7 * epsilon - 1) + 16 * epsilon * math.sin(x / 2) + (epsilon + 1) * math.sin(x))
    return num / den


def multimode_nrf_numeric(params: RamanParams, delta: float, n_quad: int = 64) -> float:
    """Multimode noise-reduction factor by Gauss-Legendre quadrature over the pump.

    Modes are uniformly distributed in pump amplitude over
    a1 [1 - delta/2, 1 + delta/2] with a1 = pi / sqrt(epsilon - 1);
    ``params.pump_amp`` is ignored.
    """
    if not params.epsilon > 1:
        raise DomainError("epsilon must exceed 1")
    if not 0 < delta < 2:
        raise DomainError("delta must lie in (0, 2)")
    a1 = math.pi / math.sqrt(params.epsilon - 1)
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    pumps = a1 * (1 + nodes * delta / 2)
    num = den = 0.0
    for pump, w in zip(pumps, weights):
        top, bottom = _multimode_integrand(moments_general(params.with_(pump_amp=float(pump))))
        num += w * top
        den += w * bottom
    return num / den


@dataclass(frozen=True)
class RhoElements:
    """Nonzero elements <m, m|rho|n, n> of the perfectly paired state.

    ``elements[(m_S, m_A, n_S, n_A)]`` holds the value.
    """

    elements: dict
    n_max: int

    def __getitem__(self, key) -> float:
        return self.elements.get(tuple(key), 0.0)

    def trace(self) -> float:
        return float(sum(v for (ms, ma, ns, na), v in self.elements.items() if ms == ns and ma == na))

    def pair_matrix(self) -> np.ndarray:
        """Matrix over the pair basis |n, n>, n = 0..n_max."""
        out = np.zeros((self.n_max + 1, self.n_max + 1))
        for (ms, _, ns, _), v in self.elements.items():
            out[ms, ns] = v
        return out


def balanced_pair_number(epsilon: float) -> float:
    """Mean pair number B at the balanced pump amplitudes."""
    if not epsilon > 1:
        raise DomainError("balanced points exist only for epsilon > 1")
    return 4 * epsilon / (epsilon - 1) ** 2


def rho_balanced(epsilon: float, n_max: int) -> RhoElements:
    """Statistical operator of the perfectly paired state at a balanced pump.

    The anti-normally ordered characteristic function of the pure paired state
    gives a single nonzero correlation coefficient D = -sqrt(B / (B + 1)) and
    the elements <m, m|rho|n, n> = D^m D^n / (B + 1).
    """
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    b = balanced_pair_number(epsilon)
    d = -math.sqrt(b / (b + 1))
    elements = {}
    for m in range(n_max + 1):
        for n in range(n_max + 1):
            elements[(m, m, n, n)] = d**m * d**n / (b + 1)
    return RhoElements(elements=elements, n_max=n_max)

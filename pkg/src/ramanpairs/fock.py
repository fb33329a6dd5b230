"""Brute-force truncated Fock-space evolution of the Stokes, anti-Stokes and
vibrational modes, used as an independent check of the Gaussian formulas.

Mode order in every array is (S, A, V). The state evolves in the normalized
position ``zfrac`` as

    d rho / dz = i [K, rho] + gamma (n_T + 1) D[a_V] rho + gamma n_T D[a_V^+] rho

with the interaction generator ``K`` of :func:`build_generator`. Without
damping the quantity n_S - n_A - n_V is conserved, so each Fock component of
the thermal vibrational state is propagated as a pure vector inside its own
conserved sector. With damping the full density operator is integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .distributions import JointPND
from .errors import DomainError, InconclusiveError, ResourceError
from .model import RamanParams, TwoModeMoments, couplings

DENSE_LIMIT = 16**3
PURE_LIMIT = 2_000_000
THERMAL_TAIL = 1e-10
ADAPTIVE_PROBES = 8


@dataclass(frozen=True)
class FockConfig:
    """Truncation and integration settings of one oracle run.

    ``steps`` is the number of output points along z used for trajectory
    checks; the propagation itself is an adaptive Krylov/Taylor exponential. ``tol`` bounds the population
    allowed on the top Fock level of each mode.
    """

    dim_s: int
    dim_a: int
    dim_v: int
    params: RamanParams
    steps: int = 1
    tol: float = 1e-6
    zfrac: float = 1.0

    def __post_init__(self):
        if min(self.dim_s, self.dim_a, self.dim_v) < 2:
            raise DomainError("all truncation dimensions must be at least 2")
        if self.steps < 1:
            raise DomainError("steps must be at least 1")
        if not 0.0 <= self.zfrac <= 1.0:
            raise DomainError("zfrac must lie in [0, 1]")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.dim_s, self.dim_a, self.dim_v)


@dataclass
class FockState:
    """Truncated three-mode state.

    Either ``components`` (weighted pure states, each an array of shape
    ``dims``) or ``rho`` (array of shape ``dims + dims``) is set.
    """

    dims: tuple[int, int, int]
    zfrac: float
    components: Optional[list[tuple[float, np.ndarray]]] = None
    rho: Optional[np.ndarray] = None
    initial_tail: float = 0.0
    leakage: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.leakage = self._boundary_population()

    def diagonal(self) -> np.ndarray:
        if self.rho is not None:
            n = int(np.prod(self.dims))
            return np.real(np.diagonal(self.rho.reshape(n, n))).reshape(self.dims)
        out = np.zeros(self.dims)
        for w, psi in self.components:
            out += w * np.abs(psi) ** 2
        return out

    def trace(self) -> float:
        return float(self.diagonal().sum())

    def boundary_populations(self) -> tuple[float, float, float]:
        """Population of the highest kept Fock level of each mode."""
        p = self.diagonal()
        return (float(p[-1].sum()), float(p[:, -1].sum()), float(p[:, :, -1].sum()))

    def _boundary_population(self) -> float:
        return max(self.boundary_populations())

    def expect_number(self, mode: int) -> float:
        n = np.arange(self.dims[mode], dtype=float)
        shape = [1, 1, 1]
        shape[mode] = -1
        return float((self.diagonal() * n.reshape(shape)).sum())

    def expect_pair(self) -> complex:
        """<a_S a_A>."""
        ds, da, _ = self.dims
        amp = np.sqrt(np.arange(1, ds))[:, None, None] * np.sqrt(np.arange(1, da))[None, :, None]
        if self.rho is not None:
            # Tr(rho a_S a_A) = sum_n <n + 1_S + 1_A|rho|n> sqrt(n_S + 1) sqrt(n_A + 1)
            block = np.einsum("abvabv->ab", self.rho[1:, 1:, :, :-1, :-1, :])
            return complex(np.sum(block * amp[..., 0]))
        total = 0j
        for w, psi in self.components:
            total += w * np.sum(np.conj(psi[:-1, :-1, :]) * amp * psi[1:, 1:, :])
        return complex(total)

    def expect_sv(self) -> complex:
        """<a_S a_V>."""
        ds, _, dv = self.dims
        amp = np.sqrt(np.arange(1, ds))[:, None, None] * np.sqrt(np.arange(1, dv))[None, None, :]
        if self.components is not None:
            total = 0j
            for w, psi in self.components:
                total += w * np.sum(np.conj(psi[:-1, :, :-1]) * amp * psi[1:, :, 1:])
            return complex(total)
        block = np.einsum("abcabc->abc", self.rho[1:, :, 1:, :-1, :, :-1])
        return complex(np.sum(block * amp))

    def reduced_sa(self) -> np.ndarray:
        """Reduced (S, A) density operator as a (ds*da, ds*da) matrix."""
        ds, da, dv = self.dims
        if self.rho is not None:
            red = np.einsum("abvcdv->abcd", self.rho)
        else:
            red = np.zeros((ds, da, ds, da), dtype=complex)
            for w, psi in self.components:
                red += w * np.einsum("abv,cdv->abcd", psi, np.conj(psi))
        return red.reshape(ds * da, ds * da)


def _annihilator(dim: int) -> sparse.csr_matrix:
    return sparse.diags(np.sqrt(np.arange(1, dim)), 1, shape=(dim, dim), format="csr")


def _mode_ops(dims: Sequence[int]) -> list[sparse.csr_matrix]:
    ops = []
    for k in range(3):
        factors = [sparse.identity(d, format="csr") for d in dims]
        factors[k] = _annihilator(dims[k])
        out = factors[0]
        for f in factors[1:]:
            out = sparse.kron(out, f, format="csr")
        ops.append(out)
    return ops


def _generator_constants(params: RamanParams) -> tuple[complex, complex]:
    # chosen so that -i[K, a_S] = g_S a_V^+ and -i[K, a_A] = g_A a_V
    g_s, g_a = couplings(params)
    return -1j * g_s, -1j * g_a


def build_generator(params: RamanParams, dims: Sequence[int]) -> sparse.csr_matrix:
    """Interaction generator K on the truncated (S, A, V) space.

    K = c_S a_V^+ a_S^+ + c_A a_V a_A^+ + h.c., normalized so that one unit of
    ``zfrac`` corresponds to the full medium.
    """
    n = int(np.prod(dims))
    if n > PURE_LIMIT:
        raise ResourceError(f"truncated space of dimension {n} exceeds {PURE_LIMIT}")
    a_s, a_a, a_v = _mode_ops(dims)
    c_s, c_a = _generator_constants(params)
    k = c_s * (a_v.T @ a_s.T) + c_a * (a_v @ a_a.T)
    return (k + k.conj().T).tocsr()


def _thermal_weights(n_v: float, dim_v: int) -> tuple[np.ndarray, float]:
    if n_v == 0:
        w = np.zeros(dim_v)
        w[0] = 1.0
        return w, 0.0
    ratio = n_v / (1 + n_v)
    w = ratio ** np.arange(dim_v) / (1 + n_v)
    keep = w > THERMAL_TAIL * w[0] * 1e-2
    w = np.where(keep, w, 0.0)
    return w, float(max(0.0, 1.0 - w.sum()))


def _sector(dims: Sequence[int], k: int) -> tuple[np.ndarray, dict]:
    ds, da, dv = dims
    basis = []
    for ns in range(ds):
        for na in range(da):
            nv = ns - na + k
            if 0 <= nv < dv:
                basis.append((ns, na, nv))
    return np.array(basis, dtype=int), {b: i for i, b in enumerate(basis)}


def _sector_generator(params: RamanParams, basis: np.ndarray, index: dict, dims) -> sparse.csr_matrix:
    ds, da, dv = dims
    c_s, c_a = _generator_constants(params)
    rows, cols, vals = [], [], []
    for i, (ns, na, nv) in enumerate(basis):
        # a_V^+ a_S^+ : (ns, na, nv) -> (ns + 1, na, nv + 1)
        j = index.get((ns + 1, na, nv + 1))
        if j is not None:
            rows.append(j)
            cols.append(i)
            vals.append(c_s * math.sqrt((ns + 1) * (nv + 1)))
        # a_V a_A^+ : (ns, na, nv) -> (ns, na + 1, nv - 1)
        j = index.get((ns, na + 1, nv - 1))
        if j is not None:
            rows.append(j)
            cols.append(i)
            vals.append(c_a * math.sqrt((na + 1) * nv))
    m = len(basis)
    k = sparse.csr_matrix((vals, (rows, cols)), shape=(m, m), dtype=complex)
    return (k + k.conj().T).tocsr()


def _evolve_pure(config: FockConfig, zs: np.ndarray) -> list[FockState]:
    dims = config.dims
    if int(np.prod(dims)) > PURE_LIMIT:
        raise ResourceError("truncated space too large for the pure-state path")
    weights, tail = _thermal_weights(config.params.n_v, config.dim_v)
    per_z: list[list[tuple[float, np.ndarray]]] = [[] for _ in zs]
    for k, w in enumerate(weights):
        if w == 0:
            continue
        basis, index = _sector(dims, k)
        gen = _sector_generator(config.params, basis, index, dims)
        psi0 = np.zeros(len(basis), dtype=complex)
        psi0[index[(0, 0, k)]] = 1.0
        vectors, vec, prev = [], psi0, 0.0
        for z in zs:
            if z > prev:
                vec = expm_multiply(1j * (z - prev) * gen, vec)
            vectors.append(vec)
            prev = z
        for slot, vec in zip(per_z, vectors):
            full = np.zeros(dims, dtype=complex)
            full[basis[:, 0], basis[:, 1], basis[:, 2]] = vec
            slot.append((float(w), full))
    return [FockState(dims, float(z), components=c, initial_tail=tail) for z, c in zip(zs, per_z)]


def _charge_sectors(dims: Sequence[int]) -> dict[int, np.ndarray]:
    """Basis states grouped by the charge q = n_S - n_A - n_V."""
    grid = np.indices(dims).reshape(3, -1).T
    q = grid[:, 0] - grid[:, 1] - grid[:, 2]
    return {int(c): grid[q == c] for c in np.unique(q)}


def _evolve_mixed(config: FockConfig, zs: np.ndarray) -> list[FockState]:
    # The generator conserves q and a_V (a_V^+) shifts it by +1 (-1). Starting
    # from a state diagonal in q, coherences between different q never appear,
    # so rho is propagated as a set of blocks, one per charge sector, with the
    # block-sparse Liouvillian applied through expm_multiply.
    dims = config.dims
    n = int(np.prod(dims))
    if n > DENSE_LIMIT:
        raise ResourceError(f"density operator of dimension {n} exceeds {DENSE_LIMIT}")
    p = config.params
    sectors = _charge_sectors(dims)
    charges = sorted(sectors)
    gens, nums, lowers, offsets = {}, {}, {}, {}
    total = 0
    for c in charges:
        basis = sectors[c]
        index = {tuple(int(v) for v in b): i for i, b in enumerate(basis)}
        gens[c] = _sector_generator(p, basis, index, dims).toarray()
        nums[c] = basis[:, 2].astype(float)
        offsets[c] = (total, len(basis))
        total += len(basis) ** 2
    for c in charges:
        if c + 1 not in sectors:
            continue
        # a_V maps sector c into sector c + 1
        target = {tuple(int(v) for v in b): i for i, b in enumerate(sectors[c + 1])}
        low = np.zeros((len(sectors[c + 1]), len(sectors[c])))
        for i, (ns, na, nv) in enumerate(sectors[c]):
            if nv > 0:
                low[target[(int(ns), int(na), int(nv) - 1)], i] = math.sqrt(nv)
        lowers[c] = low
    down = p.gamma_n * (p.n_t + 1)
    up = p.gamma_n * p.n_t

    # Row-major vectorization: vec(X rho Y) = (X kron Y^T) vec(rho).
    pieces = []
    for c in charges:
        m = len(sectors[c])
        eye = sparse.identity(m, format="csr")
        gen = sparse.csr_matrix(gens[c])
        nv = nums[c]
        rate = 0.5 * (down * nv + up * (nv + 1))
        diag = sparse.diags(np.add.outer(rate, rate).ravel())
        own = 1j * (sparse.kron(gen, eye) - sparse.kron(eye, gen.T)) - diag
        pieces.append((c, c, own))
        if down and c - 1 in lowers:
            low = sparse.csr_matrix(lowers[c - 1])
            pieces.append((c, c - 1, down * sparse.kron(low, low)))
        if up and c in lowers:
            low_t = sparse.csr_matrix(lowers[c].T)
            pieces.append((c, c + 1, up * sparse.kron(low_t, low_t)))
    rows, cols, vals = [], [], []
    for c_out, c_in, mat in pieces:
        coo = mat.tocoo()
        rows.append(coo.row + offsets[c_out][0])
        cols.append(coo.col + offsets[c_in][0])
        vals.append(coo.data)
    liouvillian = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(total, total)
    )

    def block(y, c):
        start, m = offsets[c]
        return y[start : start + m * m].reshape(m, m)

    weights, tail = _thermal_weights(p.n_v, dims[2])
    y0 = np.zeros(total, dtype=complex)
    for k, w in enumerate(weights):
        if w:
            c = -k
            basis = sectors[c]
            i = int(np.flatnonzero((basis == (0, 0, k)).all(axis=1))[0])
            start, m = offsets[c]
            y0[start + i * m + i] = w
    ys, y, prev = [], y0, 0.0
    for z in zs:
        if z > prev:
            y = expm_multiply(liouvillian * (z - prev), y)
        ys.append(y)
        prev = z

    states = []
    flat_index = np.arange(n).reshape(dims)
    for z, y in zip(zs, ys):
        rho = np.zeros((n, n), dtype=complex)
        for c in charges:
            idx = flat_index[tuple(sectors[c].T)]
            rho[np.ix_(idx, idx)] = block(y, c)
        states.append(FockState(dims, float(z), rho=rho.reshape(dims + dims), initial_tail=tail))
    return states


def sign_self_test(params: RamanParams, tol: float = 1e-10) -> None:
    """Check that d<a_S a_V>/dz at the vacuum equals g_S, fixing the sign of z."""
    dims = (3, 3, 3)
    gen = build_generator(params, dims).toarray()
    a_s, _, a_v = (op.toarray() for op in _mode_ops(dims))
    rho0 = np.zeros((27, 27), dtype=complex)
    rho0[0, 0] = 1.0
    drho = 1j * (gen @ rho0 - rho0 @ gen)
    rate = np.trace(drho @ a_s @ a_v)
    expected = couplings(params)[0]
    if abs(rate - expected) > tol * max(1.0, abs(expected)):
        raise AssertionError(f"generator sign mismatch: {rate} vs {expected}")


def evolve_trajectory(config: FockConfig, zfracs: Sequence[float]) -> list[FockState]:
    """Evolve from z = 0 and return the states at the sorted positions ``zfracs``."""
    zs = np.asarray(zfracs, dtype=float)
    if zs.ndim != 1 or len(zs) == 0 or np.any(np.diff(zs) <= 0) or zs[0] < 0 or zs[-1] > 1:
        raise DomainError("zfracs must be increasing values in [0, 1]")
    sign_self_test(config.params)
    if config.params.gamma_n == 0:
        states = _evolve_pure(config, zs)
    else:
        states = _evolve_mixed(config, zs)
    worst = max(s.leakage for s in states)
    if worst > config.tol:
        raise InconclusiveError(
            f"boundary population {worst:.3g} exceeds tol {config.tol:g}; increase the dimensions"
        )
    return states


def evolve(config: FockConfig) -> FockState:
    """Evolve the initial state (vacuum S, A and thermal V) to ``config.zfrac``."""
    if config.steps > 1:
        zs = np.linspace(0.0, config.zfrac, config.steps + 1)[1:]
        return evolve_trajectory(config, zs)[-1]
    if config.zfrac == 0:
        return evolve_trajectory(config, [0.0])[0]
    return evolve_trajectory(config, [config.zfrac])[0]


def extract_moments(state: FockState) -> TwoModeMoments:
    return TwoModeMoments(
        b_s=state.expect_number(0),
        b_a=state.expect_number(1),
        d_sa=state.expect_pair(),
        b_v=state.expect_number(2),
    )


def extract_pnd(state: FockState, n_max: int) -> JointPND:
    """Joint Stokes/anti-Stokes photon-number probabilities after tracing out V."""
    p = state.diagonal().sum(axis=2)
    ds, da = p.shape
    if n_max + 1 > min(ds, da):
        raise DomainError(f"n_max={n_max} exceeds the truncation ({ds}, {da})")
    probs = p[: n_max + 1, : n_max + 1].copy()
    return JointPND(probs=probs, n_max=n_max, tail_mass=1.0 - float(probs.sum()))


def _displacement(beta: complex, dim: int, pad: int = 30) -> np.ndarray:
    big = dim + pad
    a = np.diag(np.sqrt(np.arange(1, big)), 1).astype(complex)
    return expm(beta * a.conj().T - np.conj(beta) * a)[:dim, :dim]


def extract_parity(state: FockState, beta_s: complex, beta_a: complex) -> float:
    """Expectation of the displaced joint parity D(beta) (-1)^(n_S + n_A) D(beta)^+."""
    ds, da, _ = state.dims
    u = np.kron(_displacement(beta_s, ds), _displacement(beta_a, da))
    chi = u.conj().T @ state.reduced_sa() @ u
    sign = np.outer((-1.0) ** np.arange(ds), (-1.0) ** np.arange(da)).ravel()
    return float(np.real(np.sum(sign * np.diagonal(chi))))


def evolve_adaptive(
    params: RamanParams,
    zfrac: float = 1.0,
    tol: float = 1e-9,
    start: tuple[int, int, int] = (16, 16, 16),
    max_dim: int = 400,
) -> FockState:
    """Evolve with truncations grown until every boundary population is below ``tol``.

    The boundary populations are checked at several positions along the
    path, since a mode can be crowded midway and empty again at the end.
    Each mode whose highest level carries more than ``tol`` has its dimension
    multiplied by 1.5. Only the undamped pure-state path is supported, since
    the dense density operator is limited to small spaces anyway.
    """
    if params.gamma_n != 0:
        raise DomainError("adaptive truncation is available only without damping")
    dims = list(start)
    probes = np.linspace(0.0, zfrac, ADAPTIVE_PROBES + 1)[1:] if zfrac > 0 else np.array([0.0])
    while True:
        config = FockConfig(*dims, params=params, zfrac=zfrac, tol=float("inf"))
        states = evolve_trajectory(config, probes)
        pops = np.max([s.boundary_populations() for s in states], axis=0)
        if max(pops) <= tol:
            return states[-1]
        for k, pop in enumerate(pops):
            if pop > tol:
                dims[k] = int(math.ceil(dims[k] * 1.5))
        if max(dims) > max_dim:
            raise ResourceError(f"truncation {dims} exceeds max_dim={max_dim}")

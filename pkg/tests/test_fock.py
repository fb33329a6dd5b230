import math

import numpy as np
import pytest
from scipy.linalg import expm

from ramanpairs.errors import DomainError, InconclusiveError, ResourceError
from ramanpairs.fock import (
    FockConfig,
    build_generator,
    evolve,
    evolve_adaptive,
    evolve_trajectory,
    extract_moments,
    extract_parity,
    extract_pnd,
    sign_self_test,
)
from ramanpairs.model import RamanParams, conservation_residual, moments_general, moments_thermal
from ramanpairs.verify import random_lossless_params

SQRT3 = math.sqrt(3.0)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-12)


class TestGenerator:
    def test_zero_pump(self):
        gen = build_generator(RamanParams(epsilon=4.0, pump_amp=0.0), (4, 4, 4))
        assert gen.count_nonzero() == 0

    def test_hermitian(self):
        gen = build_generator(RamanParams(epsilon=2.0, pump_amp=0.7, phi_l=0.3), (4, 3, 5)).toarray()
        np.testing.assert_allclose(gen, gen.conj().T, atol=1e-15)

    @pytest.mark.parametrize("phi", [-math.pi / 2, 0.0, 1.1])
    def test_sign(self, phi):
        sign_self_test(RamanParams(epsilon=4.0, pump_amp=0.9, phi_l=phi))

    def test_resource_limit(self):
        with pytest.raises(ResourceError):
            build_generator(RamanParams(epsilon=4.0, pump_amp=1.0), (200, 200, 200))

    def test_small_dims_rejected(self):
        with pytest.raises(DomainError):
            FockConfig(1, 4, 4, params=RamanParams(epsilon=4.0, pump_amp=1.0))


class TestPureStates:
    def test_vacuum(self):
        state = evolve(FockConfig(4, 4, 4, params=RamanParams(epsilon=4.0, pump_amp=0.0)))
        m = extract_moments(state)
        assert (m.b_s, m.b_a, abs(m.d_sa)) == (0.0, 0.0, 0.0)
        assert extract_pnd(state, 2).probs[0, 0] == pytest.approx(1.0)
        assert extract_parity(state, 0, 0) == pytest.approx(1.0)

    def test_dense_propagator_agrees(self):
        # independent check of the sector propagation against a dense matrix exponential
        params = RamanParams(epsilon=0.5, pump_amp=0.4)
        dims = (6, 6, 6)
        gen = build_generator(params, dims).toarray()
        psi0 = np.zeros(216, dtype=complex)
        psi0[0] = 1.0
        psi = (expm(1j * gen) @ psi0).reshape(dims)
        state = evolve(FockConfig(*dims, params=params, tol=1.0))
        np.testing.assert_allclose(np.abs(state.components[0][1]), np.abs(psi), atol=1e-12)

    @pytest.mark.parametrize("params", random_lossless_params(6, seed=11))
    def test_lossless_matches_analytic(self, params):
        m = extract_moments(evolve_adaptive(params, tol=1e-12, start=(12, 12, 12)))
        a = moments_general(params)
        assert rel(m.b_s, a.b_s) < 1e-7
        assert rel(m.b_a, a.b_a) < 1e-7
        assert abs(m.d_sa - a.d_sa) < 1e-7 * abs(a.d_sa)

    def test_thermal_quarter_period(self):
        params = RamanParams(epsilon=4.0, n_v=0.5, pump_amp=math.pi / (2 * SQRT3))
        m = extract_moments(evolve_adaptive(params, tol=1e-12))
        assert m.b_s == pytest.approx(17 / 18, rel=1e-8)
        assert m.b_a == pytest.approx(10 / 9, rel=1e-8)
        assert m.b_v == pytest.approx(1 / 3, rel=1e-8)
        assert m.d_sa.real == pytest.approx(moments_thermal(params).d_sa.real, rel=1e-8)
        assert m.d_sa.real == pytest.approx(-11 / 9, rel=1e-8)

    def test_balanced_state_is_paired(self):
        params = RamanParams(epsilon=4.0, pump_amp=math.pi / SQRT3)
        state = evolve_adaptive(params, tol=1e-12, start=(40, 40, 12))
        p = extract_pnd(state, 30).probs
        off = p.sum() - np.trace(p)
        assert off < 1e-6

    def test_conservation_along_trajectory(self):
        params = RamanParams(epsilon=4.0, pump_amp=1.2, n_v=0.3)
        states = evolve_trajectory(FockConfig(40, 40, 40, params=params, tol=1e-9), np.linspace(0.05, 1, 12))
        for s in states:
            assert abs(conservation_residual(extract_moments(s), 0.3)) < 1e-9

    def test_uneven_positions(self):
        params = RamanParams(epsilon=2.0, pump_amp=0.8)
        cfg = FockConfig(26, 26, 26, params=params, tol=1e-10)
        states = evolve_trajectory(cfg, [0.1, 0.25, 0.9])
        for s in states:
            assert extract_moments(s).b_s == pytest.approx(moments_general(params, s.zfrac).b_s, rel=1e-8)

    def test_leakage_is_reported(self):
        params = RamanParams(epsilon=0.25, pump_amp=1.5)
        with pytest.raises(InconclusiveError):
            evolve(FockConfig(4, 4, 4, params=params, tol=1e-6))

    def test_bad_positions(self):
        cfg = FockConfig(4, 4, 4, params=RamanParams(epsilon=4.0, pump_amp=0.1))
        with pytest.raises(DomainError):
            evolve_trajectory(cfg, [0.5, 0.2])

    def test_adaptive_refuses_damping(self):
        with pytest.raises(DomainError):
            evolve_adaptive(RamanParams(epsilon=4.0, pump_amp=1.0, gamma_n=1.0))


class TestMixedStates:
    @pytest.mark.parametrize("gamma,n_v", [(0.5, 0.4), (2.0, 1.0)])
    def test_free_phonon_decay(self, gamma, n_v):
        params = RamanParams(epsilon=4.0, pump_amp=0.0, gamma_n=gamma, n_v=n_v)
        states = evolve_trajectory(FockConfig(2, 2, 40, params=params, tol=1e-3), [0.3, 1.0])
        for s in states:
            assert s.expect_number(2) == pytest.approx(n_v * math.exp(-gamma * s.zfrac), rel=1e-4)

    def test_trace_preserved(self):
        # with no reservoir heating nothing is pushed past the top level
        params = RamanParams(epsilon=4.0, pump_amp=0.5, gamma_n=1.0, n_v=0.2)
        state = evolve(FockConfig(10, 10, 8, params=params, tol=1e-2))
        assert state.trace() + state.initial_tail == pytest.approx(1.0, abs=1e-6)

    def test_damped_matches_analytic(self):
        params = RamanParams(epsilon=4.0, pump_amp=0.8, gamma_n=1.0, n_v=0.1, n_t=0.1)
        m = extract_moments(evolve(FockConfig(12, 12, 8, params=params, tol=1e-4)))
        a = moments_general(params)
        assert rel(m.b_s, a.b_s) < 1e-3
        assert rel(m.b_a, a.b_a) < 1e-3
        assert abs(m.d_sa - a.d_sa) < 1e-3 * abs(a.d_sa)

    def test_reservoir_heats_phonons(self):
        params = RamanParams(epsilon=4.0, pump_amp=0.0, gamma_n=3.0, n_t=0.5)
        state = evolve(FockConfig(2, 2, 30, params=params, tol=1e-3))
        assert state.expect_number(2) == pytest.approx(0.5 * (1 - math.exp(-3.0)), rel=1e-4)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import eval_laguerre

from ramanpairs.distributions import (
    JointPND,
    balanced_pair_number,
    choose_n_max,
    existence_threshold,
    laguerre_table,
    multimode_nrf_closed,
    multimode_nrf_numeric,
    pnd_general,
    pnd_ideal_paired,
    pnd_nv0,
    quasi_distribution,
    rho_balanced,
)
from ramanpairs.errors import DomainError, InstabilityError, TruncationError
from ramanpairs.fock import FockConfig, evolve, evolve_adaptive, extract_moments, extract_pnd
from ramanpairs.measures import nrf
from ramanpairs.model import RamanParams, TwoModeMoments, moments_general, moments_lossless

SQRT3 = math.sqrt(3.0)
BALANCED4 = TwoModeMoments(16 / 9, 16 / 9, -20 / 9)


def paired_strategy():
    return st.builds(
        lambda eps, pump: moments_lossless(RamanParams(epsilon=eps, pump_amp=pump)),
        st.floats(0.2, 8.0),
        st.floats(0.05, 1.2),
    )


class TestIdealPaired:
    def test_vacuum(self):
        t = pnd_ideal_paired(0.0, 5)
        assert t.probs[0, 0] == 1.0 and t.probs.sum() == 1.0

    def test_balanced_values(self):
        t = pnd_ideal_paired(16 / 9, 10)
        assert t.probs[0, 0] == pytest.approx(0.36, rel=1e-14)
        assert t.probs[1, 1] == pytest.approx((16 / 9) * (9 / 25) ** 2, rel=1e-14)
        assert np.count_nonzero(t.probs - np.diag(np.diag(t.probs))) == 0

    @given(b=st.floats(0.0, 5.0))
    def test_normalized_with_tail(self, b):
        t = pnd_ideal_paired(b, 20)
        assert t.probs.sum() + t.tail_mass == pytest.approx(1.0, abs=1e-14)
        assert t.tail_mass == pytest.approx((b / (1 + b)) ** 21, abs=1e-14)


class TestVacuumSeeded:
    def test_asymptotic_like_example(self):
        t = pnd_nv0(TwoModeMoments(7 / 9, 4 / 9, -8 / 9), 10)
        assert t.probs[1, 0] == pytest.approx(27 / 256, rel=1e-12)

    def test_balanced_reduces_to_paired(self):
        np.testing.assert_allclose(pnd_nv0(BALANCED4, 15).probs, pnd_ideal_paired(16 / 9, 15).probs, atol=1e-14)

    def test_rejects_unpaired(self):
        with pytest.raises(DomainError):
            pnd_nv0(TwoModeMoments(1.0, 0.5, -0.2), 5)

    @given(m=paired_strategy())
    def test_equals_general(self, m):
        np.testing.assert_allclose(pnd_nv0(m, 12).probs, pnd_general(m, 12).probs, atol=1e-10)


class TestGeneral:
    def test_balanced_vacuum_probability(self):
        assert pnd_general(BALANCED4, 4).probs[0, 0] == pytest.approx(0.36, rel=1e-12)

    @pytest.mark.parametrize("b_s,b_a", [(0.3, 1.4), (2.0, 0.5)])
    def test_product_of_thermal(self, b_s, b_a):
        t = pnd_general(TwoModeMoments(b_s, b_a, 0j), 8)
        n = np.arange(9)
        ps = b_s**n / (1 + b_s) ** (n + 1)
        pa = b_a**n / (1 + b_a) ** (n + 1)
        np.testing.assert_allclose(t.probs, np.outer(ps, pa), rtol=1e-12)

    def test_n_max_limit(self):
        with pytest.raises(TruncationError):
            pnd_general(BALANCED4, 61)

    def test_choose_n_max(self):
        n = choose_n_max(16 / 9, 1e-10)
        assert (16 / 9 / (1 + 16 / 9)) ** (n + 1) < 1e-10
        with pytest.raises(TruncationError):
            pnd_ideal_paired(1e6)

    @pytest.mark.parametrize(
        "params",
        [
            RamanParams(epsilon=4.0, pump_amp=0.7, n_v=0.5),
            RamanParams(epsilon=0.5, pump_amp=0.6, n_v=0.3),
            RamanParams(epsilon=2.0, pump_amp=1.0, n_v=0.1),
        ],
    )
    def test_matches_fock_oracle(self, params):
        state = evolve_adaptive(params, tol=1e-10, start=(16, 16, 16))
        oracle = extract_pnd(state, 6)
        np.testing.assert_allclose(pnd_general(moments_general(params), 6).probs, oracle.probs, atol=1e-9)

    def test_marginals_and_moments(self):
        m = moments_general(RamanParams(epsilon=4.0, pump_amp=1.2, n_v=0.5))
        t = pnd_general(m, 50)
        assert t.tail_mass < 1e-10
        assert t.mean_s == pytest.approx(m.b_s, rel=1e-8)
        assert t.mean_a == pytest.approx(m.b_a, rel=1e-8)
        assert t.nrf() == pytest.approx(nrf(m), rel=1e-7)
        assert t.covariance_sa() == pytest.approx(abs(m.d_sa) ** 2, rel=1e-7)

    @given(
        eps=st.floats(0.3, 6.0), pump=st.floats(0.05, 1.0), n_v=st.floats(0.0, 1.0),
        gamma=st.floats(0.0, 3.0), n_t=st.floats(0.0, 1.0),
    )
    def test_nonnegative_and_normalized(self, eps, pump, n_v, gamma, n_t):
        m = moments_general(RamanParams(epsilon=eps, pump_amp=pump, n_v=n_v, gamma_n=gamma, n_t=n_t))
        t = pnd_general(m, 25)
        assert t.probs.min() >= -1e-14
        assert 0 <= t.tail_mass < 1e-2 or t.probs.sum() <= 1 + 1e-12


class TestLaguerre:
    @pytest.mark.parametrize("n_max", [0, 1, 5, 30])
    def test_matches_scipy(self, n_max):
        x = np.linspace(0, 40, 81)
        table = laguerre_table(n_max, x)
        for k in range(n_max + 1):
            np.testing.assert_allclose(table[k], eval_laguerre(k, x), rtol=1e-10, atol=1e-10)


class TestQuasi:
    @pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
    def test_vacuum_closed_form(self, s):
        w = np.linspace(0, 3, 31)
        qd = quasi_distribution(pnd_ideal_paired(0.0, 0), s, w, w)
        expected = 4 / (1 - s) ** 2 * np.exp(-2 * (w[:, None] + w[None, :]) / (1 - s))
        np.testing.assert_allclose(qd.values, expected, rtol=1e-13)
        assert qd.values.min() > 0

    @pytest.mark.parametrize("b_s,b_a,s", [(0.5, 0.3, 0.2), (1.0, 0.4, 0.12)])
    def test_thermal_closed_form(self, b_s, b_a, s):
        c = (1 - s) / 2
        w = np.linspace(0, 6, 61)
        qd = quasi_distribution(pnd_general(TwoModeMoments(b_s, b_a, 0j), 55), s, w, w)
        expected = np.outer(np.exp(-w / (b_s + c)) / (b_s + c), np.exp(-w / (b_a + c)) / (b_a + c))
        np.testing.assert_allclose(qd.values, expected, atol=1e-8)
        assert qd.converged and qd.values.min() > 0

    def test_integral_of_paired_state(self):
        t = pnd_ideal_paired(0.2, 40)
        w = np.linspace(0, 15, 301)
        qd = quasi_distribution(t, 0.3, w, w)
        assert qd.integral() == pytest.approx(1.0, abs=0.02)

    def test_domain(self):
        with pytest.raises(DomainError):
            quasi_distribution(pnd_ideal_paired(1.0, 5), 1.0)
        with pytest.raises(DomainError):
            quasi_distribution(pnd_ideal_paired(1.0, 5), 0.3, np.array([-1.0, 0.0]))

    def test_divergent_series_flagged(self):
        t = pnd_general(BALANCED4, 20)
        with pytest.raises(InstabilityError):
            quasi_distribution(t, 0.12)
        qd = quasi_distribution(t, 0.12, strict=False)
        assert not qd.converged

    def test_existence_threshold(self):
        assert existence_threshold(BALANCED4) == pytest.approx(1 / 9, rel=1e-12)
        assert existence_threshold(TwoModeMoments(0.5, 0.5, 0j)) > 1
        m = moments_lossless(RamanParams(epsilon=4.0, pump_amp=math.pi / (2 * SQRT3)))
        assert existence_threshold(m) == pytest.approx(0.41346437821, rel=1e-9)


class TestMultimode:
    @staticmethod
    def quad_oracle(eps, delta, n_v=0.0):
        a1 = math.pi / math.sqrt(eps - 1)

        def parts(pump):
            m = moments_lossless(RamanParams(epsilon=eps, pump_amp=pump)) if n_v == 0 else moments_general(
                RamanParams(epsilon=eps, pump_amp=pump, n_v=n_v)
            )
            return m.b_s + m.b_a + m.b_s**2 + m.b_a**2 - 2 * abs(m.d_sa) ** 2, m.b_s + m.b_a

        lo, hi = a1 * (1 - delta / 2), a1 * (1 + delta / 2)
        num = quad(lambda p: parts(p)[0], lo, hi, epsabs=1e-14, epsrel=1e-13)[0]
        den = quad(lambda p: parts(p)[1], lo, hi, epsabs=1e-14, epsrel=1e-13)[0]
        return num / den

    @pytest.mark.parametrize("eps,delta", [(4.0, 0.5), (2.0, 0.3), (4.0, 1.5), (9.0, 0.05)])
    def test_closed_form_matches_quadrature(self, eps, delta):
        closed = multimode_nrf_closed(eps, delta)
        assert closed == pytest.approx(self.quad_oracle(eps, delta), rel=1e-8, abs=1e-12)
        numeric = multimode_nrf_numeric(RamanParams(epsilon=eps, pump_amp=0.0), delta)
        assert numeric == pytest.approx(closed, rel=1e-8, abs=1e-12)

    def test_reference_value(self):
        expected = (15 * math.pi - 32) / (8 * (13.5 * math.pi + 32 * math.sqrt(2) + 5))
        assert multimode_nrf_closed(4.0, 0.5) == pytest.approx(expected, rel=1e-12)
        assert multimode_nrf_closed(4.0, 0.5) == pytest.approx(0.0204, abs=1e-4)

    @pytest.mark.parametrize("eps", [2.0, 4.0, 10.0])
    def test_small_window_series(self, eps):
        delta = 1e-3
        lead = (eps - 1) * (math.pi * delta) ** 2 / (96 * eps)
        assert multimode_nrf_closed(eps, delta) == pytest.approx(lead, rel=1e-4)

    def test_thermal_matches_quadrature(self):
        numeric = multimode_nrf_numeric(RamanParams(epsilon=4.0, pump_amp=0.0, n_v=0.5), 0.5)
        assert numeric == pytest.approx(self.quad_oracle(4.0, 0.5, 0.5), rel=1e-8)

    @pytest.mark.parametrize("eps", [2.0, 4.0])
    def test_monotone_in_phonons(self, eps):
        values = [multimode_nrf_numeric(RamanParams(epsilon=eps, pump_amp=0.0, n_v=n), 0.5) for n in np.linspace(0, 2, 11)]
        assert np.all(np.diff(values) > 0)

    @pytest.mark.parametrize("delta", [0.0, 2.0, -0.1])
    def test_domain(self, delta):
        with pytest.raises(DomainError):
            multimode_nrf_closed(4.0, delta)


class TestRhoBalanced:
    def test_pair_number(self):
        assert balanced_pair_number(4.0) == pytest.approx(16 / 9)

    def test_trace(self):
        # missing mass is the geometric tail (B / (B + 1))^(n_max + 1)
        tail = (16 / 25) ** 41
        assert rho_balanced(4.0, 40).trace() + tail == pytest.approx(1.0, abs=1e-13)
        assert rho_balanced(4.0, 60).trace() == pytest.approx(1.0, abs=1e-11)

    def test_diagonal_is_paired_distribution(self):
        rho = rho_balanced(4.0, 12)
        t = pnd_ideal_paired(16 / 9, 12)
        for n in range(13):
            assert rho[(n, n, n, n)] == pytest.approx(t.probs[n, n], rel=1e-12)
        assert rho[(1, 0, 1, 0)] == 0.0

    def test_pure(self):
        mat = rho_balanced(4.0, 60).pair_matrix()
        assert np.trace(mat @ mat) == pytest.approx(1.0, abs=1e-9)

    def test_matches_fock_state(self):
        params = RamanParams(epsilon=4.0, pump_amp=math.pi / SQRT3)
        state = evolve_adaptive(params, tol=1e-12, start=(40, 40, 12), max_dim=200)
        psi = state.components[0][1]
        amp = np.array([psi[n, n, 0] for n in range(10)])
        mat = rho_balanced(4.0, 9).pair_matrix()
        np.testing.assert_allclose(np.abs(np.outer(amp, amp.conj())), np.abs(mat), atol=1e-8)
        assert extract_moments(state).b_v == pytest.approx(0.0, abs=1e-9)

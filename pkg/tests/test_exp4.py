import math

import numpy as np
import pytest

from smoothcb.environments import make_named_instance
from smoothcb.exp4 import Exp4State, StableExp4
from smoothcb.kernels import RectKernel
from smoothcb.policies import PolicyClass
from smoothcb.spaces import ActionSpace


def _state(actions, h=0.1, T=100, eta=None):
    space = ActionSpace.ring()
    pc = PolicyClass.constant(space, actions)
    return Exp4State.for_kernel(RectKernel(space, h), pc, T, eta=eta)


class TestLearningRate:
    def test_default_formula(self):
        s = _state(np.linspace(0, 0.99, 100), h=0.1, T=10000)
        assert s.eta == pytest.approx(
            math.sqrt(2 * math.log(100) / (10000 * 5.0)), abs=1e-9)
        assert s.eta == pytest.approx(0.013572, abs=1e-6)

    def test_singleton_class_rate_zero(self):
        s = _state([0.5])
        assert s.eta == 0.0

    def test_explicit_rate_kept(self):
        s = _state([0.1, 0.9], eta=0.01)
        assert s.eta == 0.01

    def test_dirac_kernel_rejected(self):
        space = ActionSpace.ring()
        pc = PolicyClass.constant(space, [0.5])
        with pytest.raises(ValueError):
            Exp4State.for_kernel(RectKernel(space, 0.0), pc, 10)


class TestPropensity:
    def test_singleton_equals_kernel_density(self):
        s = _state([0.5])
        rng = np.random.default_rng(0)
        a, p = s.step(None, rng)
        assert p == pytest.approx(RectKernel(s.pc.space, 0.1).density(0.5, a))

    def test_duplicate_members_match_single(self):
        s2 = _state([0.5, 0.5])
        rng = np.random.default_rng(1)
        a, p = s2.step(None, rng)
        assert p == pytest.approx(
            RectKernel(s2.pc.space, 0.1).density(0.5, a))

    def test_two_ball_mixture(self):
        s = _state([0.2, 0.6])
        dens = s.density_vector(None, 0.25)
        assert np.allclose(dens, [5.0, 0.0])
        assert float(np.dot(s.P, dens)) == pytest.approx(2.5)


class TestUpdate:
    def test_zero_loss_no_change(self):
        s = _state([0.2, 0.6])
        rng = np.random.default_rng(2)
        a, _ = s.step(None, rng)
        before = s.P.copy()
        s.update(None, a, 0.0)
        assert np.allclose(s.P, before)

    def test_unsupported_members_keep_relative_weight(self):
        s = _state([0.2, 0.6, 0.62])
        a = 0.22  # inside member 0's ball only
        est = s.update(None, a, 0.5, propensity=1.0)
        assert est[1] == est[2] == 0.0
        P = s.P
        assert P[1] == pytest.approx(P[2], abs=1e-12)
        assert P[0] < P[1]

    def test_double_update_rejected(self):
        s = _state([0.2, 0.6])
        rng = np.random.default_rng(4)
        a, _ = s.step(None, rng)
        s.update(None, a, 0.5)
        with pytest.raises(RuntimeError):
            s.update(None, a, 0.5)

    def test_horizon_enforced(self):
        s = _state([0.2, 0.6], T=1)
        rng = np.random.default_rng(5)
        a, _ = s.step(None, rng)
        s.update(None, a, 0.5)
        with pytest.raises(RuntimeError):
            s.step(None, rng)

    def test_expected_estimate_equals_loss(self):
        # mixture cancellation: sum_xi P(xi) estimate(xi) = observed loss
        s = _state(np.linspace(0, 0.9, 10))
        rng = np.random.default_rng(6)
        for _ in range(50):
            a, _ = s.step(None, rng)
            P = s.P.copy()
            loss = float(rng.random())
            est = s.update(None, a, loss)
            assert float(np.dot(P, est)) == pytest.approx(loss, abs=1e-10)

    def test_shift_invariance(self):
        # adding a constant to every member's estimate in a round leaves
        # the next weight distribution unchanged
        s1 = _state([0.2, 0.4, 0.6], eta=0.05)
        s2 = _state([0.2, 0.4, 0.6], eta=0.05)
        est = np.array([1.0, 0.3, 0.0])
        s1.logw -= s1.eta * est
        s2.logw -= s2.eta * (est + 7.0)
        w1 = np.exp(s1.logw - s1.logw.max())
        w2 = np.exp(s2.logw - s2.logw.max())
        assert np.allclose(w1 / w1.sum(), w2 / w2.sum())


class TestHedgeInequality:
    def test_recorded_trajectories(self):
        # cumulative expected estimate minus the best member's total is
        # bounded by (eta/2) sum E[est^2] + ln|Xi| / eta, per trajectory
        env = make_named_instance("absolute")
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            s = _state(np.linspace(0, 0.95, 20), T=200)
            lhs_mix = 0.0
            sq_term = 0.0
            totals = np.zeros(s.n)
            for _ in range(200):
                x = env.contexts.sample(rng)
                a, _ = s.step(x, rng)
                loss = env.realize_at(x, a, rng)
                P = s.P.copy()
                est = s.update(x, a, loss)
                lhs_mix += float(np.dot(P, est))
                sq_term += float(np.dot(P, est ** 2))
                totals += est
            lhs = lhs_mix - totals.min()
            rhs = s.eta / 2.0 * sq_term + math.log(s.n) / s.eta
            assert lhs <= rhs + 1e-9


class TestStableVariant:
    def _stable(self, rho=1.0, T=100):
        space = ActionSpace.ring()
        pc = PolicyClass.constant(space, [0.2, 0.6])
        kerns = [RectKernel(space, 0.1)] * 2
        return StableExp4(pc, kerns, [0, 1], T, rho_hat=rho)

    def test_full_reveal_never_restarts(self):
        st = self._stable()
        plain = _state([0.2, 0.6], eta=st.inner.eta)
        rng1, rng2 = (np.random.default_rng(7) for _ in range(2))
        for _ in range(50):
            a1, p1 = st.step(None, rng1)
            a2, _ = plain.step(None, rng2)
            assert a1 == a2
            loss = 0.3
            st.stable_update(None, a1, loss, 1.0)
            plain.update(None, a2, loss)
        assert st.restart_count == 0
        assert np.allclose(st.inner.logw, plain.logw)

    def test_doubling_to_power_of_two(self):
        st = self._stable(rho=1.0)
        rng = np.random.default_rng(8)
        a, _ = st.step(None, rng)
        st.stable_update(None, a, 0.5, 0.1)
        assert st.rho_hat == 16.0
        assert st.restart_count == 1

    def test_restart_retunes_rate(self):
        st = self._stable(rho=1.0, T=100)
        eta0 = st.inner.eta
        rng = np.random.default_rng(9)
        a, _ = st.step(None, rng)
        st.stable_update(None, a, 0.5, 0.1)
        assert st.inner.eta == pytest.approx(eta0 / 4.0)

    def test_unrevealed_round_no_weight_change(self):
        st = self._stable(rho=4.0)
        rng = np.random.default_rng(10)
        st.step(None, rng)
        before = st.inner.logw.copy()
        st.stable_update(None, None, 0.0, 0.5)
        assert np.allclose(st.inner.logw, before)
        assert st.inner.t == 1

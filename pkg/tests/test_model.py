import json
import math

import numpy as np
import pytest

from enso_gspt import (DimensionalParams, DimensionalState, Params, State,
                       jacobian_full, rhs_dimensional, rhs_full,
                       rhs_in_formulation, t_sub)
from enso_gspt.errors import DomainError
from enso_gspt.model import ModelDomainWarning

import oracles


P = Params(c=1.4, k=0.2, a=2.0, delta=0.01, rho=0.01)

DP = DimensionalParams(alpha=0.125, T_r=29.5, epsilon=0.0977, mu=0.0026,
                       zeta=1.3, r=0.25, b=1.4, L=1.5e7, beta=622.0,
                       H=62.0, z0=40.0, hstar=50.0, T_r0=10.0, T_0=16.0)


class TestParams:
    @pytest.mark.parametrize("bad", [
        dict(c=0.9), dict(c=1.0), dict(k=0.0), dict(k=1.0), dict(k=-0.2),
        dict(a=0.0), dict(a=-1.0), dict(delta=0.0), dict(rho=-0.01),
        dict(c=float("nan")),
    ])
    def test_hard_invariants(self, bad):
        fields = dict(c=1.4, k=0.2, a=2.0, delta=0.01, rho=0.01)
        fields.update(bad)
        with pytest.raises(DomainError):
            Params(**fields)

    def test_scale_separation_warning(self):
        with pytest.warns(ModelDomainWarning):
            p = Params(c=1.4, k=0.2, a=90.0, delta=0.5, rho=0.5)
        assert p.scale_separation_flag
        assert not P.scale_separation_flag

    def test_validation_bound_warnings(self):
        with pytest.warns(ModelDomainWarning):
            Params(c=6.0, k=0.2, a=2.0, delta=0.01, rho=0.01)
        with pytest.warns(ModelDomainWarning):
            Params(c=1.4, k=0.2, a=150.0, delta=0.01, rho=0.01)

    def test_json_round_trip(self):
        text = P.to_json()
        assert set(json.loads(text)) == {"c", "k", "a", "delta", "rho"}
        assert Params.from_json(text) == P


class TestState:
    def test_finite_required(self):
        with pytest.raises(DomainError):
            State(float("inf"), 0.0, 0.0)

    def test_domain_flag_is_soft(self):
        assert State(-1.0, 0.0, 0.0).in_domain
        assert State(0.0, 0.0, 0.0).in_domain
        assert not State(0.5, 0.0, 0.0).in_domain


class TestRhsFull:
    def test_plane_is_invariant_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            y, z = rng.uniform(-3, 3), rng.uniform(-1, 2)
            assert rhs_full(P, State(0.0, y, z))[0] == 0.0

    def test_node_is_equilibrium(self):
        dx, dy, dz = rhs_full(P, State(0.0, 0.0, P.k))
        assert dx == 0.0 and dy == 0.0 and dz == 0.0

    def test_cancellation_point(self):
        got = rhs_full(P, State(-1.0, -1.0, 1.0))
        for g, w in zip(got, oracles.FROZEN_RHS_XZCANCEL):
            assert g == pytest.approx(w, abs=1e-15)

    def test_generic_point_matches_oracle(self):
        got = rhs_full(P, State(-0.7, -0.3, 0.9))
        live = oracles.o_rhs_full(1.4, 0.2, 2.0, 0.01, 0.01, -0.7, -0.3, 0.9)
        for g, w, l in zip(got, oracles.FROZEN_RHS_GENERIC, live):
            assert w == pytest.approx(float(l), rel=1e-15)
            assert g == pytest.approx(w, rel=1e-14)


class TestFormulations:
    def test_time_rescalings_are_exact(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            s = State(rng.uniform(-2, 0), rng.uniform(-2, 1), rng.uniform(0, 2))
            fast = rhs_in_formulation(P, s, "fast")
            inter = rhs_in_formulation(P, s, "intermediate")
            slow = rhs_in_formulation(P, s, "slow")
            assert fast == rhs_full(P, s)
            for f, i, sl in zip(fast, inter, slow):
                assert i == f / P.delta
                assert sl == f / (P.delta * P.rho)

    def test_unknown_formulation(self):
        with pytest.raises(ValueError):
            rhs_in_formulation(P, State(0.0, 0.0, 0.0), "adiabatic")


class TestJacobian:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(10):
            s = np.array([rng.uniform(-2, -0.1), rng.uniform(-2, 1),
                          rng.uniform(0.1, 2)])
            jac = jacobian_full(P, State(*s))
            fd = np.zeros((3, 3))
            for j in range(3):
                sp, sm = s.copy(), s.copy()
                sp[j] += h
                sm[j] -= h
                fp = np.array(rhs_full(P, State(*sp)))
                fm = np.array(rhs_full(P, State(*sm)))
                fd[:, j] = (fp - fm) / (2 * h)
            scale = np.abs(jac) + np.abs(fd) + 1e-9
            assert np.max(np.abs(jac - fd) / scale) < 1e-6


class TestDimensional:
    def test_tsub_zero_argument(self):
        # pick h1 so the tanh argument vanishes
        T1, T2 = 28.0, 24.0
        h1 = -(DP.H - DP.z0 + DP.b * DP.L * DP.mu * (T2 - T1) / DP.beta)
        assert t_sub(DP, T1, T2, h1) == pytest.approx(
            0.5 * (DP.T_r + DP.T_0), abs=1e-12)

    def test_tsub_saturation(self):
        val = t_sub(DP, 28.0, 24.0, 1e9)
        want = 0.5 * (DP.T_r + DP.T_0) - 0.5 * (DP.T_r - DP.T_r0)
        assert val == pytest.approx(want, abs=1e-12)

    def test_tsub_generic(self):
        assert t_sub(DP, 28.0, 24.0, -30.0) == pytest.approx(
            oracles.FROZEN_TSUB_GENERIC, rel=1e-14)

    def test_rhs_rest_state(self):
        ds = DimensionalState(T1=DP.T_r, T2=DP.T_r, h1=0.0)
        assert rhs_dimensional(DP, ds) == (0.0, 0.0, 0.0)

    def test_rhs_mu_zero(self):
        dp0 = DimensionalParams(**{**DP.__dict__, "mu": 0.0})
        ds = DimensionalState(T1=dp0.T_r, T2=dp0.T_r, h1=0.0)
        assert rhs_dimensional(dp0, ds) == (0.0, 0.0, 0.0)

    def test_rhs_generic(self):
        got = rhs_dimensional(DP, DimensionalState(28.0, 24.0, -30.0))
        for g, w in zip(got, oracles.FROZEN_DIM_RHS_GENERIC):
            assert g == pytest.approx(w, rel=1e-13)

    def test_invariants(self):
        with pytest.raises(DomainError):
            DimensionalParams(**{**DP.__dict__, "hstar": 0.0})
        with pytest.raises(DomainError):
            DimensionalParams(**{**DP.__dict__, "beta": 0.0})

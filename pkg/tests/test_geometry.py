import math

import numpy as np
import pytest

from enso_gspt import (BranchLabel, State, classify_point, folded_singularities,
                       fx_linearisation, g_graph, h_graph, lambda2, m2s_folds,
                       m2s_point, project_fast, tanh_theta, theta)
from enso_gspt.errors import DomainError, PreconditionError
from enso_gspt.regimes import d_mp

import oracles


class TestTheta:
    def test_limit_at_one(self):
        assert theta(1.0 + 1e-9) < 1e-4

    def test_frozen_values(self):
        assert theta(1.4) == pytest.approx(oracles.FROZEN_THETA_14, rel=1e-15)
        assert theta(1.06) == pytest.approx(oracles.FROZEN_THETA_106, rel=1e-15)
        assert theta(1.2) == pytest.approx(oracles.FROZEN_THETA_12, rel=1e-15)
        # matches the 50-digit oracle, not just the frozen copy
        assert theta(1.4) == pytest.approx(float(oracles.o_theta(1.4)), rel=1e-15)

    def test_companion_value(self):
        for c in (1.1, 1.4, 2.5, 4.0):
            assert tanh_theta(c) == pytest.approx(math.tanh(theta(c)), rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            theta(1.0)
        with pytest.raises(DomainError):
            tanh_theta(0.5)


class TestGraphs:
    def test_h_saturation(self):
        # far beyond the fold the surface approaches y = -x
        assert h_graph(1.4, -3.0, 53.0) == pytest.approx(3.0, abs=1e-12)

    def test_h_frozen_at_rounded_point(self):
        assert h_graph(1.4, -1.5929112, 0.9964556) == pytest.approx(
            oracles.FROZEN_H_AT_ROUNDED_QMINUS, rel=1e-14)

    def test_h_plane_slice(self):
        c, k = 1.4, 0.3
        assert h_graph(c, 0.0, k) == pytest.approx(
            -c * (1.0 - math.tanh(k)), rel=1e-15)

    def test_round_trip(self):
        rng = np.random.default_rng(23)
        c = 1.4
        for _ in range(100):
            x = rng.uniform(-3, 0)
            z = rng.uniform(-1, 2)
            y = h_graph(c, x, z)
            assert g_graph(c, x, y) == pytest.approx(z, abs=1e-12)

    def test_g_midpoint(self):
        # (x + y)/c = -1 makes the arctanh argument vanish
        c, x = 1.4, -0.5
        y = -c - x
        assert g_graph(c, x, y) == pytest.approx(-x, abs=1e-15)

    def test_g_domain_errors(self):
        with pytest.raises(DomainError):
            g_graph(1.4, 0.0, 0.0)        # (x+y)/c = 0 boundary
        with pytest.raises(DomainError):
            g_graph(1.4, 0.0, -2.8)       # (x+y)/c = -2 boundary


class TestLinearisation:
    def test_plane_reduction(self):
        rng = np.random.default_rng(5)
        c = 1.3
        for _ in range(20):
            y, z = rng.uniform(-2, 1), rng.uniform(0, 2)
            want = y + c * (1.0 - math.tanh(z))
            assert fx_linearisation(c, 0.0, y, z) == pytest.approx(want, rel=1e-14, abs=1e-14)

    def test_surface_reduction(self):
        rng = np.random.default_rng(6)
        c = 1.3
        for _ in range(20):
            x, z = rng.uniform(-3, -0.1), rng.uniform(0, 2)
            y = h_graph(c, x, z)
            th = math.tanh(x + z)
            want = x * (1.0 - c * (1.0 - th * th))
            assert fx_linearisation(c, x, y, z) == pytest.approx(want, abs=1e-12)

    def test_generic_frozen(self):
        assert fx_linearisation(1.4, -0.7, -0.3, 0.9) == pytest.approx(
            oracles.FROZEN_FX_GENERIC, rel=1e-14)


class TestLambda2:
    def test_zero_at_c2(self):
        assert lambda2(2.0, 0.3, -0.3) == pytest.approx(0.0, abs=1e-15)

    def test_negative_below_c2(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            c = rng.uniform(1.01, 1.99)
            assert lambda2(c, rng.uniform(-3, 0), rng.uniform(-1, 2)) < 0.0

    def test_generic_frozen(self):
        assert lambda2(3.0, 0.1, 0.2) == pytest.approx(
            oracles.FROZEN_LAMBDA2_GENERIC, rel=1e-14)


class TestM2S:
    def test_hits_q_minus(self):
        q = folded_singularities(1.4, 0.2)
        p = m2s_point(1.4, 0.2, q.q_minus.x)
        assert p.y == pytest.approx(q.q_minus.y, abs=1e-12)
        assert p.z == pytest.approx(q.q_minus.z, abs=1e-12)

    def test_plane_end(self):
        c, k = 1.4, 0.3
        p = m2s_point(c, k, 0.0)
        assert p.y == pytest.approx(-c * (1.0 - math.tanh(k)), rel=1e-14)
        assert p.z == k

    def test_generic_frozen(self):
        p = m2s_point(1.4, 0.4, -1.0)
        assert p.z == pytest.approx(0.9, abs=1e-15)
        assert p.y == pytest.approx(oracles.FROZEN_M2S_Y_GENERIC, rel=1e-14)

    def test_folds(self):
        assert m2s_folds(2.0 + 1e-12) < 1e-5
        assert m2s_folds(4.0) == pytest.approx(oracles.FROZEN_M2S_FOLDS_4, rel=1e-14)
        with pytest.raises(DomainError):
            m2s_folds(1.4)
        with pytest.raises(DomainError):
            m2s_folds(2.0)


class TestFoldedSingularities:
    def test_frozen_coordinates(self):
        q = folded_singularities(1.4, 0.2)
        for got, want in zip(q.q_minus.as_tuple(), oracles.FROZEN_Q_MINUS_14_02):
            assert got == pytest.approx(want, rel=1e-14)
        for got, want in zip(q.q_plus.as_tuple(), oracles.FROZEN_Q_PLUS_14_02):
            assert got == pytest.approx(want, rel=1e-14)

    def test_upper_singularity_side(self):
        assert folded_singularities(1.4, 0.2).q_plus.x > 0.0
        assert folded_singularities(1.06, 0.4).q_plus.x == pytest.approx(
            -0.3148734, abs=1e-6)

    def test_fold_and_nullcline_constraints(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            c, k = rng.uniform(1.01, 5.0), rng.uniform(0.05, 0.95)
            q = folded_singularities(c, k)
            th = theta(c)
            for s, sgn in ((q.q_minus, -1.0), (q.q_plus, 1.0)):
                assert s.x + s.z == pytest.approx(sgn * th, abs=1e-12)
                assert k - s.z - 0.5 * s.x == pytest.approx(0.0, abs=1e-12)

    def test_height_difference_identity(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            c, k = rng.uniform(1.01, 5.0), rng.uniform(0.05, 0.95)
            q = folded_singularities(c, k)
            want = 4.0 * theta(c) - 2.0 * c * tanh_theta(c)
            assert q.q_minus.y - q.q_plus.y == pytest.approx(want, abs=1e-12)

    def test_remoteness_below_crossover(self):
        # y_{q-} > y_{q+} holds precisely while c is below the crossover of
        # 4 theta - 2 c tanh(theta); beyond it the ordering reverses.
        rng = np.random.default_rng(14)
        cc = oracles.FROZEN_REMOTENESS_CROSSOVER
        for _ in range(200):
            k = rng.uniform(0.05, 0.95)
            c = rng.uniform(1.001, cc - 1e-6)
            q = folded_singularities(c, k)
            assert q.q_minus.y > q.q_plus.y
            c2 = rng.uniform(cc + 1e-6, 5.0)
            q2 = folded_singularities(c2, k)
            assert q2.q_minus.y < q2.q_plus.y

    def test_height_difference_monotone_until_c15(self):
        # the difference increases in c up to c = 1.5 and decreases after
        cs = np.linspace(1.01, 1.499, 60)
        diffs = [4.0 * theta(c) - 2.0 * c * tanh_theta(c) for c in cs]
        assert all(b > a for a, b in zip(diffs, diffs[1:]))
        cs2 = np.linspace(1.51, 4.9, 60)
        diffs2 = [4.0 * theta(c) - 2.0 * c * tanh_theta(c) for c in cs2]
        assert all(b < a for a, b in zip(diffs2, diffs2[1:]))

    def test_heights_equal_minus_d(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            c, k = rng.uniform(1.01, 5.0), rng.uniform(0.05, 0.95)
            q = folded_singularities(c, k)
            dm, dp = d_mp(c, k)
            assert q.q_minus.y == pytest.approx(-dm, abs=1e-12)
            assert q.q_plus.y == pytest.approx(-dp, abs=1e-12)


class TestClassifyPoint:
    C, K = 1.4, 0.2

    def test_intersection_curve(self):
        z = 0.5
        y = -self.C * (1.0 - math.tanh(z)) + 1e-9
        got = classify_point(self.C, self.K, State(0.0, y, z), tol=1e-6)
        assert got is BranchLabel.F_P_CURVE

    def test_node_on_repelling_plane(self):
        assert classify_point(self.C, self.K, State(0.0, 0.0, self.K)) \
            is BranchLabel.P_REPELLING

    def test_fold_membership(self):
        th = theta(self.C)
        x = -1.2
        z = -x - th
        s = State(x, h_graph(self.C, x, z), z)
        assert classify_point(self.C, self.K, s) is BranchLabel.FOLD_MINUS
        z2 = -x + th
        s2 = State(x, h_graph(self.C, x, z2), z2)
        assert classify_point(self.C, self.K, s2) is BranchLabel.FOLD_PLUS

    def test_open_sheets(self):
        th = theta(self.C)
        x = -2.0
        z_am = -x - th - 0.5
        s = State(x, h_graph(self.C, x, z_am), z_am)
        assert classify_point(self.C, self.K, s) is BranchLabel.S_A_MINUS
        z_r = -x
        s = State(x, h_graph(self.C, x, z_r), z_r)
        assert classify_point(self.C, self.K, s) is BranchLabel.S_REPELLING
        z_ap = -x + th + 0.5
        s = State(x, h_graph(self.C, x, z_ap), z_ap)
        assert classify_point(self.C, self.K, s) is BranchLabel.S_A_PLUS

    def test_plane_attracting(self):
        assert classify_point(self.C, self.K, State(0.0, -3.0, 0.5)) \
            is BranchLabel.P_ATTRACTING

    def test_m2s_membership(self):
        s = m2s_point(self.C, self.K, -0.5)
        assert classify_point(self.C, self.K, s) is BranchLabel.M2S_POINT

    def test_off_manifold(self):
        assert classify_point(self.C, self.K, State(-1.0, 5.0, 0.5)) \
            is BranchLabel.OFF_MANIFOLD

    def test_tol_must_be_positive(self):
        with pytest.raises(DomainError):
            classify_point(self.C, self.K, State(0.0, 0.0, 0.0), tol=0.0)


class TestProjectFast:
    def test_lower_fold_to_plane(self):
        q = folded_singularities(1.4, 0.2)
        land, label = project_fast(1.4, q.q_minus)
        assert label is BranchLabel.P_ATTRACTING
        assert land.x == 0.0
        assert land.y == q.q_minus.y and land.z == q.q_minus.z

    def test_lower_fold_to_upper_sheet(self):
        q = folded_singularities(1.4, 0.7)
        land, label = project_fast(1.4, q.q_minus)
        assert label is BranchLabel.S_A_PLUS
        assert land.x + land.z > theta(1.4)
        # landing is on the surface
        assert abs(land.x + land.y + 1.4 * (1 - math.tanh(land.x + land.z))) < 1e-10

    def test_upper_fold_jumps_down(self):
        c = 1.4
        th = theta(c)
        x = -0.1
        z = -x + th
        s = State(x, h_graph(c, x, z), z)
        land, label = project_fast(c, s)
        assert label is BranchLabel.S_A_MINUS
        assert land.x < x

    def test_landing_is_attracting(self):
        rng = np.random.default_rng(21)
        c, k = 1.4, 0.5
        th = theta(c)
        for _ in range(20):
            x = rng.uniform(-2.5, -0.5)
            z = -x - th
            s = State(x, h_graph(c, x, z), z)
            _, label = project_fast(c, s)
            assert label in (BranchLabel.P_ATTRACTING, BranchLabel.S_A_PLUS,
                             BranchLabel.S_A_MINUS)

    def test_attracting_start_rejected(self):
        c = 1.4
        x = -2.5
        z = -x - theta(c) - 0.4     # on the lower attracting sheet
        s = State(x, h_graph(c, x, z), z)
        with pytest.raises(PreconditionError):
            project_fast(c, s)

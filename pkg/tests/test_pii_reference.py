import math

import numpy as np
import pytest

import laxforge as lf
from laxforge.calogero import ConvergenceError
from laxforge.pii_reference import _AIRY_SWITCH, _airy_asymptotic, _airy_series


class TestAiry:
    def test_values_at_origin(self):
        # Ai(0) = 3^(-2/3)/Gamma(2/3), Ai'(0) = -3^(-1/3)/Gamma(1/3)
        assert lf.airy_ai(0.0) == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), rel=1e-15)
        assert lf.airy_ai_prime(0.0) == pytest.approx(-(3 ** (-1 / 3)) / math.gamma(1 / 3),
                                                      rel=1e-15)

    def test_series_asymptotic_overlap(self):
        # The two evaluation routes agree across the switch region; the
        # asymptotic branch saturates near 6e-7 relative at x = 4.2 (its
        # smallest-term limit) and sharpens quickly to the right.
        for x in np.linspace(4.2, 6.0, 10):
            a_s, ap_s = _airy_series(x)
            a_a, ap_a = _airy_asymptotic(x)
            tol = 1e-6 if x < 4.8 else 5e-8
            assert a_s == pytest.approx(a_a, rel=tol)
            assert ap_s == pytest.approx(ap_a, rel=tol)

    def test_ode_residual_by_stencil(self):
        # Ai'' = x Ai checked through stencils of Ai' (both routes).
        h = 1e-4
        for x in (-4.0, -1.0, 0.5, 2.0, 6.0):
            d2 = (lf.airy_ai_prime(x - 2 * h) - 8 * lf.airy_ai_prime(x - h)
                  + 8 * lf.airy_ai_prime(x + h) - lf.airy_ai_prime(x + 2 * h)) / (12 * h)
            assert d2 == pytest.approx(x * lf.airy_ai(x), abs=1e-9)

    def test_decay(self):
        assert 0 < lf.airy_ai(8.0) < 5e-7
        assert lf.airy_ai(8.0) < lf.airy_ai(6.0) < lf.airy_ai(4.0)
        assert _AIRY_SWITCH == pytest.approx(5.0)


class TestHastingsMcleod:
    def test_frozen_center_value(self, hm):
        # Mesh-halving agreement (meta mesh_diff ~ 1e-13) pins the digits.
        assert hm.eval_q(0.0) == pytest.approx(0.36706155, abs=1e-4)

    def test_ode_residual(self, hm):
        assert hm.meta["ode_resid"] <= 1e-8

    def test_right_asymptote(self, hm):
        assert 0.999 <= hm.eval_q(4.0) / lf.airy_ai(4.0) <= 1.001

    def test_left_plateau(self, hm):
        assert 0.99 <= hm.eval_q(-6.0) / math.sqrt(3.0) <= 1.01

    def test_positivity(self, hm):
        assert np.all(hm.q > 0)

    def test_companion_relation(self, hm):
        # u = (q')^2 - t q^2 - q^4 pointwise; fixes the additive constant
        # and therefore the tail closure.
        rel = hm.u - (hm.qprime ** 2 - hm.t_grid * hm.q ** 2 - hm.q ** 4)
        assert np.max(np.abs(rel)) <= 1e-8

    def test_u_monotone_decreasing_in_t(self, hm):
        # u' = -q^2 < 0; the far tail sits at roundoff, so only test where
        # u is above it.
        diffs = np.diff(hm.u)
        bulk = hm.u[:-1] > 1e-12
        assert np.all(diffs[bulk] < 0)

    def test_interpolation_hits_nodes(self, hm):
        mid = len(hm.t_grid) // 3
        assert hm.eval_q(hm.t_grid[mid]) == hm.q[mid]

    def test_mesh_convergence_recorded(self, hm):
        assert hm.meta["mesh_diff"] <= 1e-9

    def test_invalid_interval(self):
        with pytest.raises(ValueError, match="t_min"):
            lf.solve_hastings_mcleod(t_min=3.0, t_max=1.0)

    def test_csv_export(self, hm, tmp_path):
        path = tmp_path / "hm.csv"
        hm.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "t, q, qprime, u"


class TestReferenceFields:
    def test_one_pole_asymptote(self, hm):
        ref = lf.reference_fields(1, hm, 0.5)
        for x in (1e3, 1e4):
            assert x * ref.b_plus.val(0.5, x) == pytest.approx(-1.0, abs=5e-3 * 1e3 / x)

    def test_two_pole_residues(self, hm):
        # Partial fractions of -x/(x^2 - s): residue -1/2 at each root.
        t = 1.0
        ref = lf.reference_fields(2, hm, t)
        for pole in ref.poles_at(t):
            eps = 1e-6
            res = (pole + eps - pole) * ref.b_plus.val(t, pole + eps)
            assert res == pytest.approx(-0.5, abs=1e-4)

    def test_partials_match_stencils(self, hm):
        h = 1e-4
        for kappa in (1, 2):
            ref = lf.reference_fields(kappa, hm, 0.0)
            for fld in (ref.b_plus, ref.b_1):
                for t, x in ((0.3, 2.9), (1.7, -3.6)):
                    dt_fd = (fld.val(t - 2*h, x) - 8*fld.val(t - h, x)
                             + 8*fld.val(t + h, x) - fld.val(t + 2*h, x)) / (12*h)
                    dx_fd = (fld.val(t, x - 2*h) - 8*fld.val(t, x - h)
                             + 8*fld.val(t, x + h) - fld.val(t, x + 2*h)) / (12*h)
                    dxx_fd = (-fld.val(t, x - 2*h) + 16*fld.val(t, x - h)
                              - 30*fld.val(t, x) + 16*fld.val(t, x + h)
                              - fld.val(t, x + 2*h)) / (12*h*h)
                    assert fld.dt(t, x) == pytest.approx(dt_fd, abs=1e-8)
                    assert fld.dx(t, x) == pytest.approx(dx_fd, abs=1e-8)
                    assert fld.dxx(t, x) == pytest.approx(dxx_fd, abs=1e-6)

    def test_governing_membership(self, hm):
        grid = lf.Grid2D.regular(-2.0, 4.0, 13, 2.8, 6.2, 11, exclusion_radius=0.3)
        for kappa in (1, 2):
            r1, r2 = lf.governing_residuals(lf.quantum_pii_spec(kappa),
                                            lf.reference_fields(kappa, hm, 0.0), grid)
            assert r1.max_abs <= 1e-6
            assert r2.max_abs <= 1e-6

    def test_kappa_three_rejected(self, hm):
        with pytest.raises(ValueError):
            lf.reference_fields(3, hm, 0.0)


class TestParticleMap:
    def test_one_pole_location(self, hm):
        t = 0.8
        st = lf.particles_from_hm(1, hm, t)
        assert st.Q[0] == pytest.approx(-hm.eval_qprime(t) / hm.eval_q(t))

    def test_fields_match_closed_forms(self, hm):
        for kappa in (1, 2):
            for t in (-1.5, 0.0, 2.5):
                st = lf.particles_from_hm(kappa, hm, t)
                pf = lf.governing_fields_from_state(st)
                ref = lf.reference_fields(kappa, hm, t)
                poles = ref.poles_at(t)
                for x in np.linspace(-4.0, 4.0, 9):
                    if min(abs(x - p) for p in poles) < 0.4:
                        continue
                    assert abs(pf.b_plus.val(t, x) - ref.b_plus.val(t, x)) <= 1e-8
                    assert abs(pf.b_1.val(t, x) - ref.b_1.val(t, x)) <= 1e-8

    def test_integrals_vanish(self, hm):
        for kappa in (1, 2):
            for t in (-1.0, 0.5, 3.0):
                st = lf.particles_from_hm(kappa, hm, t)
                assert np.max(np.abs(lf.first_integrals(st))) <= 1e-8

    def test_u_matches_companion_combination(self, hm):
        # kappa=1: U = 2u - Q - t^2/2; kappa=2: U = 2u - 2q - t^2/2.  Both
        # follow from matching the constant parts of the fields against the
        # pole form, and independently from the vanishing integrals.
        for t in (-1.2, 0.3, 2.0):
            u = hm.eval_u(t)
            q = hm.eval_q(t)
            s1 = lf.particles_from_hm(1, hm, t)
            assert s1.U == pytest.approx(2 * u - s1.Q[0] - t ** 2 / 2, abs=1e-10)
            s2 = lf.particles_from_hm(2, hm, t)
            assert s2.U == pytest.approx(2 * u - 2 * q - t ** 2 / 2, abs=1e-10)

    def test_j0_values(self, hm):
        for t in (-0.7, 1.1):
            s1 = lf.particles_from_hm(1, hm, t)
            assert lf.j0(s1) == pytest.approx(2 * hm.eval_u(t) - 2 * s1.Q[0], abs=1e-10)
            s2 = lf.particles_from_hm(2, hm, t)
            assert lf.j0(s2) == pytest.approx(hm.eval_u(t) - hm.eval_q(t), abs=1e-10)

    def test_large_t_roots_are_real_sqrt_t(self, hm):
        st = lf.particles_from_hm(2, hm, 6.0)
        roots = sorted(st.Q, key=lambda z: z.real)
        assert abs(roots[1].imag) <= 1e-8
        assert roots[1].real == pytest.approx(np.sqrt(6.0), abs=0.05)

    def test_degenerate_two_pole_time(self, hm):
        # s(t) = t + 2q' + 2q^2 changes sign; at the crossing the two poles
        # merge and the map must refuse.
        def s_of(t):
            return t + 2 * hm.eval_qprime(t) + 2 * hm.eval_q(t) ** 2

        lo, hi = -8.0, 4.0
        assert s_of(lo) < 0 < s_of(hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if s_of(mid) < 0:
                lo = mid
            else:
                hi = mid
        t_star = 0.5 * (lo + hi)
        with pytest.raises(ValueError, match="degenerate"):
            lf.particles_from_hm(2, hm, t_star)

    def test_eom_consistency_by_stencil(self, hm):
        # Transporting the closed-form poles in t satisfies the equations of
        # motion: kappa * (second stencil of Q) matches the force.
        h = 1e-3
        for kappa in (1, 2):
            worst = 0.0
            for t in (-1.0, 0.0, 1.5, 3.0):
                sts = [lf.particles_from_hm(kappa, hm, t + k * h) for k in (-2, -1, 0, 1, 2)]
                _, pdot, udot = lf.eom_rhs(sts[2])
                for comp in range(kappa):
                    vs = [s.Q[comp] for s in sts]
                    second = (-vs[0] + 16 * vs[1] - 30 * vs[2] + 16 * vs[3] - vs[4]) / (12 * h * h)
                    worst = max(worst, abs(kappa * second - pdot[comp]))
                us = [s.U for s in sts]
                du = (us[0] - 8 * us[1] + 8 * us[3] - us[4]) / (12 * h)
                worst = max(worst, abs(du - udot))
            assert worst <= 1e-5


class TestKnownPair:
    def test_point_matrices(self, hm):
        t, x = 1.0, 0.5
        q = hm.eval_q(t)
        qp = hm.eval_qprime(t)
        dt_mat, dx_mat = lf.baik_rains_pair(hm, t, x)
        np.testing.assert_allclose(dt_mat, [[0, q], [q, -x]])
        np.testing.assert_allclose(dx_mat, [[q ** 2, -q * x - qp],
                                            [-q * x + qp, x ** 2 - t - q ** 2]])
        assert np.trace(dt_mat) == pytest.approx(-x)
        assert np.trace(dx_mat) == pytest.approx(x ** 2 - t)

    def test_zero_curvature(self, hm):
        grid = lf.Grid2D.regular(-2.0, 4.0, 9, -3.0, 3.0, 9)
        for rep in lf.zero_curvature_residuals(lf.baik_rains_lax(hm), grid):
            assert rep.max_abs <= 1e-6

    def test_flipped_derivative_breaks_flatness(self, hm):
        grid = lf.Grid2D.regular(-2.0, 4.0, 9, -3.0, 3.0, 9)
        worst = max(r.max_abs for r in
                    lf.zero_curvature_residuals(lf.baik_rains_lax(hm, qprime_sign=-1.0), grid))
        assert worst >= 1e-2

    def test_constraints_under_diagonal_shift(self, hm):
        # Adding the companion function to the d_t diagonal is the scalar
        # gauge under which the first component solves the one-pole operator;
        # without it the diagonal constraint misses by exactly |u|.
        grid = lf.Grid2D.regular(-1.0, 2.0, 7, -2.0, 2.0, 7)
        spec = lf.quantum_pii_spec(1)
        shifted = lf.baik_rains_lax(hm, u_shift=True)
        r1, r2 = lf.constraint_residuals(spec, shifted, grid)
        assert r1.max_abs <= 1e-6
        assert r2.max_abs <= 1e-10
        raw1, _ = lf.constraint_residuals(spec, lf.baik_rains_lax(hm), grid)
        u_max = float(np.max(np.abs([hm.eval_u(t) for t in grid.t_values])))
        assert raw1.max_abs == pytest.approx(u_max, rel=1e-6)

    def test_recovered_fields_are_one_pole_forms(self, hm):
        # b_plus = B_plus/L_plus = -1/(x + q'/q) and the gauge-shifted
        # b_1 = b_plus L_1 - B_1 matches the closed form with the companion.
        t, x = 0.6, 2.0
        lax = lf.baik_rains_lax(hm, u_shift=True)
        ref = lf.reference_fields(1, hm, t)
        bp = lax.Bplus.val(t, x) / lax.Lplus.val(t, x)
        assert bp == pytest.approx(ref.b_plus.val(t, x), abs=1e-12)
        b1 = bp * lax.L1.val(t, x) - lax.B1.val(t, x)
        assert b1 == pytest.approx(ref.b_1.val(t, x), abs=1e-12)


class TestSolverErrors:
    def test_stall_is_reported(self, monkeypatch):
        # An unreachable tolerance combined with a blocked stall cap must
        # surface as a continuation failure, not an infinite loop.
        import laxforge.pii_reference as pr
        monkeypatch.setattr(pr, "_initial_guess", lambda t: np.zeros_like(t))
        with pytest.raises(ConvergenceError, match="mesh level"):
            lf.solve_hastings_mcleod(n_points=65)

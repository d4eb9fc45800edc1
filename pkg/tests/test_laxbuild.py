import numpy as np
import pytest

import laxforge as lf
from laxforge.fields import Polynomial, poly_div


def symmetric_two() -> lf.ParticleState:
    return lf.init_state(2, [1.0, -1.0], 0.0)


def conserved_random(kappa, seed):
    # anchor on U: the sum-of-momenta anchor is infeasible for asymmetric
    # two-particle data (the difference of the integrals is then fixed)
    rng = np.random.default_rng(seed)
    base = np.asarray(lf.default_q0(kappa), dtype=complex)
    q0 = base + 0.2 * (rng.standard_normal(kappa) + 1j * rng.standard_normal(kappa))
    return lf.init_state(kappa, q0, 0.0, anchor=("U", 0.3 - 0.1j))


class TestOffDiagonal:
    def test_symmetric_two(self):
        # Product over the roots +-1 gives x^2 - 1; its x-derivative over
        # kappa gives -x.
        lp, bp = lf.build_lplus(symmetric_two())
        assert lp.coeffs == (-1 + 0j, 0j, 1 + 0j)
        assert bp.coeffs == (0j, -1 + 0j)

    def test_single_root(self):
        q0 = 0.8 - 0.3j
        s = lf.ParticleState(0.0, (q0,), (0.2,), 0.0, 1)
        lp, bp = lf.build_lplus(s)
        assert lp.coeffs == (-q0, 1 + 0j)
        assert bp.coeffs == (-1 + 0j,)

    def test_partner_relation_any_kappa(self):
        for kappa, seed in ((2, 0), (3, 1), (4, 2)):
            s = conserved_random(kappa, seed)
            lp, bp = lf.build_lplus(s)
            resid = (kappa * bp + lp.deriv()).inf_norm()
            assert resid <= 1e-12 * max(lp.inf_norm(), 1.0)


class TestDiagonalDifference:
    def test_symmetric_two(self):
        # Interpolation data -w_k with w = P - 2R = [-1, 1] at nodes +-1
        # is the identity line: L_d = x.
        ld = lf.build_ld(symmetric_two())
        assert ld.degree() == 1
        assert abs(ld.coeffs[0]) <= 1e-14
        assert ld.coeffs[1] == pytest.approx(1.0)

    def test_single_particle_constant(self):
        p = 0.7 + 0.2j
        s = lf.ParticleState(0.0, (0.5,), (p,), 0.0, 1)
        ld = lf.build_ld(s)
        assert ld.coeffs == (-p,)

    def test_interpolation_property(self):
        for kappa, seed in ((3, 3), (4, 4)):
            s = conserved_random(kappa, seed)
            ld = lf.build_ld(s)
            w = s.p_array() - 2.0 * lf.coulomb_sums(s.Q)
            for qk, wk in zip(s.Q, w):
                assert ld(qk) == pytest.approx(-wk, abs=1e-10)


class TestTraceFreeB:
    def test_single_particle_log_derivative(self):
        s = lf.ParticleState(0.0, (0.5,), (0.3,), 0.0, 1)
        cfg = lf.BuilderConfig(phi=lambda t: (np.exp(0.3 * t), 0.3))
        bd = lf.build_bd(s, cfg)
        assert bd.coeffs == (0.3 + 0j,)
        assert lf.build_bd(s).is_zero  # default gauge, zero log-derivative

    def test_symmetric_two_constant(self):
        """Hand evaluation of the pole-cancellation form at Q = [1, -1],
        P = 0, phi = 1.

        w = P - 2R = [-1, +1] and S = sum_l prod_{j!=l}(x - Q_j) = 2x.
        Term k=1: (w_1/d_1) * (S - d_1)/(x - 1) = (-1/2)(2x - 2)/(x - 1) = -1;
        term k=2: (+1/-2)(2x + 2)/(x + 1) = -1.  So kappa*B_d = -2 and
        B_d = -1.  Cross-checked against b_plus*L_d - B_d =
        (1/kappa) sum w_k/(x - Q_k) below and by the curvature tests.
        """
        bd = lf.build_bd(symmetric_two())
        assert bd.degree() == 0
        assert bd.coeffs[0] == pytest.approx(-1.0, abs=1e-12)

    def test_degree_bound_random(self):
        for kappa, seed in ((3, 5), (4, 6)):
            s = conserved_random(kappa, seed)
            bd = lf.build_bd(s)
            assert bd.degree() <= kappa - 2

    def test_pole_relation(self):
        # b_plus*L_d - B_d = (1/kappa) sum w_k/(x - Q_k) - phi'/phi,
        # pointwise off the poles.
        for kappa, seed in ((2, 7), (3, 8), (4, 9)):
            s = conserved_random(kappa, seed)
            pf = lf.governing_fields_from_state(s)
            ld = lf.build_ld(s)
            bd = lf.build_bd(s)
            w = s.p_array() - 2.0 * lf.coulomb_sums(s.Q)
            Q = s.q_array()
            for x in (2.9, -3.3, 4.5):
                lhs = pf.b_plus.val(s.t, x) * ld(x) - bd(x)
                rhs = np.sum(w / (x - Q)) / kappa
                assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_lplus_combination_identity(self):
        # dL+/dx * L_d + kappa * L+ * B_d = kappa dL+/dt + d2L+/dx2,
        # coefficientwise.
        for kappa, seed in ((2, 10), (3, 11)):
            s = conserved_random(kappa, seed)
            res = lf.build_pair(s)
            lhs = res.Lplus.deriv() * res.L_d + (kappa + 0j) * (res.Lplus * res.B_d)
            rhs = (kappa + 0j) * res.dt_Lplus + res.Lplus.deriv().deriv()
            assert (lhs - rhs).inf_norm() <= 1e-9 * max(rhs.inf_norm(), 1.0)


class TestVPart:
    def test_symmetric_two(self):
        v = lf.build_vpart(symmetric_two())
        assert v(0.0) == pytest.approx(1.0)       # constant U - 0
        assert v.coeffs[4] == pytest.approx(-0.5)  # -x^4/2
        assert abs(v.coeffs[1]) <= 1e-14           # kappa-2 = 0 kills x

    def test_single_particle_sign(self):
        s = lf.ParticleState(0.0, (0.1,), (0.0,), 0.0, 1)
        v = lf.build_vpart(s)
        # -(x^4/2 + (1-2)x): the linear coefficient flips to +1
        assert v.coeffs[1] == pytest.approx(1.0)
        assert v.coeffs[4] == pytest.approx(-0.5)

    def test_cross_check_against_trace(self):
        # V = kappa*B_t - dv/dx - v^2/2 with v = t - x^2, coefficientwise.
        for kappa, seed in ((2, 12), (3, 13), (4, 14)):
            s = conserved_random(kappa, seed)
            res = lf.build_pair(s)
            v_poly = Polynomial.of(s.t, 0.0, -1.0)
            expect = ((kappa + 0j) * res.B_t - v_poly.deriv()
                      - (0.5 + 0j) * (v_poly * v_poly))
            assert (res.v_part - expect).inf_norm() <= 1e-12 * max(expect.inf_norm(), 1.0)


class TestBuildPair:
    def test_trace_split_exact(self):
        res = lf.build_pair(symmetric_two())
        assert (res.L1 + res.L2 - Polynomial.of(0.0, 0.0, 1.0)).inf_norm() <= 1e-14
        assert (res.L1 - res.L2 - res.L_d).inf_norm() <= 1e-14

    def test_symmetric_two_lower_left(self):
        """With kappa*B_d = -2 the numerator of L_minus is
        -(-2 + 1 + x^2/2 + (-x^4/2 + 1)) = x^4/2 - x^2/2, which the divisor
        2(x^2 - 1) divides exactly: L_minus = x^2/4, remainder 0."""
        res = lf.build_pair(symmetric_two())
        num = -((2.0 + 0j) * res.B_d + res.L_d.deriv()
                + (0.5 + 0j) * (res.L_d * res.L_d) + res.v_part)
        assert (num - Polynomial.of(0.0, 0.0, -0.5, 0.0, 0.5)).inf_norm() <= 1e-12
        quot, rem = poly_div(num, (2.0 + 0j) * res.Lplus)
        assert rem.inf_norm() <= 1e-12
        assert (quot - Polynomial.of(0.0, 0.0, 0.25)).inf_norm() <= 1e-12
        assert (res.Lminus - quot).inf_norm() <= 1e-12
        assert res.remainders["L_minus"] <= 1e-12
        assert res.remainders["B_minus"] <= 1e-12

    def test_polynomiality_all_kappa(self):
        for kappa, seed in ((1, 0), (2, 1), (3, 2), (4, 3)):
            s = conserved_random(kappa, seed)
            res = lf.build_pair(s)
            assert res.remainders["L_minus"] <= 1e-6
            assert res.remainders["B_minus"] <= 1e-6

    def test_off_manifold_rejected(self):
        s = symmetric_two()
        bad = lf.ParticleState(s.t, s.Q, s.P, s.U + 1.0, s.kappa)
        with pytest.raises(ValueError, match="off the solution manifold"):
            lf.build_pair(bad)

    def test_dt_ld_matches_stencil(self, traj_cache):
        traj = traj_cache(3)
        t, h = 0.9, 1e-3
        res = lf.build_pair(traj.state_at(t))
        builds = [lf.build_ld(traj.state_at(t + k * h)) for k in (-2, -1, 1, 2)]
        n = max(len(b.coeffs) for b in builds)
        stack = np.array([list(b.coeffs) + [0] * (n - len(b.coeffs)) for b in builds])
        fd = (stack[0] - 8 * stack[1] + 8 * stack[2] - stack[3]) / (12 * h)
        analytic = np.array(list(res.dt_Ld.coeffs) + [0] * (n - len(res.dt_Ld.coeffs)))
        np.testing.assert_allclose(analytic, fd, atol=1e-8)

    def test_gauge_function_invariances(self, traj_cache):
        # A nontrivial phi rescales L_plus and shifts the B diagonal but
        # leaves the governing data b_plus = B_plus/L_plus untouched.
        traj = traj_cache(2)
        s = traj.state_at(0.7)
        cfg = lf.BuilderConfig(phi=lambda t: (np.exp(0.4 * t), 0.4))
        res = lf.build_pair(s, cfg)
        plain = lf.build_pair(s)
        pf = lf.governing_fields_from_state(s)
        for x in (2.4, -3.0):
            assert (res.Bplus(x) / res.Lplus(x)
                    == pytest.approx(pf.b_plus.val(s.t, x), abs=1e-10))
        assert (res.B_d - plain.B_d - Polynomial.of(0.4)).inf_norm() <= 1e-10
        assert res.remainders["L_minus"] <= 1e-8

    def test_export_dict(self):
        res = lf.build_pair(symmetric_two())
        d = res.export_dict()
        assert d["t"] == 0.0 and d["kappa"] == 2
        assert d["entries"]["Lplus"] == [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]


class TestDegreeAudit:
    def test_symmetric_two(self):
        degrees = lf.degree_audit(lf.build_pair(symmetric_two()))
        assert degrees["L_plus"] == 2 and degrees["B_plus"] == 1
        assert degrees["L_d"] == 1 and degrees["B_d"] <= 0

    def test_single_particle(self):
        s = lf.init_state(1, [0.3], 0.0)
        degrees = lf.degree_audit(lf.build_pair(s))
        assert degrees["L_plus"] == 1
        assert degrees["L_d"] <= 0
        assert degrees["B_d"] <= 0

    def test_random_kappa_four(self):
        degrees = lf.degree_audit(lf.build_pair(conserved_random(4, 21)))
        assert degrees["L_plus"] == 4 and degrees["B_plus"] == 3
        assert degrees["L_d"] == 3 and degrees["B_d"] <= 2

    def test_violation_reported(self):
        res = lf.build_pair(symmetric_two())
        hacked = lf.PIILaxResult(
            state=res.state, L1=res.L1, L2=res.L2,
            Lplus=res.Lplus * Polynomial.x(), Lminus=res.Lminus,
            B1=res.B1, B2=res.B2, Bplus=res.Bplus, Bminus=res.Bminus,
            v_part=res.v_part, dt_Lplus=res.dt_Lplus, dt_Ld=res.dt_Ld,
            remainders=res.remainders)
        with pytest.raises(ValueError, match="L_plus"):
            lf.degree_audit(hacked)


class TestFamilyIdentities:
    def test_constraints_and_curvature(self, traj_cache):
        traj = traj_cache(3)
        family = lf.PIIPairFamily(traj)
        lax = family.lax_matrices()
        grid = lf.Grid2D.regular(0.2, 1.8, 9, -2.0, 2.0, 9)
        c1, c2 = lf.constraint_residuals(lf.quantum_pii_spec(3), lax, grid)
        assert c1.max_abs <= 1e-8
        assert c2.max_abs <= 1e-8
        for rep in lf.zero_curvature_residuals(lax, grid, t_step=1e-3):
            assert rep.max_abs <= 1e-6, rep.identity_name

    def test_recovered_field_matches_pole_sum(self, traj_cache):
        traj = traj_cache(4)
        family = lf.PIIPairFamily(traj)
        lax = family.lax_matrices()
        pf = lf.governing_fields_from_trajectory(traj)
        for t, x in ((0.5, 3.0), (1.2, -3.5)):
            got = lax.Bplus.val(t, x) / lax.Lplus.val(t, x)
            assert got == pytest.approx(pf.b_plus.val(t, x), abs=1e-10)

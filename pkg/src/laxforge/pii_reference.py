"""Independent Painleve II oracles.

Contains a self-contained Airy evaluation (Maclaurin series with an
asymptotic continuation, no special-function dependency), a damped-Newton
Chebyshev collocation solver for the Hastings-McLeod solution of
q'' = t q + 2 q^3, the closed-form governing fields for one and two poles,
the known 2x2 pair whose compatibility is Painleve II, and the map from the
Hastings-McLeod data to admissible particle configurations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calogero import ConvergenceError, ParticleState
from .fpcore import Field2D, GenericFields, LaxMatrices, ScalarEntry

# Ai(0) and Ai'(0) from Gamma-function values.
_AI_C1 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AI_C2 = 3.0 ** (-1.0 / 3.0) / math.gamma(1.0 / 3.0)

_AIRY_SWITCH = 5.0  # series below, asymptotic expansion above


def _airy_series(x: float) -> tuple[float, float]:
    """Maclaurin evaluation of (Ai, Ai').  Accurate for |x| <= ~10; the
    cancellation loss grows like exp((4/3) x^(3/2)) for positive x, which
    keeps roughly ten significant digits at the switch point."""
    x3 = x ** 3
    f = tf = 1.0
    g = tg = x
    fp = tfp = x ** 2 / 2.0
    gp = tgp = 1.0
    for k in range(1, 120):
        tf = tf * x3 / ((3 * k - 1) * (3 * k))
        tg = tg * x3 / ((3 * k) * (3 * k + 1))
        tgp = tgp * x3 / ((3 * k - 2) * (3 * k))
        f += tf
        g += tg
        gp += tgp
        if k >= 2:
            tfp = tfp * x3 / ((3 * k - 3) * (3 * k - 1))
            fp += tfp
        if max(abs(tf), abs(tg), abs(tfp), abs(tgp)) < 1e-19 * max(abs(f), abs(g), 1.0):
            break
    return _AI_C1 * f - _AI_C2 * g, _AI_C1 * fp - _AI_C2 * gp


def _airy_asymptotic(x: float) -> tuple[float, float]:
    """Exponential asymptotic expansion for x >= ~5, truncated at the
    smallest term."""
    zeta = 2.0 / 3.0 * x ** 1.5
    su, sv = 1.0, 1.0
    u = 1.0
    term_prev = 1.0
    for k in range(1, 40):
        u *= (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        term = u / zeta ** k
        if term > term_prev:
            break
        sign = -1.0 if k % 2 else 1.0
        su += sign * term
        sv += sign * term * (6 * k + 1) / (1.0 - 6 * k)
        term_prev = term
        if term < 1e-18:
            break
    pref = math.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    return pref * su / x ** 0.25, -pref * sv * x ** 0.25


def airy_ai(x: float) -> float:
    return (_airy_series(x) if x < _AIRY_SWITCH else _airy_asymptotic(x))[0]


def airy_ai_prime(x: float) -> float:
    return (_airy_series(x) if x < _AIRY_SWITCH else _airy_asymptotic(x))[1]


# ---------------------------------------------------------------------------
# Chebyshev collocation machinery
# ---------------------------------------------------------------------------

def _cheb_lobatto(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Ascending Chebyshev-Lobatto nodes on [a, b] and the derivative matrix."""
    j = np.arange(n)
    xc = np.cos(np.pi * j / (n - 1))  # descending on [-1, 1]
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    dX = xc[:, None] - xc[None, :] + np.eye(n)
    D = np.outer(c, 1.0 / c) / dX
    D -= np.diag(D.sum(axis=1))
    t = a + (b - a) * (1.0 - xc) / 2.0
    return t, D * (-2.0 / (b - a))


def _bary_weights(n: int) -> np.ndarray:
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _bary_eval(tq, nodes: np.ndarray, w: np.ndarray, vals: np.ndarray):
    tq_arr = np.atleast_1d(np.asarray(tq, dtype=float))
    out = np.empty(tq_arr.shape, dtype=vals.dtype)
    for i, tv in enumerate(tq_arr):
        d = tv - nodes
        hit = np.argmin(np.abs(d))
        if abs(d[hit]) < 1e-14:
            out[i] = vals[hit]
            continue
        ratio = w / d
        out[i] = np.dot(ratio, vals) / ratio.sum()
    return out if np.ndim(tq) else out[0]


@dataclass(frozen=True)
class HMSolution:
    """Hastings-McLeod data on a Chebyshev grid, with u' = -q^2, u(+inf) = 0."""

    t_grid: np.ndarray
    q: np.ndarray
    qprime: np.ndarray
    u: np.ndarray
    meta: dict = field(default_factory=dict)

    def _w(self) -> np.ndarray:
        return _bary_weights(len(self.t_grid))

    def eval_q(self, t):
        return _bary_eval(t, self.t_grid, self._w(), self.q)

    def eval_qprime(self, t):
        return _bary_eval(t, self.t_grid, self._w(), self.qprime)

    def eval_u(self, t):
        return _bary_eval(t, self.t_grid, self._w(), self.u)

    def eval_qsecond(self, t):
        q = self.eval_q(t)
        return t * q + 2.0 * q ** 3

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t, q, qprime, u\n")
            for row in zip(self.t_grid, self.q, self.qprime, self.u):
                fh.write(", ".join(f"{v:.17g}" for v in row) + "\n")


def _left_tail(t: float) -> float:
    """Two-term plateau expansion sqrt(-t/2) * (1 + t^-3/8 - 73 t^-6/128)."""
    return math.sqrt(-t / 2.0) * (1.0 + 0.125 / t ** 3 - (73.0 / 128.0) / t ** 6)


def _initial_guess(t: np.ndarray) -> np.ndarray:
    g = np.empty_like(t)
    for i, tv in enumerate(t):
        ai = airy_ai(tv)
        g[i] = ai if tv >= 0 else max(ai, math.sqrt(-tv / 2.0))
    return g


def solve_hastings_mcleod(t_min: float = -10.0, t_max: float = 8.0,
                          n_points: int = 257, tol: float = 1e-12) -> HMSolution:
    """Damped-Newton collocation for the Hastings-McLeod solution.

    Boundary data: Airy decay on the right, the plateau expansion on the
    left.  The mesh continuation (coarse solves interpolated upward) keeps
    Newton in its convergence basin without tuning.  The companion u is a
    spectral antiderivative of -q^2 closed with the exact Airy tail integral
    Ai'(t_max)^2 - t_max * Ai(t_max)^2.
    """
    if not t_min < t_max:
        raise ValueError("t_min must be below t_max")
    tol = max(tol, 1e-14)
    levels = [n for n in (65, 129, 257) if n < n_points] + [n_points]

    q_prev = None
    nodes_prev = None
    newton_resid = mesh_diff = np.inf
    for level, n in enumerate(levels):
        t, D = _cheb_lobatto(n, t_min, t_max)
        D2 = D @ D
        bc_l = _left_tail(t_min)
        bc_r = airy_ai(t_max)

        def residual(q):
            r = D2 @ q - t * q - 2.0 * q ** 3
            r[0] = q[0] - bc_l
            r[-1] = q[-1] - bc_r
            return r

        if q_prev is None:
            q = _initial_guess(t)
        else:
            q = _bary_eval(t, nodes_prev, _bary_weights(len(nodes_prev)), q_prev)
        f = residual(q)
        # The attainable residual is limited by roundoff through the dense
        # spectral D^2 (grows like n^4), so a Newton stall below this cap
        # counts as converged; the final residual is still reported.
        stall_cap = max(tol, 5e-9)
        converged = False
        for _ in range(80):
            nrm = np.max(np.abs(f))
            if nrm <= tol:
                converged = True
                break
            J = D2 - np.diag(t + 6.0 * q ** 2)
            J[0, :] = 0.0
            J[0, 0] = 1.0
            J[-1, :] = 0.0
            J[-1, -1] = 1.0
            step = np.linalg.solve(J, -f)
            lam = 1.0
            while lam > 1e-6:
                q_new = q + lam * step
                f_new = residual(q_new)
                if np.max(np.abs(f_new)) < (1.0 - 1e-4 * lam) * nrm:
                    q, f = q_new, f_new
                    break
                lam /= 2.0
            else:
                converged = nrm <= stall_cap
                break
        if not converged:
            raise ConvergenceError(f"HM continuation failed at mesh level {level}")
        newton_resid = float(np.max(np.abs(f)))
        if q_prev is not None:
            probe = np.linspace(t_min, t_max, 41)
            coarse = _bary_eval(probe, nodes_prev, _bary_weights(len(nodes_prev)), q_prev)
            fine = _bary_eval(probe, t, _bary_weights(n), q)
            mesh_diff = float(np.max(np.abs(coarse - fine)))
        q_prev, nodes_prev = q, t

    qprime = D @ q
    tail = airy_ai_prime(t_max) ** 2 - t_max * airy_ai(t_max) ** 2
    A = D.copy()
    rhs = -(q ** 2)
    A[-1, :] = 0.0
    A[-1, -1] = 1.0
    rhs[-1] = tail
    u = np.linalg.solve(A, rhs)

    ode_resid = float(np.max(np.abs((D2 @ q - t * q - 2.0 * q ** 3)[1:-1])))
    if np.any(q <= 0):
        raise ConvergenceError("HM solve lost positivity")
    return HMSolution(
        t_grid=t, q=q, qprime=qprime, u=u,
        meta={"newton_resid": newton_resid, "ode_resid": ode_resid,
              "mesh_diff": mesh_diff, "n_points": n_points,
              "t_min": t_min, "t_max": t_max, "tol": tol},
    )


# ---------------------------------------------------------------------------
# Closed-form governing fields for one and two poles
# ---------------------------------------------------------------------------

DEGENERATE_TOL = 1e-8  # |t + 2q' + 2q^2| below this is a double pole


def _hm_frame(hm: HMSolution, t: float) -> dict:
    q = float(hm.eval_q(t))
    qp = float(hm.eval_qprime(t))
    u = float(hm.eval_u(t))
    qpp = t * q + 2.0 * q ** 3
    return {"q": q, "qp": qp, "qpp": qpp, "u": u}


def reference_fields(kappa: int, hm: HMSolution, t: float) -> GenericFields:
    """The known one- and two-pole governing fields built from (q, q', u).

    Partials use q'' = t q + 2 q^3 and u' = -q^2, so everything is exact in
    the Hastings-McLeod data.  Evaluation is anchored at time t; nearby times
    re-read the tables, so the fields remain valid on a whole grid.
    """
    if kappa == 1:
        def frame(tv):
            fr = _hm_frame(hm, tv)
            Q = -fr["qp"] / fr["q"]
            Qdot = -(tv + 2.0 * fr["q"] ** 2 - Q ** 2)
            return fr, Q, Qdot

        def bp_val(tv, x):
            _, Q, _ = frame(tv)
            return -1.0 / (x - Q)

        def bp_dx(tv, x):
            _, Q, _ = frame(tv)
            return 1.0 / (x - Q) ** 2

        def bp_dxx(tv, x):
            _, Q, _ = frame(tv)
            return -2.0 / (x - Q) ** 3

        def bp_dt(tv, x):
            _, Q, Qdot = frame(tv)
            return -Qdot / (x - Q) ** 2

        def b1_val(tv, x):
            fr, Q, _ = frame(tv)
            return -fr["q"] ** 2 / (x - Q) - fr["u"]

        def b1_dx(tv, x):
            fr, Q, _ = frame(tv)
            return fr["q"] ** 2 / (x - Q) ** 2

        def b1_dxx(tv, x):
            fr, Q, _ = frame(tv)
            return -2.0 * fr["q"] ** 2 / (x - Q) ** 3

        def b1_dt(tv, x):
            fr, Q, Qdot = frame(tv)
            return (-2.0 * fr["q"] * fr["qp"] / (x - Q)
                    - fr["q"] ** 2 * Qdot / (x - Q) ** 2 + fr["q"] ** 2)

        def poles(tv):
            _, Q, _ = frame(tv)
            return (complex(Q),)

    elif kappa == 2:
        def frame(tv):
            fr = _hm_frame(hm, tv)
            s = tv + 2.0 * fr["qp"] + 2.0 * fr["q"] ** 2
            sdot = 1.0 + 2.0 * fr["qpp"] + 4.0 * fr["q"] * fr["qp"]
            return fr, s, sdot

        def bp_val(tv, x):
            _, s, _ = frame(tv)
            return -x / (x ** 2 - s)

        def bp_dx(tv, x):
            _, s, _ = frame(tv)
            return (x ** 2 + s) / (x ** 2 - s) ** 2

        def bp_dxx(tv, x):
            _, s, _ = frame(tv)
            return -2.0 * x * (x ** 2 + 3.0 * s) / (x ** 2 - s) ** 3

        def bp_dt(tv, x):
            _, s, sdot = frame(tv)
            return -x * sdot / (x ** 2 - s) ** 2

        # The numerator coefficient is q' + q^2 (NOT q' + q): only this choice
        # reproduces the pole-form residues of an admissible two-pole state
        # and solves the governing system; see the crosscheck tests.
        def _n_parts(fr, s, sdot, tv, x):
            alpha = fr["qp"] + fr["q"] ** 2
            n = alpha * x - fr["q"] * s
            ndot = ((fr["qpp"] + 2.0 * fr["q"] * fr["qp"]) * x
                    - fr["qp"] * s - fr["q"] * sdot)
            return alpha, n, ndot

        def b1_val(tv, x):
            fr, s, sdot = frame(tv)
            _, n, _ = _n_parts(fr, s, sdot, tv, x)
            return -n / (x ** 2 - s) + (fr["q"] - fr["u"]) / 2.0

        def b1_dx(tv, x):
            fr, s, sdot = frame(tv)
            alpha, n, _ = _n_parts(fr, s, sdot, tv, x)
            w = x ** 2 - s
            g = -alpha * x ** 2 + 2.0 * fr["q"] * s * x - alpha * s
            return -g / w ** 2

        def b1_dxx(tv, x):
            fr, s, sdot = frame(tv)
            alpha, n, _ = _n_parts(fr, s, sdot, tv, x)
            w = x ** 2 - s
            g = -alpha * x ** 2 + 2.0 * fr["q"] * s * x - alpha * s
            gp = -2.0 * alpha * x + 2.0 * fr["q"] * s
            return -(gp * w - 4.0 * x * g) / w ** 3

        def b1_dt(tv, x):
            fr, s, sdot = frame(tv)
            _, n, ndot = _n_parts(fr, s, sdot, tv, x)
            w = x ** 2 - s
            return -(ndot * w + n * sdot) / w ** 2 + (fr["qp"] + fr["q"] ** 2) / 2.0

        def poles(tv):
            _, s, _ = frame(tv)
            root = complex(s) ** 0.5
            return (root, -root)

    else:
        raise ValueError("reference fields exist for kappa = 1 and 2 only")

    return GenericFields(
        kappa=float(kappa),
        b_plus=Field2D(val=bp_val, dt=bp_dt, dx=bp_dx, dxx=bp_dxx),
        b_1=Field2D(val=b1_val, dt=b1_dt, dx=b1_dx, dxx=b1_dxx),
        poles=poles,
    )


def particles_from_hm(kappa: int, hm: HMSolution, t: float) -> ParticleState:
    """Particle configuration whose pole-form fields reproduce the closed
    forms: one pole at -q'/q, or two at the square roots of t + 2q' + 2q^2.

    U is fixed by the vanishing of the first integrals; the result agrees
    with the companion-function combination (2u - sum(Q) - t^2/2 terms), see
    the crosscheck tests.
    """
    fr = _hm_frame(hm, t)
    q, qp, qpp, u = fr["q"], fr["qp"], fr["qpp"], fr["u"]
    if kappa == 1:
        Q = -qp / q
        P = -(t + 2.0 * q ** 2 - Q ** 2)
        U = -(P ** 2 / 2.0 + t * Q ** 2 - Q ** 4 / 2.0 + Q)
        return ParticleState(t, (Q,), (P,), U, 1)
    if kappa == 2:
        s = t + 2.0 * qp + 2.0 * q ** 2
        if abs(s) < DEGENERATE_TOL:
            raise ValueError("degenerate kappa=2 state")
        sdot = 1.0 + 2.0 * qpp + 4.0 * q * qp
        root = complex(s) ** 0.5
        p1 = sdot / root
        U = -p1 ** 2 / 2.0 - t * s + s ** 2 / 2.0 + 1.0 / (2.0 * s)
        return ParticleState(t, (root, -root), (p1, -p1), U, 2)
    raise ValueError("particle map exists for kappa = 1 and 2 only")


# ---------------------------------------------------------------------------
# The known Painleve II pair
# ---------------------------------------------------------------------------

def baik_rains_pair(hm: HMSolution, t: float, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Numeric (d_t matrix, d_x matrix) of the known pair at one point."""
    q = float(hm.eval_q(t))
    qp = float(hm.eval_qprime(t))
    dt_mat = np.array([[0.0, q], [q, -x]], dtype=complex)
    dx_mat = np.array([[q ** 2, -q * x - qp], [-q * x + qp, x ** 2 - t - q ** 2]],
                      dtype=complex)
    return dt_mat, dx_mat


def baik_rains_lax(hm: HMSolution, qprime_sign: float = 1.0,
                   u_shift: bool = False) -> LaxMatrices:
    """The known pair as Lax entries with exact partials.

    qprime_sign = -1 flips the sign of q' everywhere it appears (a negative
    control: the flipped pair is not flat).  u_shift adds the companion
    function u to both diagonal entries of the d_t matrix, the scalar gauge
    under which the pair solves the FP constraints of the one-pole operator.
    """
    sgn = float(qprime_sign)

    def q(t):
        return float(hm.eval_q(t))

    def qp(t):
        return sgn * float(hm.eval_qprime(t))

    def qpp(t):
        qq = q(t)
        return sgn * (t * qq + 2.0 * qq ** 3)

    def u(t):
        return float(hm.eval_u(t)) if u_shift else 0.0

    def udot(t):
        return -q(t) ** 2 if u_shift else 0.0

    zero = lambda t, x: 0j
    return LaxMatrices(
        L1=ScalarEntry(val=lambda t, x: q(t) ** 2 + 0j, dx=zero,
                       dt=lambda t, x: 2.0 * q(t) * float(hm.eval_qprime(t)) + 0j),
        Lplus=ScalarEntry(val=lambda t, x: -q(t) * x - qp(t) + 0j,
                          dx=lambda t, x: -q(t) + 0j,
                          dt=lambda t, x: -float(hm.eval_qprime(t)) * x - qpp(t) + 0j),
        Lminus=ScalarEntry(val=lambda t, x: -q(t) * x + qp(t) + 0j,
                           dx=lambda t, x: -q(t) + 0j,
                           dt=lambda t, x: -float(hm.eval_qprime(t)) * x + qpp(t) + 0j),
        L2=ScalarEntry(val=lambda t, x: x ** 2 - t - q(t) ** 2 + 0j,
                       dx=lambda t, x: 2.0 * x + 0j,
                       dt=lambda t, x: -1.0 - 2.0 * q(t) * float(hm.eval_qprime(t)) + 0j),
        B1=ScalarEntry(val=lambda t, x: u(t) + 0j, dx=zero,
                       dt=lambda t, x: udot(t) + 0j),
        Bplus=ScalarEntry(val=lambda t, x: q(t) + 0j, dx=zero,
                          dt=lambda t, x: float(hm.eval_qprime(t)) + 0j),
        Bminus=ScalarEntry(val=lambda t, x: q(t) + 0j, dx=zero,
                           dt=lambda t, x: float(hm.eval_qprime(t)) + 0j),
        B2=ScalarEntry(val=lambda t, x: -x + u(t) + 0j,
                       dx=lambda t, x: -1.0 + 0j,
                       dt=lambda t, x: udot(t) + 0j),
    )

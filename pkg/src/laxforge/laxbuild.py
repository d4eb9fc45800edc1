"""Explicit 2x2 polynomial Lax pair built from a particle configuration.

The off-diagonal entry is chosen as phi(t) * prod_k (x - Q_k); the remaining
entries follow algebraically.  The lower-left entries come out as exact
polynomial quotients only on the solution manifold (vanishing first
integrals), so their division remainders double as a runtime certificate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calogero import (
    ParticleState,
    Trajectory,
    _inv_diff,
    coulomb_sums,
    eom_rhs,
    first_integrals,
)
from .fields import Polynomial, poly_div
from .fpcore import LaxMatrices, ScalarEntry

INTEGRAL_TOL = 1e-8       # admissibility bound on |c_k| for pair assembly
POLE_CANCEL_RTOL = 1e-8   # residual pole content allowed in B_d assembly
REMAINDER_RTOL = 1e-6     # relative division remainder allowed for L-, B-


class PolynomialityError(ValueError):
    """A quotient that must be polynomial left a significant remainder."""


@dataclass(frozen=True)
class BuilderConfig:
    """Gauge function phi as a (value, log-derivative) supplier; default 1."""

    phi: Callable[[float], tuple[complex, complex]] = lambda t: (1.0 + 0j, 0j)

    def at(self, t: float) -> tuple[complex, complex]:
        val, logd = self.phi(t)
        if val == 0:
            raise ValueError("phi vanishes on the working interval")
        return complex(val), complex(logd)


@dataclass(frozen=True)
class PIILaxResult:
    """All eight polynomial entries at one time, plus certificates."""

    state: ParticleState
    L1: Polynomial
    L2: Polynomial
    Lplus: Polynomial
    Lminus: Polynomial
    B1: Polynomial
    B2: Polynomial
    Bplus: Polynomial
    Bminus: Polynomial
    v_part: Polynomial
    dt_Lplus: Polynomial
    dt_Ld: Polynomial
    remainders: dict = field(default_factory=dict)

    @property
    def L_t(self) -> Polynomial:
        return self.L1 + self.L2

    @property
    def L_d(self) -> Polynomial:
        return self.L1 - self.L2

    @property
    def B_t(self) -> Polynomial:
        return self.B1 + self.B2

    @property
    def B_d(self) -> Polynomial:
        return self.B1 - self.B2

    def degrees(self) -> dict[str, int]:
        return {name: getattr(self, attr).degree() for name, attr in (
            ("L_plus", "Lplus"), ("B_plus", "Bplus"), ("L_d", "L_d"),
            ("B_d", "B_d"), ("L_minus", "Lminus"), ("B_minus", "Bminus"))}

    def export_dict(self) -> dict:
        entries = {}
        for name in ("L1", "L2", "Lplus", "Lminus", "B1", "B2", "Bplus", "Bminus"):
            p: Polynomial = getattr(self, name)
            entries[name] = [[c.real, c.imag] for c in p.coeffs]
        return {"t": self.state.t, "kappa": self.state.kappa, "entries": entries}


def _lagrange_pieces(Q: np.ndarray) -> tuple[list[Polynomial], np.ndarray]:
    """Numerators N_k = prod_{j != k}(x - Q_j) and denominators d_k."""
    k = len(Q)
    nums = []
    dens = np.empty(k, dtype=complex)
    for i in range(k):
        others = np.delete(Q, i)
        nums.append(Polynomial.from_roots(others))
        dens[i] = np.prod(Q[i] - others) if k > 1 else 1.0
    return nums, dens


def _weights(state: ParticleState) -> np.ndarray:
    """w_k = kappa*Q_k' - 2 R_k = P_k - 2 R_k."""
    return state.p_array() - 2.0 * coulomb_sums(state.q_array())


def build_lplus(state: ParticleState, cfg: BuilderConfig = BuilderConfig()
                ) -> tuple[Polynomial, Polynomial]:
    """Off-diagonal choice phi * prod(x - Q_k) and its partner -dL+/dx / kappa."""
    phi, _ = cfg.at(state.t)
    lplus = Polynomial.from_roots(state.Q, leading=phi)
    bplus = (-1.0 / state.kappa) * lplus.deriv()
    return lplus, bplus


def build_ld(state: ParticleState, cfg: BuilderConfig = BuilderConfig()) -> Polynomial:
    """Diagonal difference interpolating -w_k at the pole locations."""
    Q = state.q_array()
    nums, dens = _lagrange_pieces(Q)
    w = _weights(state)
    out = Polynomial.zero()
    for i in range(state.kappa):
        out = out - (w[i] / dens[i]) * nums[i]
    return out


def build_bd(state: ParticleState, cfg: BuilderConfig = BuilderConfig()) -> Polynomial:
    """Trace-free B combination; the apparent poles at Q_k cancel exactly.

    Each k-term is (w_k/d_k) * (S(x) - d_k)/(x - Q_k) with S = sum_l N_l,
    assembled by exact division so no rational intermediate appears.
    """
    _, logd = cfg.at(state.t)
    Q = state.q_array()
    k = state.kappa
    nums, dens = _lagrange_pieces(Q)
    w = _weights(state)
    S = Polynomial.zero()
    for n in nums:
        S = S + n
    acc = Polynomial.of(k * logd)
    for i in range(k):
        shifted = S - Polynomial.of(dens[i])
        quot, rem = poly_div(shifted, Polynomial.of(-Q[i], 1.0))
        if rem.inf_norm() > POLE_CANCEL_RTOL * max(S.inf_norm(), 1.0):
            raise PolynomialityError("B_d not polynomial")
        acc = acc + (w[i] / dens[i]) * quot
    return (1.0 / k) * acc


def build_vpart(state: ParticleState, cfg: BuilderConfig = BuilderConfig()) -> Polynomial:
    """Potential part -(x^4/2 - t x^2 + (kappa-2) x - U + kappa*phi'/phi)."""
    _, logd = cfg.at(state.t)
    k = state.kappa
    return Polynomial.of(state.U - k * logd, -(k - 2.0), state.t, 0.0, -0.5)


def _dt_lplus(state: ParticleState, cfg: BuilderConfig, lplus: Polynomial,
              nums: list[Polynomial], qdot: np.ndarray) -> Polynomial:
    phi, logd = cfg.at(state.t)
    out = logd * lplus
    for i in range(state.kappa):
        out = out - (phi * qdot[i]) * nums[i]
    return out


def _dt_ld(state: ParticleState, nums: list[Polynomial], dens: np.ndarray,
           qdot: np.ndarray, pdot: np.ndarray) -> Polynomial:
    """Chain-rule time derivative of the Lagrange assembly of L_d."""
    Q = state.q_array()
    k = state.kappa
    w = _weights(state)
    if k > 1:
        inv = _inv_diff(Q)
        dqd = qdot[:, None] - qdot[None, :]
        np.fill_diagonal(dqd, 0.0)
        rdot = -(dqd * inv ** 2).sum(axis=1)
        ddot_over_d = (dqd * inv).sum(axis=1)  # d_k'/d_k
    else:
        rdot = np.zeros(1, dtype=complex)
        ddot_over_d = np.zeros(1, dtype=complex)
    wdot = pdot - 2.0 * rdot
    out = Polynomial.zero()
    for i in range(k):
        ndot = Polynomial.zero()
        others = np.delete(np.arange(k), i)
        for j in others:
            rest = Polynomial.from_roots(np.delete(Q, [i, j]))
            ndot = ndot - qdot[j] * rest
        term = (wdot[i] / dens[i]) * nums[i]
        term = term + (w[i] / dens[i]) * ndot
        term = term - (w[i] * ddot_over_d[i] / dens[i]) * nums[i]
        out = out - term
    return out


def build_pair(state: ParticleState, cfg: BuilderConfig = BuilderConfig()) -> PIILaxResult:
    """Assemble all eight entries; certify the lower-left quotients.

    Requires the state to sit on the solution manifold (max |c_k| <= 1e-8):
    off it, the lower-left entries stop being polynomial and the division
    remainders flag it.
    """
    c = first_integrals(state)
    if np.max(np.abs(c)) > INTEGRAL_TOL:
        raise ValueError(
            f"state is off the solution manifold (max|c_k|={np.max(np.abs(c)):.3e})")
    k = state.kappa
    phi, logd = cfg.at(state.t)
    Q = state.q_array()
    qdot, pdot, _ = eom_rhs(state)
    nums, dens = _lagrange_pieces(Q)

    lplus, bplus = build_lplus(state, cfg)
    ld = build_ld(state, cfg)
    bd = build_bd(state, cfg)
    vpart = build_vpart(state, cfg)

    l_trace = Polynomial.of(-state.t, 0.0, 1.0)
    b_trace = Polynomial.of((state.t ** 2 / 2.0 + state.U) / k - logd, -1.0)

    half = 0.5 + 0j
    l1 = half * (l_trace + ld)
    l2 = half * (l_trace - ld)
    b1 = half * (b_trace + bd)
    b2 = half * (b_trace - bd)

    two_lplus = 2.0 * lplus
    num_lminus = -(k * bd + ld.deriv() + half * (ld * ld) + vpart)
    lminus, rem_l = poly_div(num_lminus, two_lplus)
    rel_l = rem_l.inf_norm() / max(num_lminus.inf_norm(), 1e-30)

    dt_lplus = _dt_lplus(state, cfg, lplus, nums, qdot)
    dt_ld = _dt_ld(state, nums, dens, qdot, pdot)

    num_bminus = -(2.0 * (lplus.deriv() * lminus) + k * dt_ld - k * bd.deriv())
    kb_minus, rem_b = poly_div(num_bminus, two_lplus)
    rel_b = rem_b.inf_norm() / max(num_bminus.inf_norm(), 1e-30)
    bminus = (1.0 / k) * kb_minus

    if max(rel_l, rel_b) > REMAINDER_RTOL:
        raise PolynomialityError(
            f"polynomiality violated (relative remainders L-:{rel_l:.3e} B-:{rel_b:.3e})")

    return PIILaxResult(
        state=state, L1=l1, L2=l2, Lplus=lplus, Lminus=lminus,
        B1=b1, B2=b2, Bplus=bplus, Bminus=bminus,
        v_part=vpart, dt_Lplus=dt_lplus, dt_Ld=dt_ld,
        remainders={"L_minus": rel_l, "B_minus": rel_b},
    )


def degree_audit(result: PIILaxResult) -> dict[str, int]:
    """Check the structural degree bounds of the assembled entries.

    B_d is bounded by kappa-2 except that a constant term is always
    admitted: it carries the gauge log-derivative and, at kappa=2, the
    interaction constant.
    """
    k = result.state.kappa
    degrees = result.degrees()
    bounds = {
        "L_plus": (degrees["L_plus"] == k, f"deg L_plus = {degrees['L_plus']}, expected {k}"),
        "B_plus": (degrees["B_plus"] == k - 1, f"deg B_plus = {degrees['B_plus']}, expected {k - 1}"),
        "L_d": (degrees["L_d"] <= k - 1, f"deg L_d = {degrees['L_d']}, bound {k - 1}"),
        "B_d": (degrees["B_d"] <= max(k - 2, 0), f"deg B_d = {degrees['B_d']}, bound {max(k - 2, 0)}"),
    }
    for name, (ok, msg) in bounds.items():
        if not ok:
            raise ValueError(f"degree bound violated for {name}: {msg}")
    return degrees


class PIIPairFamily:
    """Time family of built pairs over a trajectory, as Lax matrix entries.

    x-derivatives are exact polynomial derivatives; t-derivatives are exact
    for the upper-left block (chain rule through the flow) and left to the
    caller's stencil fallback for the lower-left quotient entries.
    """

    def __init__(self, traj: Trajectory, cfg: BuilderConfig = BuilderConfig()):
        self.traj = traj
        self.cfg = cfg
        self._cache: dict[float, PIILaxResult] = {}

    def result_at(self, t: float) -> PIILaxResult:
        res = self._cache.get(t)
        if res is None:
            res = build_pair(self.traj.state_at(t), self.cfg)
            self._cache[t] = res
        return res

    def _entry(self, name: str, dt_poly: Callable | None = None) -> ScalarEntry:
        def val(t, x):
            return getattr(self.result_at(t), name)(x)

        def dx(t, x):
            return getattr(self.result_at(t), name).deriv()(x)

        dt = None
        if dt_poly is not None:
            def dt(t, x):  # noqa: F811
                return dt_poly(self.result_at(t))(x)

        return ScalarEntry(val=val, dx=dx, dt=dt)

    def lax_matrices(self) -> LaxMatrices:
        minus_one = Polynomial.of(-1.0)
        return LaxMatrices(
            L1=self._entry("L1", lambda r: 0.5 * (minus_one + r.dt_Ld)),
            L2=self._entry("L2", lambda r: 0.5 * (minus_one - r.dt_Ld)),
            Lplus=self._entry("Lplus", lambda r: r.dt_Lplus),
            Lminus=self._entry("Lminus"),
            B1=self._entry("B1"),
            B2=self._entry("B2"),
            Bplus=self._entry("Bplus"),
            Bminus=self._entry("Bminus"),
        )

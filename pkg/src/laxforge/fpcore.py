"""Generic Fokker-Planck layer.

Couples a drift-diffusion operator  kappa*d_t + sigma*d_xx + v*d_x + alpha
to candidate 2x2 Lax pairs: residuals of the closed governing system for the
fields (b_plus, b_1), algebraic restoration of a full pair from those fields,
and constraint / zero-curvature residuals for any pair.

Coefficient fields and pair fields carry exact partial derivatives wherever a
closed form exists; tabulated data falls back to 4th-order stencils.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .fields import (
    Grid2D,
    ResidualReport,
    StencilError,
    fd_partials,
    fd_t,
    residual_norms,
)

DEFAULT_T_STEP = 1e-3  # step for fallback time differentiation of pair entries


# ---------------------------------------------------------------------------
# Coefficient fields of the Fokker-Planck operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientField:
    """Closed-form scalar field of (t, x) with exact partials."""

    expr: str
    _val: Callable
    _dt: Callable
    _dx: Callable
    _dxx: Callable

    def val(self, t: float, x: complex) -> complex:
        return complex(self._val(t, x))

    def dt(self, t: float, x: complex) -> complex:
        return complex(self._dt(t, x))

    def dx(self, t: float, x: complex) -> complex:
        return complex(self._dx(t, x))

    def dxx(self, t: float, x: complex) -> complex:
        return complex(self._dxx(t, x))


@lru_cache(maxsize=128)
def coefficient_from_expression(text: str) -> CoefficientField:
    """Parse an expression in t, x (operators + - * / ^, numeric constants)."""
    t, x = sympy.symbols("t x")
    expr = parse_expr(
        text,
        local_dict={"t": t, "x": x},
        transformations=standard_transformations + (convert_xor,),
    )
    if not expr.free_symbols <= {t, x}:
        extra = expr.free_symbols - {t, x}
        raise ValueError(f"unknown symbols in coefficient expression: {extra}")
    lams = [
        sympy.lambdify((t, x), f, modules="numpy")
        for f in (expr, expr.diff(t), expr.diff(x), expr.diff(x, 2))
    ]
    return CoefficientField(text, *lams)


@dataclass(frozen=True)
class FokkerPlanckSpec:
    """Coefficients (kappa, sigma, v, alpha) of the drift-diffusion operator."""

    kappa: float
    sigma: CoefficientField
    v: CoefficientField
    alpha: CoefficientField

    def sigma_at(self, t: float, x: complex) -> complex:
        s = self.sigma.val(t, x)
        if s == 0:
            raise ValueError(f"sigma vanishes at (t={t}, x={x})")
        return s

    def to_json(self) -> str:
        return json.dumps(
            {"kappa": self.kappa, "sigma": self.sigma.expr,
             "v": self.v.expr, "alpha": self.alpha.expr},
            sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FokkerPlanckSpec":
        d = json.loads(text)
        return cls(
            kappa=float(d["kappa"]),
            sigma=coefficient_from_expression(str(d["sigma"])),
            v=coefficient_from_expression(str(d["v"])),
            alpha=coefficient_from_expression(str(d["alpha"])),
        )


def quantum_pii_spec(kappa: float) -> FokkerPlanckSpec:
    """sigma = 1, v = t - x^2, alpha = 0 (rescaled soft-edge operator)."""
    return FokkerPlanckSpec(
        kappa=float(kappa),
        sigma=coefficient_from_expression("1"),
        v=coefficient_from_expression("t - x^2"),
        alpha=coefficient_from_expression("0"),
    )


def heat_spec(kappa: float = 1.0) -> FokkerPlanckSpec:
    return FokkerPlanckSpec(
        kappa=float(kappa),
        sigma=coefficient_from_expression("1"),
        v=coefficient_from_expression("0"),
        alpha=coefficient_from_expression("0"),
    )


# ---------------------------------------------------------------------------
# Governing-pair field representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Field2D:
    """Scalar field of (t, x) given as value/partial callables."""

    val: Callable[[float, complex], complex]
    dt: Callable[[float, complex], complex]
    dx: Callable[[float, complex], complex]
    dxx: Callable[[float, complex], complex]


def field_from_constant(c: complex) -> Field2D:
    zero = lambda t, x: 0j
    return Field2D(val=lambda t, x: complex(c), dt=zero, dx=zero, dxx=zero)


@dataclass(frozen=True)
class GenericFields:
    """Governing pair (b_plus, b_1) in closed form."""

    kappa: float
    b_plus: Field2D
    b_1: Field2D
    poles: Callable[[float], tuple[complex, ...]] | None = None

    def poles_at(self, t: float) -> tuple[complex, ...]:
        return tuple(self.poles(t)) if self.poles is not None else ()


class TabulatedField2D:
    """Field sampled on a grid; partials via 4th-order stencils.

    Evaluation is only defined at grid nodes; partials additionally need the
    full stencil inside the grid and free of masked (excluded) samples.
    """

    def __init__(self, grid: Grid2D, samples: np.ndarray):
        samples = np.asarray(samples, dtype=complex)
        if samples.shape != grid.shape:
            raise ValueError("samples shape does not match grid")
        self.grid = grid
        self.samples = samples

    def _index(self, t: float, x: complex) -> tuple[int, int]:
        ts = np.asarray(self.grid.t_values)
        xs = np.asarray(self.grid.x_values)
        i = int(np.argmin(np.abs(ts - t)))
        j = int(np.argmin(np.abs(xs - complex(x).real)))
        if abs(ts[i] - t) > 1e-9 or abs(xs[j] - complex(x).real) > 1e-9:
            raise StencilError("point off tabulated grid")
        return i, j

    def val(self, t: float, x: complex) -> complex:
        i, j = self._index(t, x)
        v = self.samples[i, j]
        if np.isnan(v):
            raise StencilError("masked sample")
        return complex(v)

    def _partials(self, t: float, x: complex) -> tuple[complex, complex, complex]:
        i, j = self._index(t, x)
        patch_t = self.samples[max(i - 2, 0):i + 3, j]
        patch_x = self.samples[i, max(j - 2, 0):j + 3]
        if np.isnan(patch_t).any() or np.isnan(patch_x).any():
            raise StencilError("stencil touches masked sample")
        return fd_partials(self.samples, self.grid, i, j)

    def dt(self, t, x):
        return self._partials(t, x)[0]

    def dx(self, t, x):
        return self._partials(t, x)[1]

    def dxx(self, t, x):
        return self._partials(t, x)[2]


@dataclass(frozen=True)
class TabulatedPair:
    """Governing pair given by samples on a grid (FD partials)."""

    kappa: float
    b_plus: TabulatedField2D
    b_1: TabulatedField2D
    poles: Callable[[float], tuple[complex, ...]] | None = None

    def poles_at(self, t: float) -> tuple[complex, ...]:
        return tuple(self.poles(t)) if self.poles is not None else ()

    @classmethod
    def sample(cls, pair, grid: Grid2D) -> "TabulatedPair":
        """Tabulate an analytic pair on a grid, masking excluded nodes."""
        nt, nx = grid.shape
        bp = np.full((nt, nx), np.nan, dtype=complex)
        b1 = np.full((nt, nx), np.nan, dtype=complex)
        for i, t in enumerate(grid.t_values):
            poles = pair.poles_at(t)
            for j, x in enumerate(grid.x_values):
                if poles and min(abs(x - p) for p in poles) <= grid.exclusion_radius:
                    continue
                bp[i, j] = pair.b_plus.val(t, x)
                b1[i, j] = pair.b_1.val(t, x)
        return cls(kappa=pair.kappa,
                   b_plus=TabulatedField2D(grid, bp),
                   b_1=TabulatedField2D(grid, b1),
                   poles=pair.poles_at)


# ---------------------------------------------------------------------------
# Lax matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarEntry:
    """One matrix entry as callables of (t, x); dx/dt may be None."""

    val: Callable[[float, complex], complex]
    dx: Callable[[float, complex], complex] | None = None
    dt: Callable[[float, complex], complex] | None = None

    @classmethod
    def constant(cls, c: complex) -> "ScalarEntry":
        zero = lambda t, x: 0j
        return cls(val=lambda t, x: complex(c), dx=zero, dt=zero)


def _combine(a: ScalarEntry, b: ScalarEntry, sign: float) -> ScalarEntry:
    def mk(fa, fb):
        if fa is None or fb is None:
            return None
        return lambda t, x: fa(t, x) + sign * fb(t, x)

    return ScalarEntry(
        val=lambda t, x: a.val(t, x) + sign * b.val(t, x),
        dx=mk(a.dx, b.dx),
        dt=mk(a.dt, b.dt),
    )


def entry_dt(entry: ScalarEntry, t: float, x: complex, h: float = DEFAULT_T_STEP) -> complex:
    """Time derivative of an entry: exact when supplied, else 4th-order FD."""
    if entry.dt is not None:
        return entry.dt(t, x)
    vals = [entry.val(t + k * h, x) for k in (-2, -1, 1, 2)]
    return fd_t([vals[0], vals[1], 0j, vals[2], vals[3]], h)


def entry_dx(entry: ScalarEntry, t: float, x: complex, h: float = DEFAULT_T_STEP) -> complex:
    """x-derivative of an entry: exact when supplied, else 4th-order FD."""
    if entry.dx is not None:
        return entry.dx(t, x)
    vals = [entry.val(t, x + k * h) for k in (-2, -1, 1, 2)]
    return fd_t([vals[0], vals[1], 0j, vals[2], vals[3]], h)


@dataclass(frozen=True)
class LaxMatrices:
    """Entries of the pair d_x Y = L Y, d_t Y = B Y."""

    L1: ScalarEntry
    L2: ScalarEntry
    Lplus: ScalarEntry
    Lminus: ScalarEntry
    B1: ScalarEntry
    B2: ScalarEntry
    Bplus: ScalarEntry
    Bminus: ScalarEntry
    poles: Callable[[float], tuple[complex, ...]] | None = None

    def poles_at(self, t: float) -> tuple[complex, ...]:
        return tuple(self.poles(t)) if self.poles is not None else ()

    @property
    def L_t(self) -> ScalarEntry:
        return _combine(self.L1, self.L2, +1)

    @property
    def L_d(self) -> ScalarEntry:
        return _combine(self.L1, self.L2, -1)

    @property
    def B_t(self) -> ScalarEntry:
        return _combine(self.B1, self.B2, +1)

    @property
    def B_d(self) -> ScalarEntry:
        return _combine(self.B1, self.B2, -1)

    def L_at(self, t: float, x: complex) -> np.ndarray:
        return np.array([[self.L1.val(t, x), self.Lplus.val(t, x)],
                         [self.Lminus.val(t, x), self.L2.val(t, x)]], dtype=complex)

    def B_at(self, t: float, x: complex) -> np.ndarray:
        return np.array([[self.B1.val(t, x), self.Bplus.val(t, x)],
                         [self.Bminus.val(t, x), self.B2.val(t, x)]], dtype=complex)


# ---------------------------------------------------------------------------
# Grid scanning with pole exclusion
# ---------------------------------------------------------------------------

def scan_identity(name: str, grid: Grid2D, fn: Callable[[float, float], complex],
                  poles_at: Callable[[float], Sequence[complex]] | None = None) -> ResidualReport:
    """Evaluate a pointwise residual over the grid, skipping excluded points."""
    vals = []
    for t in grid.t_values:
        poles = tuple(poles_at(t)) if poles_at is not None else ()
        for x in grid.x_values:
            if poles and min(abs(x - p) for p in poles) <= grid.exclusion_radius:
                continue
            try:
                r = fn(t, x)
            except StencilError:
                continue
            vals.append(((t, x), r))
    if not vals:
        raise ValueError("empty residual domain")
    return residual_norms(name, vals)


# ---------------------------------------------------------------------------
# Governing-system residuals (the closed pair of PDEs for b_plus, b_1)
# ---------------------------------------------------------------------------

def governing_residuals(spec: FokkerPlanckSpec, pair, grid: Grid2D) -> tuple[ResidualReport, ResidualReport]:
    """Residuals of the conservation-law equation and its companion equation.

    The first report is the conservation law for (kappa*b_plus + v)/sigma,
    the second the evolution equation for (kappa*b_1 - alpha)/sigma.
    """
    k = spec.kappa
    bp, b1 = pair.b_plus, pair.b_1

    def r_conservation(t, x):
        s = spec.sigma_at(t, x)
        st, sx = spec.sigma.dt(t, x), spec.sigma.dx(t, x)
        v, vt, vx = spec.v.val(t, x), spec.v.dt(t, x), spec.v.dx(t, x)
        b = bp.val(t, x)
        bt, bx, bxx = bp.dt(t, x), bp.dx(t, x), bp.dxx(t, x)
        b1x = b1.dx(t, x)
        rho = k * b + v
        d_t = (k * bt + vt) / s - rho * st / s ** 2
        d_x = bxx - (bx * rho + b * (k * bx + vx)) / s + b * rho * sx / s ** 2 - 2 * b1x
        return d_t + d_x

    def r_companion(t, x):
        s = spec.sigma_at(t, x)
        st, sx = spec.sigma.dt(t, x), spec.sigma.dx(t, x)
        v = spec.v.val(t, x)
        a, at_, ax = spec.alpha.val(t, x), spec.alpha.dt(t, x), spec.alpha.dx(t, x)
        b = bp.val(t, x)
        bx = bp.dx(t, x)
        c = b1.val(t, x)
        ct, cx, cxx = b1.dt(t, x), b1.dx(t, x), b1.dxx(t, x)
        w = (k * c - a) / s
        w_t = (k * ct - at_) / s - w * st / s
        w_x = (k * cx - ax) / s - w * sx / s
        return w_t + cxx - b * w_x + ((k * b + v) / s) * cx - 2 * w * bx

    rep1 = scan_identity("governing_conservation", grid, r_conservation, pair.poles_at)
    rep2 = scan_identity("governing_companion", grid, r_companion, pair.poles_at)
    return rep1, rep2


# ---------------------------------------------------------------------------
# Restoration of a full Lax pair from (b_plus, b_1)
# ---------------------------------------------------------------------------

def restore_lax(spec: FokkerPlanckSpec, pair, lplus: ScalarEntry,
                gauge: tuple[str, ScalarEntry]) -> LaxMatrices:
    """Algebraic restoration of all eight entries from the governing fields.

    lplus is the free off-diagonal entry (must not vanish on the domain);
    gauge is ("L1", entry) or ("B1", entry) fixing the remaining freedom.
    Gauge entries should supply dx (and dt if the lower-left B entry is
    evaluated).
    """
    k = spec.kappa
    bp, b1 = pair.b_plus, pair.b_1

    def lp(t, x):
        val = lplus.val(t, x)
        if val == 0:
            raise ValueError("gauge choice vanishes")
        return val

    bplus = ScalarEntry(
        val=lambda t, x: bp.val(t, x) * lp(t, x),
        dx=(None if lplus.dx is None else
            lambda t, x: bp.dx(t, x) * lp(t, x) + bp.val(t, x) * lplus.dx(t, x)),
        dt=(None if lplus.dt is None else
            lambda t, x: bp.dt(t, x) * lp(t, x) + bp.val(t, x) * lplus.dt(t, x)),
    )

    def l_trace(t, x):
        s = spec.sigma_at(t, x)
        return -(k * bp.val(t, x) + spec.v.val(t, x)) / s - lplus.dx(t, x) / lp(t, x)

    def b_trace(t, x):
        s = spec.sigma_at(t, x)
        b = bp.val(t, x)
        return (bp.dx(t, x) - b * (k * b + spec.v.val(t, x)) / s
                - 2 * b1.val(t, x) - entry_dt(lplus, t, x) / lp(t, x))

    mode, given = gauge
    if mode == "L1":
        l1 = given
        b1_entry = ScalarEntry(
            val=lambda t, x: bp.val(t, x) * l1.val(t, x) - b1.val(t, x),
            dx=(None if l1.dx is None else
                lambda t, x: (bp.dx(t, x) * l1.val(t, x)
                              + bp.val(t, x) * l1.dx(t, x) - b1.dx(t, x))),
            dt=(None if l1.dt is None else
                lambda t, x: (bp.dt(t, x) * l1.val(t, x)
                              + bp.val(t, x) * l1.dt(t, x) - b1.dt(t, x))),
        )
    elif mode == "B1":
        b1_entry = given

        def _l1val(t, x):
            b = bp.val(t, x)
            if b == 0:
                raise ValueError("gauge choice vanishes")
            return (b1.val(t, x) + given.val(t, x)) / b

        def _l1dx(t, x):
            b = bp.val(t, x)
            return ((b1.dx(t, x) + given.dx(t, x)) / b
                    - (b1.val(t, x) + given.val(t, x)) * bp.dx(t, x) / b ** 2)

        def _l1dt(t, x):
            b = bp.val(t, x)
            return ((b1.dt(t, x) + given.dt(t, x)) / b
                    - (b1.val(t, x) + given.val(t, x)) * bp.dt(t, x) / b ** 2)

        l1 = ScalarEntry(val=_l1val,
                         dx=None if given.dx is None else _l1dx,
                         dt=None if given.dt is None else _l1dt)
    else:
        raise ValueError("gauge must be ('L1', entry) or ('B1', entry)")

    l2 = ScalarEntry(
        val=lambda t, x: l_trace(t, x) - l1.val(t, x),
        dx=None, dt=None,
    )
    b2 = ScalarEntry(
        val=lambda t, x: b_trace(t, x) - b1_entry.val(t, x),
        dx=None, dt=None,
    )

    def lminus_val(t, x):
        s = spec.sigma_at(t, x)
        lv = l1.val(t, x)
        num = (k * b1.val(t, x) - spec.alpha.val(t, x)
               - (k * bp.val(t, x) + spec.v.val(t, x)) * lv) / s
        return (num - lv ** 2 - l1.dx(t, x)) / lp(t, x)

    lminus = ScalarEntry(val=lminus_val, dx=None, dt=None)

    def bminus_val(t, x):
        return (bp.val(t, x) * lminus_val(t, x)
                + (b1_entry.dx(t, x) - entry_dt(l1, t, x)) / lp(t, x))

    bminus = ScalarEntry(val=bminus_val, dx=None, dt=None)

    poles = getattr(pair, "poles_at", None)
    return LaxMatrices(L1=l1, L2=l2, Lplus=lplus, Lminus=lminus,
                       B1=b1_entry, B2=b2, Bplus=bplus, Bminus=bminus,
                       poles=poles)


# ---------------------------------------------------------------------------
# Constraint and zero-curvature residuals
# ---------------------------------------------------------------------------

def constraint_residuals(spec: FokkerPlanckSpec, lax: LaxMatrices,
                         grid: Grid2D) -> tuple[ResidualReport, ResidualReport]:
    """The two algebraic constraints tying the pair to the FP operator."""
    k = spec.kappa

    def r_diag(t, x):
        s = spec.sigma_at(t, x)
        l1 = lax.L1.val(t, x)
        return (k * lax.B1.val(t, x)
                + s * (entry_dx(lax.L1, t, x) + l1 ** 2
                       + lax.Lplus.val(t, x) * lax.Lminus.val(t, x))
                + spec.v.val(t, x) * l1 + spec.alpha.val(t, x))

    def r_plus(t, x):
        s = spec.sigma_at(t, x)
        lpv = lax.Lplus.val(t, x)
        return (k * lax.Bplus.val(t, x)
                + s * (entry_dx(lax.Lplus, t, x) + lax.L_t.val(t, x) * lpv)
                + spec.v.val(t, x) * lpv)

    rep1 = scan_identity("constraint_diag", grid, r_diag, lax.poles_at)
    rep2 = scan_identity("constraint_plus", grid, r_plus, lax.poles_at)
    return rep1, rep2


def zero_curvature_residuals(lax: LaxMatrices, grid: Grid2D,
                             t_step: float = DEFAULT_T_STEP
                             ) -> tuple[ResidualReport, ResidualReport, ResidualReport, ResidualReport]:
    """Residuals of the four component equations of d_t L - d_x B = [B, L]."""

    L_d, B_d, L_t, B_t = lax.L_d, lax.B_d, lax.L_t, lax.B_t

    def r_11(t, x):
        return (entry_dt(lax.L1, t, x, t_step) - entry_dx(lax.B1, t, x)
                - lax.Bplus.val(t, x) * lax.Lminus.val(t, x)
                + lax.Bminus.val(t, x) * lax.Lplus.val(t, x))

    def r_plus(t, x):
        return (entry_dt(lax.Lplus, t, x, t_step) - entry_dx(lax.Bplus, t, x)
                - B_d.val(t, x) * lax.Lplus.val(t, x)
                + lax.Bplus.val(t, x) * L_d.val(t, x))

    def r_minus(t, x):
        return (entry_dt(lax.Lminus, t, x, t_step) - entry_dx(lax.Bminus, t, x)
                - lax.Bminus.val(t, x) * L_d.val(t, x)
                + B_d.val(t, x) * lax.Lminus.val(t, x))

    def r_trace(t, x):
        return entry_dt(L_t, t, x, t_step) - entry_dx(B_t, t, x)

    return (
        scan_identity("curvature_11", grid, r_11, lax.poles_at),
        scan_identity("curvature_plus", grid, r_plus, lax.poles_at),
        scan_identity("curvature_minus", grid, r_minus, lax.poles_at),
        scan_identity("curvature_trace", grid, r_trace, lax.poles_at),
    )


# ---------------------------------------------------------------------------
# Derived quantities and scalar checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaxDerived:
    """Derived combinations used to reduce the constraints to scalar form."""

    lax: LaxMatrices

    def l_minus(self, t, x):
        return self.lax.Lplus.val(t, x) * self.lax.Lminus.val(t, x)

    def b_minus(self, t, x):
        return (self.lax.Bminus.val(t, x) * self.lax.Lplus.val(t, x)
                - self.lax.Bplus.val(t, x) * self.lax.Lminus.val(t, x))

    def X_t(self, t, x):
        lp = self.lax.Lplus.val(t, x)
        return self.lax.L_t.val(t, x) + entry_dx(self.lax.Lplus, t, x) / lp

    def y(self, t, x):
        lp = self.lax.Lplus.val(t, x)
        return entry_dt(self.lax.Lplus, t, x) / lp + self.lax.B_t.val(t, x)

    def X_1(self, t, x):
        l1 = self.lax.L1.val(t, x)
        return (self.l_minus(t, x) + l1 ** 2 + entry_dx(self.lax.L1, t, x)
                - self.X_t(t, x) * l1)


def ode_in_x_coefficients(spec: FokkerPlanckSpec, pair, t: float
                          ) -> tuple[Callable, Callable, Callable]:
    """Coefficients (c2, c1, c0) of the 2nd-order ODE in x satisfied by F.

    c2 = sigma, c1 = v + kappa*b_plus, c0 = alpha - kappa*b_1, at fixed t.
    """
    k = spec.kappa

    def c2(x):
        return spec.sigma.val(t, x)

    def c1(x):
        return spec.v.val(t, x) + k * pair.b_plus.val(t, x)

    def c0(x):
        return spec.alpha.val(t, x) - k * pair.b_1.val(t, x)

    return c2, c1, c0


def fp_residual(spec: FokkerPlanckSpec, F: np.ndarray, grid: Grid2D,
                scaled: bool = True) -> ResidualReport:
    """Stencil residual of the FP operator applied to a tabulated field.

    With scaled=True the pointwise residual is divided by the largest
    constituent term magnitude, making the report invariant under rescaling
    of F (the operator is linear and homogeneous).
    """
    F = np.asarray(F, dtype=complex)
    nt, nx = grid.shape
    if F.shape != (nt, nx):
        raise ValueError("field shape does not match grid")
    k = spec.kappa
    dt, dx = grid.spacing()
    vals = []
    for i in range(2, nt - 2):
        t = grid.t_values[i]
        for j in range(2, nx - 2):
            x = grid.x_values[j]
            ft, fx, fxx = fd_partials(F, grid, i, j)
            sv = spec.sigma.val(t, x)
            vv = spec.v.val(t, x)
            av = spec.alpha.val(t, x)
            parts = (k * ft, sv * fxx, vv * fx, av * F[i, j])
            res = sum(parts)
            # roundoff level of the stencil terms; residuals below it carry
            # no information and are reported as exactly satisfied
            a_f = abs(F[i, j])
            noise = 1e-12 * a_f * (abs(k) / dt + abs(sv) / dx ** 2
                                   + abs(vv) / dx + abs(av)) + 1e-300
            if abs(res) <= noise:
                vals.append(((t, x), 0.0))
            elif scaled:
                vals.append(((t, x), res / max(max(abs(p) for p in parts), noise)))
            else:
                vals.append(((t, x), res))
    if not vals:
        raise ValueError("empty residual domain")
    return residual_norms("fp_residual", vals)

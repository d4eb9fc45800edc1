"""Transport of the 2x2 linear system over a (t, x) rectangle.

The first eigenvector component is the Fokker-Planck solution candidate;
this module propagates the vector from a base point, checks that transport
is path-independent (the integral form of flatness), and verifies the PDEs
the first component must satisfy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .fields import Grid2D, ResidualReport, fd_partials, residual_norms
from .fpcore import FokkerPlanckSpec, LaxMatrices, fp_residual


@dataclass(frozen=True)
class EigenvectorField:
    """Components (F, G) sampled on a grid, normalized at a base point."""

    grid: Grid2D
    F: np.ndarray
    G: np.ndarray
    base_point: tuple[float, float]
    base_vector: tuple[complex, complex]


def _eval_entry(entry, t: float, x: np.ndarray) -> np.ndarray:
    """Entry value at one t across an array of abscissas."""
    out = entry.val(t, x)
    return np.broadcast_to(np.asarray(out, dtype=complex), np.shape(x)).copy() \
        if np.ndim(out) != np.ndim(x) else np.asarray(out, dtype=complex)


def _transport_x(lax: LaxMatrices, t: float, x_from: float, x_targets: np.ndarray,
                 y0: np.ndarray, tol: float) -> np.ndarray:
    """Integrate dY/dx = L(t, x) Y; returns Y at the requested abscissas."""
    if len(x_targets) == 0 or (len(x_targets) == 1 and x_targets[0] == x_from):
        return np.tile(y0, (len(x_targets), 1))

    def rhs(x, y):
        return lax.L_at(t, x) @ y

    sol = solve_ivp(rhs, (x_from, x_targets[-1]), y0.astype(complex), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"x-transport failed at t={t}: {sol.message}")
    return np.array([sol.sol(x) for x in x_targets])


def _transport_t(lax: LaxMatrices, x: float, t_from: float, t_targets: np.ndarray,
                 y0: np.ndarray, tol: float) -> np.ndarray:
    def rhs(t, y):
        return lax.B_at(t, x) @ y

    if len(t_targets) == 0 or (len(t_targets) == 1 and t_targets[0] == t_from):
        return np.tile(y0, (len(t_targets), 1))
    sol = solve_ivp(rhs, (t_from, t_targets[-1]), y0.astype(complex), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"t-transport failed at x={x}: {sol.message}")
    return np.array([sol.sol(t) for t in t_targets])


def _transport_t_stacked(lax: LaxMatrices, xs: np.ndarray, t_from: float,
                         t_targets: np.ndarray, Y0: np.ndarray, tol: float) -> np.ndarray:
    """Transport all columns at once so each accepted step evaluates the pair
    a single time; returns array of shape (len(t_targets), len(xs), 2)."""
    nx = len(xs)

    def rhs(t, y):
        Y = y.reshape(nx, 2)
        b1 = _eval_entry(lax.B1, t, xs)
        bp = _eval_entry(lax.Bplus, t, xs)
        bm = _eval_entry(lax.Bminus, t, xs)
        b2 = _eval_entry(lax.B2, t, xs)
        out = np.empty_like(Y)
        out[:, 0] = b1 * Y[:, 0] + bp * Y[:, 1]
        out[:, 1] = bm * Y[:, 0] + b2 * Y[:, 1]
        return out.ravel()

    sol = solve_ivp(rhs, (t_from, t_targets[-1]), Y0.astype(complex).ravel(),
                    method="DOP853", rtol=tol, atol=tol * 1e-2, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"t-transport failed: {sol.message}")
    return np.array([sol.sol(t).reshape(nx, 2) for t in t_targets])


def propagate(lax: LaxMatrices, grid: Grid2D,
              base_vector: tuple[complex, complex] = (1.0, 0.0),
              tol: float = 1e-10) -> EigenvectorField:
    """Fill the rectangle: along the base row in x, then up all columns in t.

    The base point is the lower-left grid corner.
    """
    ts = np.asarray(grid.t_values)
    xs = np.asarray(grid.x_values)
    y0 = np.asarray(base_vector, dtype=complex)
    base_row = _transport_x(lax, ts[0], xs[0], xs, y0, tol)
    nt, nx = grid.shape
    F = np.empty((nt, nx), dtype=complex)
    G = np.empty((nt, nx), dtype=complex)
    F[0, :] = base_row[:, 0]
    G[0, :] = base_row[:, 1]
    if nt > 1:
        cols = _transport_t_stacked(lax, xs, ts[0], ts[1:], base_row, tol)
        F[1:, :] = cols[:, :, 0]
        G[1:, :] = cols[:, :, 1]
    return EigenvectorField(grid=grid, F=F, G=G,
                            base_point=(ts[0], xs[0]),
                            base_vector=(complex(y0[0]), complex(y0[1])))


def field_to_csv(field: EigenvectorField, path) -> None:
    with open(path, "w") as fh:
        fh.write("t, x, Re(F), Im(F), Re(G), Im(G)\n")
        for i, t in enumerate(field.grid.t_values):
            for j, x in enumerate(field.grid.x_values):
                f, g = field.F[i, j], field.G[i, j]
                fh.write(", ".join(f"{v:.17g}" for v in
                                   (t, x, f.real, f.imag, g.real, g.imag)) + "\n")


def path_independence_residual(lax: LaxMatrices, grid: Grid2D,
                               base_vector: tuple[complex, complex] = (1.0, 0.0),
                               tol: float = 1e-10) -> ResidualReport:
    """Relative mismatch at the far corner between the two extreme transport
    orders (x then t, versus t then x); zero for a flat connection."""
    ts = np.asarray(grid.t_values)
    xs = np.asarray(grid.x_values)
    y0 = np.asarray(base_vector, dtype=complex)
    via_x = _transport_x(lax, ts[0], xs[0], xs[-1:], y0, tol)[0]
    y_a = _transport_t(lax, xs[-1], ts[0], ts[-1:], via_x, tol)[0]
    via_t = _transport_t(lax, xs[0], ts[0], ts[-1:], y0, tol)[0]
    y_b = _transport_x(lax, ts[-1], xs[0], xs[-1:], via_t, tol)[0]
    scale = max(np.linalg.norm(y_a), np.linalg.norm(y_b), 1e-300)
    mism = np.linalg.norm(y_a - y_b) / scale
    return residual_norms("path_independence", [((ts[-1], xs[-1]), mism)])


def fp_check(spec: FokkerPlanckSpec, field: EigenvectorField,
             scaled: bool = True) -> ResidualReport:
    """FP residual of the first component over the interior of the grid."""
    return fp_residual(spec, field.F, field.grid, scaled=scaled)


def transport_pde_check(pair, field: EigenvectorField) -> ResidualReport:
    """First-order PDE from the eigenvector elimination:
    dF/dt - b_plus dF/dx + b_1 F = 0, stencil derivatives, locally scaled."""
    grid = field.grid
    nt, nx = grid.shape
    vals = []
    floor = 1e-300
    for i in range(2, nt - 2):
        t = grid.t_values[i]
        for j in range(2, nx - 2):
            x = grid.x_values[j]
            ft, fx, _ = fd_partials(field.F, grid, i, j)
            parts = (ft, -pair.b_plus.val(t, x) * fx, pair.b_1.val(t, x) * field.F[i, j])
            scale = max(max(abs(p) for p in parts), floor)
            vals.append(((t, x), sum(parts) / scale))
    if not vals:
        raise ValueError("empty residual domain")
    return residual_norms("transport_pde", vals)


def ode_in_x_check(spec: FokkerPlanckSpec, pair, field: EigenvectorField) -> ResidualReport:
    """Second-order ODE along each fixed-t row, with coefficients
    (sigma, v + kappa*b_plus, alpha - kappa*b_1); locally scaled."""
    grid = field.grid
    nt, nx = grid.shape
    k = spec.kappa
    vals = []
    h = grid.spacing()[1]
    for i in range(nt):
        t = grid.t_values[i]
        row = field.F[i]
        for j in range(2, nx - 2):
            x = grid.x_values[j]
            fx = (row[j - 2] - 8 * row[j - 1] + 8 * row[j + 1] - row[j + 2]) / (12 * h)
            fxx = (-row[j - 2] + 16 * row[j - 1] - 30 * row[j] + 16 * row[j + 1] - row[j + 2]) / (12 * h ** 2)
            parts = (spec.sigma.val(t, x) * fxx,
                     (spec.v.val(t, x) + k * pair.b_plus.val(t, x)) * fx,
                     (spec.alpha.val(t, x) - k * pair.b_1.val(t, x)) * field.F[i, j])
            scale = max(max(abs(p) for p in parts), 1e-300)
            vals.append(((t, x), sum(parts) / scale))
    if not vals:
        raise ValueError("empty residual domain")
    return residual_norms("ode_in_x", vals)

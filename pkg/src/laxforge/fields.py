"""Shared numeric substrate: complex polynomials in x, sampling grids,
finite-difference stencils and residual-norm reports.

Everything here is an immutable value; functions are pure and safe to call
from worker threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Relative cutoff below which leading coefficients are considered spurious.
TRIM_RTOL = 1e-12


class StencilError(ValueError):
    """Raised when a finite-difference stencil does not fit the grid."""


def _trim(coeffs: Sequence[complex]) -> tuple[complex, ...]:
    """Drop leading (highest-degree) coefficients that are roundoff junk."""
    c = [complex(v) for v in coeffs]
    if not c:
        return ()
    scale = max(abs(v) for v in c)
    if scale == 0.0:
        return ()
    cutoff = TRIM_RTOL * scale
    n = len(c)
    while n > 0 and abs(c[n - 1]) <= cutoff:
        n -= 1
    return tuple(c[:n])


@dataclass(frozen=True)
class Polynomial:
    """Complex polynomial, coefficients in ascending degree.

    The zero polynomial has an empty coefficient tuple.  Construction trims
    leading coefficients smaller than TRIM_RTOL relative to the largest
    coefficient magnitude, so degree bounds stay meaningful after arithmetic.
    """

    coeffs: tuple[complex, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    # -- constructors -----------------------------------------------------
    @classmethod
    def of(cls, *coeffs: complex) -> "Polynomial":
        return cls(tuple(coeffs))

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls(())

    @classmethod
    def one(cls) -> "Polynomial":
        return cls((1.0 + 0j,))

    @classmethod
    def x(cls) -> "Polynomial":
        return cls((0j, 1.0 + 0j))

    @classmethod
    def from_roots(cls, roots: Iterable[complex], leading: complex = 1.0) -> "Polynomial":
        p = cls((complex(leading),))
        for r in roots:
            p = p * cls((-complex(r), 1.0 + 0j))
        return p

    # -- queries -----------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def inf_norm(self) -> float:
        return max((abs(c) for c in self.coeffs), default=0.0)

    def __call__(self, x):
        """Horner evaluation; x may be a scalar or a numpy array."""
        if not self.coeffs:
            return np.zeros_like(x, dtype=complex) if isinstance(x, np.ndarray) else 0j
        acc = self.coeffs[-1] * (np.ones_like(x, dtype=complex) if isinstance(x, np.ndarray) else 1.0)
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        out = [0j] * n
        for i, c in enumerate(a):
            out[i] += c
        for i, c in enumerate(b):
            out[i] += c
        return Polynomial(tuple(out))

    def __neg__(self) -> "Polynomial":
        return Polynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if self.is_zero or other.is_zero:
                return Polynomial.zero()
            prod = np.convolve(np.asarray(self.coeffs), np.asarray(other.coeffs))
            return Polynomial(tuple(prod))
        return Polynomial(tuple(complex(other) * c for c in self.coeffs))

    __rmul__ = __mul__

    def deriv(self) -> "Polynomial":
        return Polynomial(tuple(k * c for k, c in enumerate(self.coeffs) if k >= 1))


def poly_eval(p: Polynomial, x: complex) -> complex:
    return p(x)


def poly_div(num: Polynomial, den: Polynomial) -> tuple[Polynomial, Polynomial]:
    """Long division: num = quotient*den + remainder, deg(remainder) < deg(den).

    The remainder is returned untrimmed relative to the numerator, so callers
    can certify exactness via remainder.inf_norm() / num.inf_norm().
    """
    if den.is_zero:
        raise ZeroDivisionError("division by zero polynomial")
    r = list(num.coeffs)
    nd = len(den.coeffs)
    nq = len(r) - nd + 1
    if nq <= 0:
        return Polynomial.zero(), num
    q = [0j] * nq
    lead = den.coeffs[-1]
    for i in range(nq - 1, -1, -1):
        c = r[i + nd - 1] / lead
        q[i] = c
        for k, d in enumerate(den.coeffs):
            r[i + k] -= c * d
    return Polynomial(tuple(q)), Polynomial(tuple(r[: nd - 1]))


@dataclass(frozen=True)
class Grid2D:
    """Rectangular sampling grid with pole-exclusion semantics.

    exclusion_radius is the minimum allowed distance in the complex plane
    between a sample abscissa x and any pole of a rational field.
    """

    t_values: tuple[float, ...]
    x_values: tuple[float, ...]
    exclusion_radius: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_values", tuple(float(t) for t in self.t_values))
        object.__setattr__(self, "x_values", tuple(float(x) for x in self.x_values))
        if len(self.t_values) < 1 or len(self.x_values) < 1:
            raise ValueError("grid must contain at least one node per axis")
        if any(b <= a for a, b in zip(self.t_values, self.t_values[1:])):
            raise ValueError("t_values must be strictly increasing")
        if any(b <= a for a, b in zip(self.x_values, self.x_values[1:])):
            raise ValueError("x_values must be strictly increasing")
        if not self.exclusion_radius > 0:
            raise ValueError("exclusion_radius must be positive")

    @classmethod
    def regular(cls, t_min: float, t_max: float, nt: int, x_min: float, x_max: float,
                nx: int, exclusion_radius: float = 0.05) -> "Grid2D":
        return cls(tuple(np.linspace(t_min, t_max, nt)),
                   tuple(np.linspace(x_min, x_max, nx)),
                   exclusion_radius)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.t_values), len(self.x_values)

    def spacing(self) -> tuple[float, float]:
        """(dt, dx) for uniform grids; raises StencilError otherwise."""
        def _h(vals: tuple[float, ...], name: str) -> float:
            if len(vals) < 2:
                raise StencilError(f"grid has a single {name} node")
            d = np.diff(vals)
            h = d.mean()
            if np.max(np.abs(d - h)) > 1e-9 * max(abs(h), 1.0):
                raise StencilError(f"nonuniform {name} spacing")
            return float(h)

        return _h(self.t_values, "t"), _h(self.x_values, "x")

    def refine(self, factor: int = 2) -> "Grid2D":
        """Same extent, (n-1)*factor + 1 nodes per axis (uniform grids)."""
        nt, nx = self.shape
        return Grid2D.regular(self.t_values[0], self.t_values[-1], (nt - 1) * factor + 1,
                              self.x_values[0], self.x_values[-1], (nx - 1) * factor + 1,
                              self.exclusion_radius)


# 4th-order central stencils on uniform grids.
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def fd_partials(samples: np.ndarray, grid: Grid2D, i: int, j: int) -> tuple[complex, complex, complex]:
    """(d/dt, d/dx, d2/dx2) estimates at node (i, j) of a tabulated field.

    Requires two neighbours on each side in each direction and uniform
    spacing; accuracy is O(h^4) for smooth fields.
    """
    nt, nx = samples.shape
    if not (2 <= i <= nt - 3 and 2 <= j <= nx - 3):
        raise StencilError("stencil out of range")
    dt, dx = grid.spacing()
    ft = complex(np.dot(_D1, samples[i - 2:i + 3, j])) / dt
    fx = complex(np.dot(_D1, samples[i, j - 2:j + 3])) / dx
    fxx = complex(np.dot(_D2, samples[i, j - 2:j + 3])) / dx ** 2
    return ft, fx, fxx


def fd_t(values_at_offsets: Sequence[complex], h: float) -> complex:
    """4th-order first derivative from values at t + k*h, k = -2..2."""
    return complex(np.dot(_D1, np.asarray(values_at_offsets, dtype=complex))) / h


@dataclass(frozen=True)
class ResidualReport:
    """Norms of a pointwise identity residual over a set of sample points."""

    identity_name: str
    max_abs: float
    rms: float
    worst_point: tuple[float, float]
    samples: int

    def passed(self, tol: float) -> bool:
        return self.max_abs <= tol

    def as_dict(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "rms": self.rms,
            "worst_point": list(self.worst_point),
            "samples": self.samples,
        }


def residual_norms(identity_name: str,
                   values: Sequence[tuple[tuple[float, float], complex]]) -> ResidualReport:
    """Aggregate ((t, x), residual) samples into a ResidualReport."""
    if not values:
        raise ValueError("no samples")
    mags = np.array([abs(v) for _, v in values])
    worst = int(np.argmax(mags))
    return ResidualReport(
        identity_name=identity_name,
        max_abs=float(mags[worst]),
        rms=float(np.sqrt(np.mean(mags ** 2))),
        worst_point=tuple(values[worst][0]),
        samples=len(values),
    )

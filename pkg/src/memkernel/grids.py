"""Uniform space-time grids and discrete spatial operators.

Space rows are 1-D float arrays over all nodes ``x_0 .. x_{nx+1}`` (length
``nx + 2``); fields are 2-D arrays with one row per time level (shape
``(nt + 1, nx + 2)``).  All operators are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

__all__ = [
    "Grid",
    "second_diff",
    "first_diff",
    "helmholtz_solve",
    "DispersiveInverse",
    "quad_trapz",
    "spatial_h2_norm",
]


@dataclass(frozen=True)
class Grid:
    """Uniform discretization of (0, ell) x [0, T].

    ``nx`` counts interior space nodes, so there are ``nx + 2`` nodes with
    ``x_0 = 0`` and ``x_{nx+1} = ell`` exactly; ``nt`` counts time steps.
    """

    ell: float
    T: float
    nx: int
    nt: int

    def __post_init__(self):
        if self.nx < 3:
            raise ValueError("need at least 3 interior space nodes")
        if self.nt < 2:
            raise ValueError("need at least 2 time steps")
        if self.ell <= 0 or self.T <= 0:
            raise ValueError("domain length and horizon must be positive")

    @property
    def dx(self):
        return self.ell / (self.nx + 1)

    @property
    def dt(self):
        return self.T / self.nt

    @property
    def x(self):
        return np.linspace(0.0, self.ell, self.nx + 2)

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.nt + 1)

    def time_window(self, steps):
        """Grid over the same space nodes but only ``steps`` time steps."""
        return Grid(self.ell, steps * self.dt, self.nx, steps)


def second_diff(row, dx):
    """Three-point second difference along the last axis.

    Interior nodes get the centered stencil; the two endpoint entries get
    one-sided second-order values.  Endpoint values are for quadrature and
    diagnostics only; Dirichlet solves never read them.
    """
    row = np.asarray(row, dtype=float)
    out = np.empty_like(row)
    out[..., 1:-1] = (row[..., :-2] - 2.0 * row[..., 1:-1] + row[..., 2:]) / dx**2
    out[..., 0] = (2 * row[..., 0] - 5 * row[..., 1] + 4 * row[..., 2] - row[..., 3]) / dx**2
    out[..., -1] = (2 * row[..., -1] - 5 * row[..., -2] + 4 * row[..., -3] - row[..., -4]) / dx**2
    return out


def first_diff(row, dx):
    """Centered first difference along the last axis, one-sided at the ends."""
    row = np.asarray(row, dtype=float)
    out = np.empty_like(row)
    out[..., 1:-1] = (row[..., 2:] - row[..., :-2]) / (2.0 * dx)
    out[..., 0] = (-3 * row[..., 0] + 4 * row[..., 1] - row[..., 2]) / (2.0 * dx)
    out[..., -1] = (3 * row[..., -1] - 4 * row[..., -2] + row[..., -3]) / (2.0 * dx)
    return out


class DispersiveInverse:
    """Prefactored solver for (I - beta * D_xx) w = rhs with Dirichlet data.

    The interior matrix is symmetric positive definite tridiagonal; the
    Cholesky factor is computed once and reused, which matters inside time
    stepping loops.  Each ``solve`` call allocates its own work arrays.
    """

    def __init__(self, beta, dx, n_interior):
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        self.beta = beta
        self.dx = dx
        self.n = n_interior
        if beta > 0:
            c = beta / dx**2
            ab = np.zeros((2, n_interior))
            ab[0, 1:] = -c
            ab[1, :] = 1.0 + 2.0 * c
            self._factor = cholesky_banded(ab)
            self._c = c

    def solve(self, rhs, left_bc=0.0, right_bc=0.0):
        """Full-row solution with prescribed endpoint values."""
        rhs = np.asarray(rhs, dtype=float)
        out = np.empty(self.n + 2)
        out[0] = left_bc
        out[-1] = right_bc
        if self.beta == 0.0:
            out[1:-1] = rhs[1:-1]
            return out
        b = rhs[1:-1].copy()
        b[0] += self._c * left_bc
        b[-1] += self._c * right_bc
        out[1:-1] = cho_solve_banded((self._factor, False), b)
        return out


def helmholtz_solve(beta, rhs, left_bc, right_bc, dx):
    """Solve (I - beta * D_xx) w = rhs at interior nodes, w pinned at the ends.

    ``rhs`` is a full row; only its interior entries enter the tridiagonal
    system.  O(nx) via a banded Cholesky factorization.
    """
    rhs = np.asarray(rhs, dtype=float)
    return DispersiveInverse(beta, dx, rhs.shape[-1] - 2).solve(rhs, left_bc, right_bc)


def quad_trapz(row, dx):
    """Composite trapezoid quadrature of node values along the last axis."""
    row = np.asarray(row, dtype=float)
    return dx * (row[..., :].sum(axis=-1) - 0.5 * (row[..., 0] + row[..., -1]))


def spatial_h2_norm(row, dx):
    """Discrete H2(I) norm: L2 norms of the value and its two differences."""
    r = np.asarray(row, dtype=float)
    parts = (
        quad_trapz(r * r, dx)
        + quad_trapz(first_diff(r, dx) ** 2, dx)
        + quad_trapz(second_diff(r, dx) ** 2, dx)
    )
    return np.sqrt(parts)

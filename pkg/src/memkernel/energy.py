"""Discrete energy functionals and the linear-solve stability sentinel.

For the homogeneous Dirichlet problem v_tt - v_xx - beta v_xxtt = K the
first-level energy E1 = (|v_t|^2 + |v_x|^2 + beta |v_xt|^2) / 2 is conserved
when K = 0 and controlled by the data otherwise; the second-level energy E2
uses one more spatial derivative.  The solution norm in H2-in-time is
bounded by C (|v0| + |v1| + |K|).  The constant is not computable from the
analysis, so it is calibrated once on a manufactured suite and frozen; the
margin check is a stability sentinel, not a proof.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .direct import solve_linear_dirichlet
from .grids import first_diff, quad_trapz, second_diff, spatial_h2_norm
from .timeconv import integrate_prefix, l2_time_norm, time_derivative

__all__ = [
    "EnergyTrack",
    "energy_series",
    "solution_norm",
    "check_estimate",
    "calibrate_constant",
    "CALIBRATED_BOUND",
]

# 1.2 x the largest LHS/RHS ratio observed on the 20-case calibration suite
# (seed 777, beta=0.1, nx=80, nt=200); the ratio converges under grid
# refinement, so the same constant serves finer grids of this family.
# Regenerate with calibrate_constant(20, seed=777, pd=<family problem>).
CALIBRATED_BOUND = 17.845101900212978


@dataclass(frozen=True)
class EnergyTrack:
    """Per-level energies and cumulative second-derivative measures."""

    t: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    cum_vtt: np.ndarray
    cum_vxtt: np.ndarray
    cum_vxxtt: np.ndarray


def energy_series(v, beta, grid):
    """Energy functionals of a field, discrete derivatives throughout."""
    v = np.asarray(v, float)
    dt, dx = grid.dt, grid.dx
    vt = time_derivative(v, dt)
    vx = first_diff(v, dx)
    vxx = second_diff(v, dx)
    vxt = first_diff(vt, dx)
    vxxt = second_diff(vt, dx)
    vtt = time_derivative(vt, dt)
    vxtt = first_diff(vtt, dx)
    vxxtt = second_diff(vtt, dx)

    def sq(field):
        return quad_trapz(field * field, dx)

    e1 = 0.5 * (sq(vt) + sq(vx) + beta * sq(vxt))
    e2 = 0.5 * (sq(vxt) + sq(vxx) + beta * sq(vxxt))
    return EnergyTrack(
        t=grid.t,
        e1=e1,
        e2=e2,
        cum_vtt=integrate_prefix(sq(vtt), 0.0, dt),
        cum_vxtt=integrate_prefix(sq(vxtt), 0.0, dt),
        cum_vxxtt=integrate_prefix(sq(vxxtt), 0.0, dt),
    )


def solution_norm(v, grid):
    """H2-in-time norm surrogate: v, v_t, v_tt measured in discrete H2(I).

    Sum of the three L2-in-time norms of the spatial H2 row norms; the same
    surrogate drives the fixed-point iteration metric.
    """
    v = np.asarray(v, float)
    dt, dx = grid.dt, grid.dx
    total = 0.0
    layer = v
    for _ in range(3):
        rows = spatial_h2_norm(layer, dx)
        total += l2_time_norm(rows, dt)
        layer = time_derivative(layer, dt)
    return float(total)


def check_estimate(v, v0row, v1row, K, beta, grid, bound=None):
    """Margin of the calibrated stability estimate; nonnegative is healthy.

    Returns bound * (|v0| + |v1| + |K|) - |v| with the H2 surrogates above.
    """
    c = CALIBRATED_BOUND if bound is None else bound
    dx, dt = grid.dx, grid.dt
    lhs = solution_norm(v, grid)
    k_norm = l2_time_norm(np.sqrt(quad_trapz(np.asarray(K, float) ** 2, dx)), dt)
    rhs = spatial_h2_norm(v0row, dx) + spatial_h2_norm(v1row, dx) + k_norm
    return c * rhs - lhs


def _random_case(pd, rng):
    """Random smooth Dirichlet data: sine series plus separable forcing.

    One case in three has zero initial rows (pure forcing response), which
    is where the ratio of solution norm to data norm peaks; the calibration
    family must cover that corner.
    """
    g = pd.grid
    x, t = g.x, g.t
    v0 = np.zeros_like(x)
    v1 = np.zeros_like(x)
    pure_forcing = rng.integers(0, 3) == 0
    if not pure_forcing:
        for j in range(1, 4):
            v0 += rng.uniform(-1, 1) / j**2 * np.sin(j * np.pi * x / pd.ell)
            v1 += rng.uniform(-1, 1) / j**2 * np.sin(j * np.pi * x / pd.ell)
    K = np.zeros((g.nt + 1, g.nx + 2))
    for j in range(1, 3):
        K += rng.uniform(-2, 2) * np.outer(
            np.cos(rng.uniform(0.5, 4) * t), np.sin(j * np.pi * x / pd.ell)
        )
    return v0, v1, K


def calibrate_constant(n_cases, seed, pd, headroom=1.2):
    """Max LHS/RHS ratio over a manufactured suite, inflated by ``headroom``.

    Used once to freeze CALIBRATED_BOUND; kept callable so the suite can be
    regenerated and the frozen value audited.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        v0, v1, K = _random_case(pd, rng)
        v = solve_linear_dirichlet(pd, v0, v1, K)
        margin_parts = check_estimate(v, v0, v1, K, pd.beta, pd.grid, bound=0.0)
        lhs = -margin_parts  # bound=0 makes the margin equal -LHS
        dx, dt = pd.grid.dx, pd.grid.dt
        k_norm = l2_time_norm(np.sqrt(quad_trapz(K**2, dx)), dt)
        rhs = spatial_h2_norm(v0, dx) + spatial_h2_norm(v1, dx) + k_norm
        worst = max(worst, lhs / rhs)
    return headroom * worst

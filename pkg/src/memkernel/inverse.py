"""Kernel reconstruction by fixed-point iteration with window continuation.

One window solves the homogeneous reformulation on [T0, T0 + tau_w] as the
fixed point of a map A acting on pairs (v, k'):

1. the kernel rate is updated from the fourth measurement derivative and
   sensor projections of the current field iterate,
2. the rate integrates to the kernel (anchored at the window's seam value),
3. the third derivative of the boundary displacement follows from the
   sensor functionals of the field,
4. its prefix integral and the oscillator constants give the transported
   source z'' x/ell,
5. the field is re-solved from the linear Dirichlet problem driven by the
   updated kernel, the memory of the field iterate, and that source.

Picard iteration of A contracts for short enough windows; the solved span
then shifts forward.  Later windows carry the memory of everything solved
so far through precomputed tail terms (a lagged convolution field g, plus
tail series for the kernel-rate and displacement equations) and through
"head" convolutions that pair the new window's unknowns with the stored
early history.  Window length adapts: if the iteration fails to contract,
the window is halved and retried.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .direct import solve_linear_dirichlet, profiles
from .energy import solution_norm
from .equivalence import (
    EquivSetup,
    build_setup,
    check_compatibility,
)
from .errors import CompatibilityFailed, NoConvergence, NonFinite
from .grids import quad_trapz, second_diff, spatial_h2_norm
from .timeconv import (
    Kernel,
    conv,
    conv_field,
    integrate_prefix,
    l2_time_norm,
    time_derivative,
)

__all__ = [
    "InverseOptions",
    "IterState",
    "WindowData",
    "WindowDiagnostics",
    "Reconstruction",
    "state_distance",
    "apply_map_A",
    "solve_window",
    "reconstruct",
    "auto_window_steps",
]

MIN_WINDOW_STEPS = 8


@dataclass(frozen=True)
class InverseOptions:
    """Knobs of the reconstruction; defaults follow the build contract."""

    tol: float = 1e-10
    max_iter: int = 50
    window_steps: int | None = None  # None: policy below picks the width
    window_policy: str = "optimistic"  # or "bound": the data-norm estimate
    max_halvings: int = 6
    vt_sign: float = +1.0  # sign of the velocity-projection term; see README
    derivative_mode: str = "auto"
    noise_sigma: float = 0.0
    force: bool = False
    initial_kprime: float = 0.0  # alternative Picard start, for uniqueness checks
    norm_track_bound: float = 10.0


@dataclass
class IterState:
    """One Picard iterate on a window: field, kernel rate, and oscillator."""

    v: np.ndarray  # (W+1, nx+2), zero at both space endpoints
    kprime: np.ndarray  # (W+1,)
    yccc: np.ndarray  # third displacement derivative on the window
    z2: np.ndarray  # transported source p y''' + q y''


@dataclass
class WindowData:
    """Frozen inputs of one window: seams, measurement slices, memory tails."""

    pd_w: object  # ProblemData restricted to the window's time span
    start: int  # global index of the window's first node
    steps: int  # W: number of time steps in the window
    k_seam: float
    y2_seam: float
    u_tau: np.ndarray
    u_tautau: np.ndarray
    f: np.ndarray  # (5, W+1) measurement derivative slices
    has_history: bool = False
    # memory of the already-solved span (present when start > 0)
    khat_head: np.ndarray | None = None  # kernel over the first W+1 nodes
    kphat_head: np.ndarray | None = None
    Phat_head: np.ndarray | None = None  # early-history sensor projections
    Ghat_head: np.ndarray | None = None  # early-history boundary functionals
    Vxx_head: np.ndarray | None = None  # early-history field curvature
    g_tail: np.ndarray | None = None  # lagged convolution field
    tail_proj: np.ndarray | None = None
    tail_G: np.ndarray | None = None


@dataclass
class WindowDiagnostics:
    index: int
    start: int
    steps: int
    iterations: int
    distances: tuple
    halvings: int
    norm_track: float

    @property
    def final_ratios(self):
        d = self.distances
        return tuple(d[i + 1] / d[i] for i in range(max(0, len(d) - 4), len(d) - 1))


@dataclass
class Reconstruction:
    """Assembled global solution of the inverse problem plus diagnostics."""

    kernel: Kernel
    v: np.ndarray
    y: np.ndarray
    yprime: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    windows: list
    report: object
    setup: EquivSetup


def state_distance(s1, s2, grid_w):
    """Iteration metric: field difference in the H2-in-time surrogate plus
    the L2 time norm of the kernel-rate difference."""
    dv = solution_norm(s1.v - s2.v, grid_w)
    dk = l2_time_norm(s1.kprime - s2.kprime, grid_w.dt)
    return dv + dk


def _row_quad(field_rows, weight_row, dx):
    return quad_trapz(field_rows * weight_row, dx)


def apply_map_A(state, win, setup, pd, vt_sign=1.0):
    """One application of the fixed-point map on a window."""
    grid_w = win.pd_w.grid
    dt, dx = grid_w.dt, grid_w.dx
    prof = profiles(pd)

    v, kp_old = state.v, state.kprime
    vt = time_derivative(v, dt)
    vxx = second_diff(v, dx)
    vxxt = time_derivative(vxx, dt)

    proj_v = _row_quad(v, prof.phippp, dx)
    proj_vt = _row_quad(vt, prof.phippp, dx)

    if win.has_history:
        mem_proj = (
            conv(kp_old, win.Phat_head, dt)
            + conv(win.kphat_head, proj_v, dt)
            + win.tail_proj
        )
    else:
        mem_proj = conv(kp_old, proj_v, dt)
    kp_new = setup.alpha * (
        win.f[4] + vt_sign * proj_vt - setup.k0 * proj_v - mem_proj
    )
    k_new = integrate_prefix(kp_new, win.k_seam, dt)

    g_of_v = (win.f[1] + _row_quad(vxx, setup.psi_row, dx)) / setup.psi_ell
    gp_of_v = (win.f[2] + _row_quad(vxxt, setup.psi_row, dx)) / setup.psi_ell
    if win.has_history:
        mem_g = (
            conv(win.kphat_head, g_of_v, dt)
            + conv(kp_old, win.Ghat_head, dt)
            + win.tail_G
        )
    else:
        mem_g = conv(kp_old, g_of_v, dt)
    y3 = gp_of_v - kp_new * setup.ghat_u0 - setup.k0 * g_of_v - mem_g
    y2 = integrate_prefix(y3, win.y2_seam, dt)
    z2 = pd.p * y3 + pd.q * y2

    if win.has_history:
        mem_field = (
            conv_field(k_new, win.Vxx_head, dt)
            + conv_field(win.khat_head, vxx, dt)
            + win.g_tail
        )
    else:
        mem_field = conv_field(k_new, vxx, dt)
    K = (
        -np.outer(k_new, prof.u0pp)
        - mem_field
        + np.outer(z2, grid_w.x / pd.ell)
    )
    v_new = solve_linear_dirichlet(win.pd_w, win.u_tau, win.u_tautau, K)

    if not (np.all(np.isfinite(v_new)) and np.all(np.isfinite(kp_new))):
        raise NonFinite("fixed-point map output")
    return IterState(v=v_new, kprime=kp_new, yccc=y3, z2=z2)


def _initial_state(win, setup, pd, kprime0=0.0):
    """Picard seed: constant kernel at the seam value, flat kernel rate."""
    grid_w = win.pd_w.grid
    prof = profiles(pd)
    W = win.steps
    kp = np.full(W + 1, kprime0)
    K = -win.k_seam * np.outer(np.ones(W + 1), prof.u0pp)
    if win.has_history:
        K = K - win.g_tail
    v = solve_linear_dirichlet(win.pd_w, win.u_tau, win.u_tautau, K)
    return IterState(v=v, kprime=kp, yccc=np.zeros(W + 1), z2=np.zeros(W + 1))


FLOOR_TOL = 1e-6  # stagnation below this relative level counts as the floor


def _trim_floor_wobble(distances):
    """Cut the crawl along the roundoff floor off the contraction record.

    Geometric decay drops well below 4x the eventual minimum within one or
    two steps, whereas the floor wobble stays inside that band, so cutting
    at the first entry within the band keeps exactly the contraction phase.
    """
    floor = min(distances)
    cut = next(i for i, d in enumerate(distances) if d <= 4.0 * floor)
    return distances[: cut + 1]


def solve_window(win, setup, pd, tol=1e-10, max_iter=50, vt_sign=1.0,
                 initial_kprime=0.0):
    """Iterate the map to its fixed point on one window.

    Stops when the successive-iterate distance falls below
    tol * (1 + first-step distance).  The metric contains doubled
    difference stencils, which amplify roundoff; the geometric decay can
    bottom out on that floor above the tolerance.  Stagnation detection
    handles this: once the best distance has not improved for three
    consecutive iterations while sitting far below FLOOR_TOL relative, the
    state is accepted and the trailing floor-noise steps are dropped from
    the contraction record.  Raises ``NoConvergence`` if the iteration
    diverges or the budget runs out (the caller then halves the window).
    """
    grid_w = win.pd_w.grid
    state = _initial_state(win, setup, pd, initial_kprime)
    distances = []
    d_first = None
    best = np.inf
    stalled = 0
    for it in range(1, max_iter + 1):
        new = apply_map_A(state, win, setup, pd, vt_sign)
        d = state_distance(new, state, grid_w)
        distances.append(d)
        state = new
        if d_first is None:
            d_first = d
        scale = 1.0 + d_first
        if not np.isfinite(d) or d > 1e4 * scale:
            raise NoConvergence(it, d / distances[-2] if it > 1 else np.inf,
                                window=win.start)
        if d <= tol * scale:
            return state, _trim_floor_wobble(distances)
        if d < 0.99 * best:
            best = d
            stalled = 0
        else:
            stalled += 1
            if stalled >= 4 and best <= FLOOR_TOL * scale:
                return state, _trim_floor_wobble(distances)
    if best <= FLOOR_TOL * (1.0 + d_first):
        # budget exhausted while drifting along the floor: still converged
        return state, _trim_floor_wobble(distances)
    ratio = distances[-1] / distances[-2] if len(distances) > 1 else np.inf
    raise NoConvergence(max_iter, ratio, window=win.start)


def auto_window_steps(pd, setup):
    """Window length from the data-norm bound: tau = 1 / sqrt(1 + M0).

    M0 mirrors the proof-side bound on the iterate norm.  The bound is so
    conservative that it usually returns the minimum width, which wastes
    accuracy on seam stencils; the default policy therefore starts from the
    full horizon and relies on adaptive halving instead, keeping this
    estimate available as the "bound" policy.
    """
    grid = pd.grid
    dt, dx = grid.dt, grid.dx
    prof = profiles(pd)
    a = abs(setup.alpha)
    k0 = abs(setup.k0)
    nv0 = spatial_h2_norm(setup.v0row, dx)
    nv1 = spatial_h2_norm(setup.v1row, dx)
    nphi3 = np.sqrt(quad_trapz(prof.phippp**2, dx))
    npsi = np.sqrt(quad_trapz(setup.psi_row**2, dx))
    nu0 = spatial_h2_norm(prof.u0, dx)
    nf = [l2_time_norm(setup.f_derivs[j], dt) for j in range(5)]
    ghat = abs(setup.ghat_u0)
    psi_ell = abs(setup.psi_ell)

    f_term = a * (nf[4] + nphi3 * (1 + nv1 + (1 + nv1 + nv0) * (k0 + 1)))
    m0 = (
        nv0
        + nv1
        + (nu0 + 1.0) * (k0 + 1.0)
        + pd.q * abs(setup.y2prime0)
        + (pd.p + pd.q)
        * (
            (nf[2] + npsi * (1 + nv1)) / psi_ell
            + (k0 + 1.0) * (nf[1] + npsi * (1 + nv1 + nv0)) / psi_ell
            + ghat * f_term
        )
        + f_term
    )
    tau = min(pd.T, 1.0 / np.sqrt(1.0 + m0))
    return int(np.clip(round(tau / dt), MIN_WINDOW_STEPS, grid.nt))


def _shift_weights(khat_vals, n0, W, dt):
    """(W+1, n0+1) matrix of lagged-kernel trapezoid weights.

    Row n holds dt * khat[n0 + n - m] for m = n..n0 (endpoint weights
    halved), realizing the tail integral over the solved span.  Requires
    W <= n0; the last row is empty when W == n0.
    """
    rows = np.arange(W + 1)
    m = np.arange(n0 + 1)[None, :]
    idx = n0 + rows[:, None] - m
    valid = m >= rows[:, None]
    wts = np.where(valid, khat_vals[np.clip(idx, 0, n0)], 0.0)
    wts[rows, rows] *= 0.5  # first contributing node of each row (m = n)
    wts[:, n0] *= 0.5  # last contributing node (m = n0)
    if W == n0:
        wts[W, :] = 0.0  # empty integration span
    return dt * wts


def _window_data(pd, setup, n0, W, k_run, kp_glob, v_glob, hist):
    grid = pd.grid
    dt = grid.dt
    pd_w = replace(pd, T=W * dt, grid=grid.time_window(W))
    fslice = setup.f_derivs[:, n0 : n0 + W + 1]
    if n0 == 0:
        return WindowData(
            pd_w=pd_w, start=0, steps=W, k_seam=setup.k0,
            y2_seam=setup.y2prime0, u_tau=setup.v0row, u_tautau=setup.v1row,
            f=fslice,
        )
    u_tau = v_glob[n0]
    u_tautau = (3.0 * v_glob[n0] - 4.0 * v_glob[n0 - 1] + v_glob[n0 - 2]) / (2.0 * dt)
    wk = _shift_weights(k_run[: n0 + 1], n0, W, dt)
    wkp = _shift_weights(kp_glob[: n0 + 1], n0, W, dt)
    return WindowData(
        pd_w=pd_w, start=n0, steps=W, k_seam=float(k_run[n0]),
        y2_seam=float(hist["y2"][n0]), u_tau=u_tau, u_tautau=u_tautau,
        f=fslice, has_history=True,
        khat_head=k_run[: W + 1].copy(),
        kphat_head=kp_glob[: W + 1].copy(),
        Phat_head=hist["proj"][: W + 1].copy(),
        Ghat_head=hist["gfun"][: W + 1].copy(),
        Vxx_head=hist["vxx"][: W + 1].copy(),
        g_tail=wk @ hist["vxx"][: n0 + 1],
        tail_proj=wkp @ hist["proj"][: n0 + 1],
        tail_G=wkp @ hist["gfun"][: n0 + 1],
    )


def reconstruct(pd, f, options=InverseOptions()):
    """Recover the kernel (and the field/oscillator) from the measurement.

    Marches windows across [0, T]; each window is solved by Picard
    iteration and its results are appended to the global arrays and to the
    memory histories the following windows convolve against.
    """
    setup = build_setup(
        pd, f, derivative_mode=options.derivative_mode,
        noise_sigma=options.noise_sigma,
    )
    report = check_compatibility(setup, pd)
    if not report.passed and not options.force:
        raise CompatibilityFailed(report)

    grid = pd.grid
    nt, nx, dt, dx = grid.nt, grid.nx, grid.dt, grid.dx
    prof = profiles(pd)

    v_glob = np.zeros((nt + 1, nx + 2))
    kp_glob = np.zeros(nt + 1)
    y3_glob = np.zeros(nt + 1)
    hist = {
        "proj": np.zeros(nt + 1),  # sensor projection of the solved field
        "gfun": np.zeros(nt + 1),  # boundary functional of the solved field
        "vxx": np.zeros((nt + 1, nx + 2)),
        "y2": np.zeros(nt + 1),
    }
    v_glob[0] = setup.v0row
    hist["vxx"][0] = second_diff(setup.v0row, dx)
    hist["proj"][0] = quad_trapz(setup.v0row * prof.phippp, dx)
    hist["gfun"][0] = (
        setup.f_derivs[1][0] + quad_trapz(setup.psi_row * hist["vxx"][0], dx)
    ) / setup.psi_ell
    hist["y2"][0] = setup.y2prime0
    k_run = np.full(nt + 1, setup.k0)

    if options.window_steps is not None:
        width = options.window_steps
    elif options.window_policy == "bound":
        width = auto_window_steps(pd, setup)
    else:
        width = nt  # optimistic: let non-convergence halve it
    width = int(np.clip(width, MIN_WINDOW_STEPS, nt))
    windows = []
    n0 = 0
    prev_track = None
    while n0 < nt:
        W = min(width, nt - n0)
        if n0 > 0:
            W = min(W, n0)  # the shift identities need the solved span >= W
        halvings = 0
        while True:
            win = _window_data(pd, setup, n0, W, k_run, kp_glob, v_glob, hist)
            try:
                state, distances = solve_window(
                    win, setup, pd, tol=options.tol, max_iter=options.max_iter,
                    vt_sign=options.vt_sign, initial_kprime=options.initial_kprime,
                )
                break
            except NoConvergence:
                if halvings >= options.max_halvings or W // 2 < MIN_WINDOW_STEPS:
                    raise
                W //= 2
                halvings += 1
        width = W  # never grow back: keeps every window within the solved span

        sl = slice(n0 + 1, n0 + W + 1)
        v_glob[sl] = state.v[1:]
        kp_glob[sl] = state.kprime[1:]
        y3_glob[sl] = state.yccc[1:]
        if n0 == 0:
            kp_glob[0] = state.kprime[0]
            y3_glob[0] = state.yccc[0]
        k_run = integrate_prefix(kp_glob, setup.k0, dt)
        hist["y2"][: n0 + W + 1] = integrate_prefix(
            y3_glob[: n0 + W + 1], setup.y2prime0, dt
        )
        vxx_new = second_diff(state.v[1:], dx)
        hist["vxx"][sl] = vxx_new
        hist["proj"][sl] = quad_trapz(state.v[1:] * prof.phippp, dx)
        hist["gfun"][sl] = (
            setup.f_derivs[1][sl] + quad_trapz(setup.psi_row * vxx_new, dx)
        ) / setup.psi_ell

        track = solution_norm(state.v, win.pd_w.grid) + l2_time_norm(
            state.kprime, dt
        )
        if prev_track is not None and track > options.norm_track_bound * prev_track:
            warnings.warn(
                f"window norm grew from {prev_track:.3g} to {track:.3g}, "
                f"beyond the {options.norm_track_bound}x a-priori bound",
                stacklevel=2,
            )
        prev_track = track
        windows.append(
            WindowDiagnostics(
                index=len(windows), start=n0, steps=W,
                iterations=len(distances), distances=tuple(distances),
                halvings=halvings, norm_track=track,
            )
        )
        n0 += W

    kernel = Kernel.from_kprime(kp_glob, setup.k0, dt)
    y2 = integrate_prefix(y3_glob, setup.y2prime0, dt)
    yprime = integrate_prefix(y2, setup.yprime0, dt)
    y = integrate_prefix(yprime, setup.y0, dt)
    return Reconstruction(
        kernel=kernel, v=v_glob, y=y, yprime=yprime, y2=y2, y3=y3_glob,
        windows=windows, report=report, setup=setup,
    )

"""Trapezoid convolution quadrature and discrete time norms.

All series live on the shared uniform time grid ``t_n = n*dt``.  The
convolution (k * g)(t_n) uses the composite trapezoid rule in the lag
variable, with the value at t_0 forced to exactly zero (the continuous
convolution vanishes there and several initial-time identities rely on it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

__all__ = [
    "Kernel",
    "conv",
    "conv_field",
    "convolution_matrix",
    "integrate_prefix",
    "l2_time_norm",
    "check_young",
    "check_zero_start",
    "time_derivative",
]


@dataclass(frozen=True)
class Kernel:
    """Memory kernel sampled on the time grid, with its rate and k(0).

    ``k`` is always the trapezoid prefix integral of ``kprime`` shifted by
    ``k0``, so the three fields stay mutually consistent to roundoff.  Build
    instances through the classmethods.
    """

    k: np.ndarray
    kprime: np.ndarray
    k0: float
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "k", np.asarray(self.k, dtype=float))
        object.__setattr__(self, "kprime", np.asarray(self.kprime, dtype=float))
        scale = 1.0 + np.max(np.abs(self.k))
        if abs(self.k[0] - self.k0) > 1e-12 * scale:
            raise ValueError("k[0] disagrees with k0")
        resid = np.max(np.abs(self.k - integrate_prefix(self.kprime, self.k0, self.dt)))
        if resid > 1e-12 * scale:
            raise ValueError("k is not the prefix integral of kprime")

    @classmethod
    def from_kprime(cls, kprime, k0, dt):
        kprime = np.asarray(kprime, dtype=float)
        return cls(integrate_prefix(kprime, k0, dt), kprime, float(k0), dt)

    @classmethod
    def from_expression(cls, expr, t):
        """Sample the rate exactly and integrate it back to the kernel.

        Integrating the sampled rate (rather than sampling the kernel
        itself) keeps the prefix-integral consistency exact; the O(dt^2)
        quadrature deviation from the ideal kernel sits below the scheme
        order everywhere it is used.
        """
        from .expressions import differentiate, sample

        t = np.asarray(t, dtype=float)
        kprime = sample(differentiate(expr), t)
        return cls.from_kprime(kprime, float(expr.eval(float(t[0]))), t[1] - t[0])

    @classmethod
    def zero(cls, nt, dt):
        return cls(np.zeros(nt + 1), np.zeros(nt + 1), 0.0, dt)


def convolution_matrix(k, dt):
    """Lower-triangular matrix W with (W @ g)[n] = trapezoid conv of k and g.

    Row n carries dt * k[n-m] for m = 0..n with the endpoint weights halved;
    row 0 is identically zero.
    """
    k = np.asarray(k, dtype=float)
    n = k.shape[0]
    w = np.tril(toeplitz(k, np.zeros(n)))
    w[:, 0] *= 0.5
    idx = np.arange(n)
    w[idx, idx] *= 0.5
    w[0, 0] = 0.0
    return dt * w


def conv(k, g, dt):
    """Trapezoid convolution of two equal-length series; exact 0 at t_0."""
    k = np.asarray(k, dtype=float)
    g = np.asarray(g, dtype=float)
    if k.shape != g.shape:
        raise ValueError(f"length mismatch: {k.shape} vs {g.shape}")
    return convolution_matrix(k, dt) @ g


def conv_field(k, field, dt):
    """Convolution applied down each spatial column of a field."""
    k = np.asarray(k, dtype=float)
    field = np.asarray(field, dtype=float)
    if field.shape[0] != k.shape[0]:
        raise ValueError(
            f"field has {field.shape[0]} time levels, kernel has {k.shape[0]}"
        )
    return convolution_matrix(k, dt) @ field


def integrate_prefix(rate, start, dt):
    """Running trapezoid integral of ``rate`` shifted by ``start``."""
    rate = np.asarray(rate, dtype=float)
    out = np.empty_like(rate)
    out[0] = 0.0
    np.cumsum(0.5 * dt * (rate[1:] + rate[:-1]), out=out[1:])
    return out + start


def l2_time_norm(series, dt, upto=None):
    """sqrt of the trapezoid integral of series^2 over [0, t_upto]."""
    s = np.asarray(series, dtype=float)
    if upto is not None:
        s = s[: upto + 1]
    sq = s * s
    return np.sqrt(dt * (sq.sum() - 0.5 * (sq[0] + sq[-1])))


def check_young(k, g, dt):
    """Margin of the convolution bound: sqrt(tau)*|k|*|g| - |k * g|.

    All norms are discrete L2 over the full span [0, tau].  Nonnegative up to
    quadrature slack for any pair of series.
    """
    k = np.asarray(k, dtype=float)
    tau = (k.shape[0] - 1) * dt
    bound = np.sqrt(tau) * l2_time_norm(k, dt) * l2_time_norm(g, dt)
    return bound - l2_time_norm(conv(k, g, dt), dt)


def check_zero_start(w, dt):
    """Margins of the two zero-start bounds, with discrete slack included.

    For w(0) = 0 the continuous inequalities are sup|w| <= sqrt(tau)*|w_t|
    and |w| <= tau*|w_t| (L2 norms in time).  Returns both margins with a
    slack of 10*dt*|w_t| added, so nonnegative values are the expected
    outcome for any discretely sampled w.
    """
    w = np.asarray(w, dtype=float)
    tau = (w.shape[0] - 1) * dt
    wt = time_derivative(w, dt)
    nwt = l2_time_norm(wt, dt)
    slack = 10.0 * dt * nwt
    sup_margin = np.sqrt(tau) * nwt + slack - np.max(np.abs(w))
    l2_margin = tau * nwt + slack - l2_time_norm(w, dt)
    return sup_margin, l2_margin


def time_derivative(values, dt):
    """Second-order time derivative along axis 0 (centered, one-sided ends)."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dt)
    return out

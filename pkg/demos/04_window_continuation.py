"""Window continuation and adaptive halving.

The fixed-point iteration is only guaranteed to contract on a short
window; the solved span then shifts forward, with the memory of the past
entering through lagged convolution tails.  This script reconstructs the
same kernel with one window and with forced short windows (identical
answers), then shows a weakly paired sensor/data combination where the
full-horizon window genuinely fails to contract and the adaptive halving
rescues the march.

Run from the repository root:  python3 demos/04_window_continuation.py
"""

import numpy as np

from memkernel import (
    Grid,
    InverseOptions,
    Kernel,
    ProblemData,
    l2_time_norm,
    parse,
    reconstruct,
    solve_direct,
)

PI = repr(np.pi)


def make_pd(u0_expr, nx=100, nt=200):
    grid = Grid(ell=1.0, T=1.0, nx=nx, nt=nt)
    return ProblemData(
        beta=0.1, p=1.0, q=1.0, ell=1.0, T=1.0,
        u0=parse(u0_expr, "x"), u1=parse("0*x", "x"),
        phi=parse(f"sin({PI}*x)^3", "x"), grid=grid,
    )


pd = make_pd(f"sin({2 * np.pi}*x)")
k_true = Kernel.from_expression(parse("0.4*cos(2*t)", "t"), pd.grid.t)
f = solve_direct(pd, k_true).f
kt = 0.4 * np.cos(2 * pd.grid.t)

print("Same data, different window widths:")
for steps, label in ((None, "single window"), (50, "4 windows"), (25, "8 windows")):
    rec = reconstruct(pd, f, InverseOptions(window_steps=steps))
    rel = l2_time_norm(rec.kernel.k - kt, pd.grid.dt) / l2_time_norm(kt, pd.grid.dt)
    iters = [w.iterations for w in rec.windows]
    print(f"   {label:14s} rel err {rel:.2e}   iterations per window {iters}")

print("\nWeak sensor/data pairing (near-degenerate coupling integral):")
pd2 = make_pd(f"sin({PI}*x)+0.01*sin({2 * np.pi}*x)", nx=80, nt=160)
k2 = Kernel.from_expression(parse("0.4*cos(2*t)", "t"), pd2.grid.t)
f2 = solve_direct(pd2, k2).f
rec2 = reconstruct(pd2, f2, InverseOptions(force=True))
kt2 = 0.4 * np.cos(2 * pd2.grid.t)
rel2 = l2_time_norm(rec2.kernel.k - kt2, pd2.grid.dt) / l2_time_norm(kt2, pd2.grid.dt)
print(f"   windows (width, halvings): {[(w.steps, w.halvings) for w in rec2.windows]}")
print(f"   rel err {rel2:.2e} -- the full-width window does not contract; "
      "halving recovers")

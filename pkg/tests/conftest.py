import numpy as np
import pytest

from memkernel.direct import ProblemData
from memkernel.expressions import parse
from memkernel.grids import Grid


def make_problem(nx=60, nt=120, beta=0.1, p=1.0, q=1.0, ell=1.0, T=1.0,
                 u0="x^2*(1-x)*(2-x)", u1="0.5*sin(3.141592653589793*x)^2*(1-x)",
                 phi="x^3*(1-x)^3"):
    """Default twin-style problem: asymmetric u0, u1 vanishing at both ends."""
    grid = Grid(ell=ell, T=T, nx=nx, nt=nt)
    return ProblemData(
        beta=beta, p=p, q=q, ell=ell, T=T,
        u0=parse(u0, "x"), u1=parse(u1, "x"), phi=parse(phi, "x"),
        grid=grid,
    )


@pytest.fixture
def small_problem():
    return make_problem()


def l2_rel_err(a, b, dt):
    from memkernel.timeconv import l2_time_norm

    denom = l2_time_norm(b, dt)
    num = l2_time_norm(np.asarray(a) - np.asarray(b), dt)
    return num / denom if denom > 0 else num

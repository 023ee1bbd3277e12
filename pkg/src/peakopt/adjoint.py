"""Backward adjoint solves.

`adjoint_solve` integrates the adjoint of a given state trajectory: backward
Crank-Nicolson from the terminal value on (1, 2), a jump by the gradient of
the intermediate cost at s = 1, then backward again on (0, 1).  Each step is
a linear solve because the Hamiltonian state-gradient is affine in the
adjoint.  `k_star_apply` solves the generic backward system with arbitrary
jump/terminal/source data; `adjoint_solve` is its specialization to the
cost-derived data, which the tests cross-check.
"""

import numpy as np

from .linearized import LinearizedDynamics
from .timegrid import SplitGridValues


class AdjointTrajectory(SplitGridValues):
    """Adjoint values on the grid, stored twice at the interface node.

    `lower[-1]` is the left limit p(1-), `upper[0]` the right limit p(1+);
    they differ by the gradient of the intermediate cost.
    """


def adjoint_solve(problem, u, tp, y, lin=None):
    """Solve the adjoint system for the trajectory y of (u, tau).

    Backward Crank-Nicolson from the terminal value on (1, 2), transmission
    jump by the intermediate-cost gradient, then backward on (0, 1).  The
    running-cost state gradient enters as the source with the one-sided
    clock speed; the implicit part of the Hamiltonian gradient sits in the
    step matrices.
    """
    grid = y.grid
    mid = grid.mid
    if lin is None:
        lin = LinearizedDynamics(problem, u, tp, y)
    ell_y, _ = problem.nodewise(problem.running_cost_grads, y.values, u.values)
    ell_y = np.asarray(ell_y, dtype=float)
    w = SplitGridValues(
        grid, tp.speed_lower * ell_y[: mid + 1], tp.speed_upper * ell_y[mid:]
    )
    a = np.asarray(problem.phi1_grad(y.values[mid]), dtype=float)
    if problem.has_phi2:
        b = np.asarray(problem.phi2_grad(y.values[-1]), dtype=float)
    else:
        b = None
    q = lin.adjoint_sweep(a, b, w)
    return AdjointTrajectory(grid, q.lower, q.upper)


def k_star_apply(problem, u, tp, y, a, b, w, lin=None):
    """Generic backward solve: jump a at s = 1, terminal value b, source w.

    `w` is a SplitGridValues (one-sided values at the interface).  Linear in
    (a, b, w).  Returns an AdjointTrajectory.
    """
    if lin is None:
        lin = LinearizedDynamics(problem, u, tp, y)
    q = lin.adjoint_sweep(a, b, w)
    return AdjointTrajectory(q.grid, q.lower, q.upper)

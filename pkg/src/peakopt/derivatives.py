"""Reduced gradient and matrix-free Hessian-vector products.

The reduced objective J(u, tau) eliminates the state through the forward
solve.  Its gradient is assembled from one forward and one adjoint solve;
Hessian actions need one tangent solve, one generic backward solve, and
pointwise second-derivative contractions — no operator is ever assembled.
"""

from dataclasses import dataclass

import numpy as np

from .adjoint import AdjointTrajectory, adjoint_solve
from .forward import ControlGrid, Trajectory, evaluate_objective, forward_solve
from .linearized import LinearizedDynamics
from .timegrid import SplitGridValues


@dataclass
class ReducedGradient:
    """Riesz representative of DJ: a control-space grid function and a scalar."""

    g_u: ControlGrid
    g_tau: float


@dataclass
class ReducedHVPResult:
    h_u: ControlGrid
    h_tau: float


@dataclass
class GradientResult:
    grad: ReducedGradient
    y: Trajectory
    p: AdjointTrajectory
    objective: float
    lin: object = None   # linearization factors, reusable for Hessian actions


def triple_norm(problem, grad):
    """Squared weighted norm of a reduced gradient.

    Trapezoidal quadrature of the pointwise control-space squared norm of
    g_u plus g_tau**2.  This squared quantity is the phase-switch monitor of
    the optimizer.
    """
    grid = grad.g_u.grid
    w = grid.trapz_weights()
    sq = problem.control_inner(grad.g_u.values, grad.g_u.values)
    return float(w @ np.atleast_1d(sq)) + float(grad.g_tau) ** 2


def _halves(arr, mid):
    return arr[: mid + 1], arr[mid:]


def _merge_mid_average(lower, upper, mid):
    """Single-valued nodal array from one-sided halves, averaging at s = 1."""
    out = np.empty((lower.shape[0] + upper.shape[0] - 1,) + lower.shape[1:])
    out[:mid] = lower[:-1]
    out[mid] = 0.5 * (lower[-1] + upper[0])
    out[mid + 1 :] = upper[1:]
    return out


def gradient(problem, u, tp):
    """Reduced gradient of J at (u, tau), plus the state/adjoint pair and J.

    g_u at a node is speed * H_u there (Riesz-represented in the control
    space); at s = 1 the mean of the two one-sided values is used.  g_tau is
    the split trapezoidal quadrature of (d speed / d tau) * H.
    """
    y = forward_solve(problem, u, tp)
    lin = LinearizedDynamics(problem, u, tp, y)
    p = adjoint_solve(problem, u, tp, y, lin=lin)
    objective = evaluate_objective(problem, u, tp, y)

    grid = y.grid
    mid = grid.mid
    y_lo, y_up = _halves(y.values, mid)
    u_lo, u_up = _halves(u.values, mid)

    f_nodes = np.asarray(
        problem.nodewise(problem.f_eval, y.values, u.values), dtype=float
    )
    _, ell_u = problem.nodewise(problem.running_cost_grads, y.values, u.values)
    ell_u = np.asarray(ell_u, dtype=float)
    ell = np.asarray(
        problem.nodewise(problem.running_cost, y.values, u.values), dtype=float
    ).reshape(-1)

    hu_lo = ell_u[: mid + 1] + np.asarray(
        problem.nodewise(problem.f_jac_u_adjoint_apply, y_lo, u_lo, p.lower)
    )
    hu_up = ell_u[mid:] + np.asarray(
        problem.nodewise(problem.f_jac_u_adjoint_apply, y_up, u_up, p.upper)
    )
    g_u = _merge_mid_average(tp.speed_lower * hu_lo, tp.speed_upper * hu_up, mid)

    h_lo = ell[: mid + 1] + problem.state_inner(p.lower, f_nodes[: mid + 1])
    h_up = ell[mid:] + problem.state_inner(p.upper, f_nodes[mid:])
    g_tau = float(grid.integrate_half(h_lo) - grid.integrate_half(h_up))

    return GradientResult(
        ReducedGradient(ControlGrid(grid, g_u), g_tau), y, p, objective, lin=lin
    )


class HessianOperator:
    """Matrix-free reduced Hessian at a frozen point (u, tau, y, p).

    Builds the linearization factors once; every `apply` then costs one
    tangent sweep, one backward sweep, and pointwise contractions.
    """

    def __init__(self, problem, u, tp, y, p, lin=None):
        self.problem = problem
        self.u = u
        self.tp = tp
        self.y = y
        self.p = p
        self.lin = lin if lin is not None else LinearizedDynamics(problem, u, tp, y)
        grid = y.grid
        self.grid = grid
        mid = grid.mid
        self.mid = mid
        self.y_lo, self.y_up = _halves(y.values, mid)
        self.u_lo, self.u_up = _halves(u.values, mid)
        self.f_nodes = np.asarray(
            problem.nodewise(problem.f_eval, y.values, u.values), dtype=float
        )
        ell_y, ell_u = problem.nodewise(
            problem.running_cost_grads, y.values, u.values
        )
        ell_y = np.asarray(ell_y, dtype=float)
        ell_u = np.asarray(ell_u, dtype=float)
        self.hy_lo = ell_y[: mid + 1] + np.asarray(
            problem.nodewise(problem.f_jac_y_adjoint_apply, self.y_lo, self.u_lo, p.lower)
        )
        self.hy_up = ell_y[mid:] + np.asarray(
            problem.nodewise(problem.f_jac_y_adjoint_apply, self.y_up, self.u_up, p.upper)
        )
        self.hu_lo = ell_u[: mid + 1] + np.asarray(
            problem.nodewise(problem.f_jac_u_adjoint_apply, self.y_lo, self.u_lo, p.lower)
        )
        self.hu_up = ell_u[mid:] + np.asarray(
            problem.nodewise(problem.f_jac_u_adjoint_apply, self.y_up, self.u_up, p.upper)
        )

    def apply(self, du_values, dtheta):
        """Hessian action on a direction (du, dtheta)."""
        problem, grid, mid, tp = self.problem, self.grid, self.mid, self.tp
        sp_lo, sp_up = tp.speed_lower, tp.speed_upper
        du_lo, du_up = _halves(du_values, mid)

        # combined tangent solve
        fu_du = np.asarray(
            problem.nodewise(
                problem.f_jac_u_apply, self.y.values, self.u.values, du_values
            ),
            dtype=float,
        )
        xi = SplitGridValues(
            grid,
            sp_lo * fu_du[: mid + 1] + dtheta * self.f_nodes[: mid + 1],
            sp_up * fu_du[mid:] - dtheta * self.f_nodes[mid:],
        )
        z = self.lin.tangent_sweep(xi)
        z_lo, z_up = _halves(z, mid)

        # pointwise second-derivative contractions of the Hamiltonian
        ry_lo, ru_lo = problem.nodewise(
            problem.f_hess_apply, self.y_lo, self.u_lo, self.p.lower, z_lo, du_lo
        )
        ry_up, ru_up = problem.nodewise(
            problem.f_hess_apply, self.y_up, self.u_up, self.p.upper, z_up, du_up
        )

        a = np.asarray(problem.phi1_hess_apply(self.y.values[mid], z[mid]), dtype=float)
        if problem.has_phi2:
            b = np.asarray(problem.phi2_hess_apply(self.y.values[-1], z[-1]), dtype=float)
        else:
            b = None

        w = SplitGridValues(
            grid,
            sp_lo * np.asarray(ry_lo) + dtheta * self.hy_lo,
            sp_up * np.asarray(ry_up) - dtheta * self.hy_up,
        )
        # exact-transpose backward solve keeps the Hessian form symmetric to
        # round-off; it discretizes the same system as the public backward
        # solve and differs from it by O(h^2)
        q = self.lin.transpose_sweep(a, b, w)

        fuq_lo = np.asarray(
            problem.nodewise(problem.f_jac_u_adjoint_apply, self.y_lo, self.u_lo, q.lower)
        )
        fuq_up = np.asarray(
            problem.nodewise(problem.f_jac_u_adjoint_apply, self.y_up, self.u_up, q.upper)
        )
        hu_full_lo = sp_lo * (np.asarray(ru_lo) + fuq_lo) + dtheta * self.hu_lo
        hu_full_up = sp_up * (np.asarray(ru_up) + fuq_up) - dtheta * self.hu_up
        h_u = _merge_mid_average(hu_full_lo, hu_full_up, mid)

        lo_integrand = (
            problem.state_inner(self.hy_lo, z_lo)
            + problem.control_inner(self.hu_lo, du_lo)
            + problem.state_inner(self.f_nodes[: mid + 1], q.lower)
        )
        up_integrand = (
            problem.state_inner(self.hy_up, z_up)
            + problem.control_inner(self.hu_up, du_up)
            + problem.state_inner(self.f_nodes[mid:], q.upper)
        )
        h_tau = float(
            grid.integrate_half(lo_integrand) - grid.integrate_half(up_integrand)
        )
        return h_u, h_tau


def hvp(problem, u, tp, y, p, du, dtheta):
    """One-shot Hessian-vector product; builds a fresh workspace.

    For repeated products at the same point construct a HessianOperator.
    """
    op = HessianOperator(problem, u, tp, y, p)
    h_u, h_tau = op.apply(du.values, dtheta)
    return ReducedHVPResult(ControlGrid(u.grid, h_u), h_tau)

"""Crank-Nicolson integration of the reparameterized state equation.

On [0, 2] the state solves dy/ds = speed(s) * f(y, u) with the piecewise
constant clock speed of the time map.  Because s = 1 is a grid node, every
step lies inside one half interval and uses that half's one-sided speed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BlowUpError, StepFailureError
from .problem import mass_matvec
from .timegrid import SGrid


@dataclass
class ControlGrid:
    """Control values on the s-grid, single-valued at every node."""

    grid: SGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_steps + 1,)
        if self.values.ndim != 2 or self.values.shape[0] != expected[0]:
            raise ValueError(
                f"control values must be (n_steps + 1, m), got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("control values must be finite")

    @classmethod
    def zeros(cls, grid, control_dim):
        return cls(grid, np.zeros((grid.n_steps + 1, control_dim)))

    def copy(self):
        return ControlGrid(self.grid, self.values.copy())


@dataclass
class Trajectory:
    """State coefficients on the s-grid; values[0] equals y0 exactly."""

    grid: SGrid
    values: np.ndarray


def _step_matrix_solver(problem, c, y, u):
    """Return a solver for (M - c * Fy(y, u)) x = b in weak form."""
    if problem.f_jac_y_matrix is not None:
        fy = problem.f_jac_y_matrix(y, u)
    else:
        # assemble columns through the Jacobian action; fine for small n
        n = problem.state_dim
        eye = np.eye(n)
        cols = [problem.f_jac_y_apply(y, u, eye[:, j]) for j in range(n)]
        fy = mass_matvec(problem.mass_state, np.column_stack(cols).T).T \
            if problem.mass_state is not None else np.column_stack(cols)
    if sp.issparse(fy):
        mass = problem.mass_state
        mat = (mass - c * fy).tocsc()
        lu = spla.splu(mat)
        return lu.solve
    mass = problem.mass_state
    m_dense = np.eye(problem.state_dim) if mass is None else (
        mass.toarray() if sp.issparse(mass) else np.asarray(mass, dtype=float)
    )
    mat = m_dense - c * np.asarray(fy, dtype=float)
    return lambda b: np.linalg.solve(mat, b)


def forward_solve(problem, u, tp, newton_tol=1e-12, max_newton=25):
    """Integrate the state forward with Crank-Nicolson.

    Each step solves the nonlinear residual

        y_new - y_old - (h * speed / 2) * (f(y_old, u_old) + f(y_new, u_new)) = 0

    by Newton iteration (absolute residual tolerance `newton_tol`, explicit
    Euler predictor).  Raises StepFailureError on inner non-convergence and
    BlowUpError on non-finite states.
    """
    grid = u.grid
    n_steps, h = grid.n_steps, grid.h
    speeds = grid.interval_speeds(tp)
    mass = problem.mass_state
    # dense fast path: identity mass and dense assembled Jacobians
    dense = mass is None and problem.f_jac_y_matrix is not None
    if dense:
        eye = np.eye(problem.state_dim)
    f_evaluate = problem.f_eval
    jac = problem.f_jac_y_matrix
    uv = u.values

    y = np.empty((n_steps + 1, problem.state_dim))
    y[0] = problem.y0
    f_old = np.asarray(f_evaluate(y[0], uv[0]), dtype=float)
    if not np.all(np.isfinite(f_old)):
        raise BlowUpError(0, "non-finite dynamics at the initial state")

    for i in range(n_steps):
        c = 0.5 * h * speeds[i]
        u_new = uv[i + 1]
        y_old = y[i]
        y_new = y_old + 2.0 * c * f_old  # explicit Euler predictor
        converged = False
        residual_norm = np.inf
        # tolerance scales with the state magnitude: for large-amplitude
        # states an absolute 1e-12 would sit below the round-off floor
        step_tol = newton_tol * max(1.0, abs(y_old).max())
        for _ in range(max_newton):
            f_new = np.asarray(f_evaluate(y_new, u_new), dtype=float)
            residual = y_new - y_old - c * (f_old + f_new)
            residual_norm = abs(residual).max()
            if residual_norm <= step_tol:
                converged = True
                break
            if not np.isfinite(residual_norm):
                raise BlowUpError(i + 1)
            if dense:
                fy = jac(y_new, u_new)
                if fy.ndim == 3:  # batched-capable callbacks add an axis
                    fy = fy.reshape(fy.shape[-2:])
                if fy.shape[0] == 2:
                    m00 = 1.0 - c * fy[0, 0]
                    m01 = -c * fy[0, 1]
                    m10 = -c * fy[1, 0]
                    m11 = 1.0 - c * fy[1, 1]
                    det = m00 * m11 - m01 * m10
                    r0, r1 = residual
                    y_new = y_new - np.array(
                        [(m11 * r0 - m01 * r1) / det, (m00 * r1 - m10 * r0) / det]
                    )
                elif fy.shape[0] == 1:
                    y_new = y_new - residual / (1.0 - c * fy[0, 0])
                else:
                    y_new = y_new - np.linalg.solve(eye - c * fy, residual)
            else:
                solve = _step_matrix_solver(problem, c, y_new, u_new)
                y_new = y_new + solve(-mass_matvec(mass, residual))
        if not converged:
            raise StepFailureError(i + 1, residual_norm)
        if not np.all(np.isfinite(y_new)):
            raise BlowUpError(i + 1)
        y[i + 1] = y_new
        f_old = f_new

    return Trajectory(grid, y)


def evaluate_objective(problem, u, tp, y):
    """Objective of the reparameterized problem.

    Split trapezoidal quadrature of speed * l(y, u) (the clock speed is
    one-sided at s = 1, the shared node value of l is not), plus the
    intermediate cost at s = 1 and the terminal cost at s = 2.
    """
    grid = y.grid
    mid = grid.mid
    ell = problem.nodewise(problem.running_cost, y.values, u.values)
    ell = np.asarray(ell, dtype=float).reshape(-1)
    value = tp.speed_lower * grid.integrate_half(ell[: mid + 1])
    value += tp.speed_upper * grid.integrate_half(ell[mid:])
    value += float(problem.phi1_eval(y.values[mid]))
    if problem.has_phi2:
        value += float(problem.phi2_eval(y.values[-1]))
    return value

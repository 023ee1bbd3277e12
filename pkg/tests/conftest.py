import numpy as np
import pytest

from peakopt.forward import ControlGrid
from peakopt.models import make_lotka_volterra, make_pendulum, make_scalar_linear
from peakopt.timegrid import SGrid, TauParameter


@pytest.fixture
def linear_problem():
    return make_scalar_linear()


@pytest.fixture
def lv_problem():
    return make_lotka_volterra()


@pytest.fixture
def pendulum_problem():
    return make_pendulum()


def smooth_control(grid, width, seed=0, amplitude=0.1):
    """Deterministic smooth control grid used across derivative tests."""
    rng = np.random.default_rng(seed)
    s = grid.nodes
    cols = []
    for j in range(width):
        c = rng.standard_normal(3)
        cols.append(c[0] * np.sin(np.pi * s) + c[1] * np.cos(0.5 * np.pi * s) + 0.3 * c[2])
    return ControlGrid(grid, amplitude * np.stack(cols, axis=-1))


def constant_problem(value=0.0, n=1, m=1, alpha=1.0, phi1_weight=None):
    """Inline model with f identically constant; used by trivial-case tests."""
    from peakopt.problem import ProblemSpec

    const = np.full(n, float(value))
    w1 = np.zeros(n) if phi1_weight is None else np.asarray(phi1_weight, float)

    return ProblemSpec(
        state_dim=n,
        control_dim=m,
        horizon=2.0,
        y0=np.zeros(n),
        f_eval=lambda y, u: np.broadcast_to(const, y.shape).copy(),
        f_jac_y_apply=lambda y, u, z: np.zeros_like(z),
        f_jac_y_adjoint_apply=lambda y, u, q: np.zeros_like(q),
        f_jac_u_apply=lambda y, u, v: np.zeros(v.shape[:-1] + (n,)),
        f_jac_u_adjoint_apply=lambda y, u, q: np.zeros(q.shape[:-1] + (m,)),
        f_hess_apply=lambda y, u, p, z, v: (np.zeros_like(z), -alpha * v),
        running_cost=lambda y, u: -0.5 * alpha * np.einsum("...i,...i->...", u, u),
        running_cost_grads=lambda y, u: (np.zeros_like(y), -alpha * u),
        phi1_eval=lambda y: float(w1 @ y),
        phi1_grad=lambda y: w1.copy(),
        phi1_hess_apply=lambda y, z: np.zeros_like(z),
        f_jac_y_matrix=lambda y, u: np.zeros((n, n)),
        vectorized=True,
        name="constant-test",
    )

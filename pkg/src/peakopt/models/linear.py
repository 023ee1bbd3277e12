"""Scalar linear model used for verification and convergence studies.

    dy/dt = a*y + b*u + offset,   l(y, u) = -(alpha/2) u^2

The intermediate cost is either linear (weight * y) or a concave quadratic
-(weight/2) (y - target)^2; the latter turns the reduced problem into an
exactly solvable quadratic in tau, which the optimizer tests rely on.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..problem import ProblemSpec


@dataclass(frozen=True)
class LinearTestParams:
    a: float = -1.0
    b: float = 1.0
    offset: float = 0.0
    alpha: float = 1.0
    phi1_weight: float = 1.0
    phi1_quadratic: Optional[Tuple[float, float]] = None  # (weight, target)
    phi2_quadratic: Optional[Tuple[float, float]] = None


def make_scalar_linear(params=None, horizon=2.0, y0=1.0):
    p = params or LinearTestParams()

    def f_eval(y, u):
        return p.a * y + p.b * u + p.offset

    def f_jac_y_apply(y, u, z):
        return p.a * z

    def f_jac_u_apply(y, u, v):
        return p.b * v

    def f_hess_apply(y, u, pad, z, v):
        return np.zeros_like(z), -p.alpha * v

    def running_cost(y, u):
        return -0.5 * p.alpha * np.einsum("...i,...i->...", u, u)

    def running_cost_grads(y, u):
        return np.zeros_like(y), -p.alpha * u

    if p.phi1_quadratic is not None:
        w1, target = p.phi1_quadratic

        def phi1_eval(y):
            return -0.5 * w1 * (y[0] - target) ** 2

        def phi1_grad(y):
            return np.array([-w1 * (y[0] - target)])

        def phi1_hess_apply(y, z):
            return -w1 * z
    else:

        def phi1_eval(y):
            return p.phi1_weight * y[0]

        def phi1_grad(y):
            return np.array([p.phi1_weight])

        def phi1_hess_apply(y, z):
            return np.zeros_like(z)

    phi2_eval = phi2_grad = phi2_hess = None
    if p.phi2_quadratic is not None:
        w2, target2 = p.phi2_quadratic

        def phi2_eval(y):
            return -0.5 * w2 * (y[0] - target2) ** 2

        def phi2_grad(y):
            return np.array([-w2 * (y[0] - target2)])

        def phi2_hess(y, z):
            return -w2 * z

    return ProblemSpec(
        state_dim=1,
        control_dim=1,
        horizon=horizon,
        y0=np.array([float(y0)]),
        f_eval=f_eval,
        f_jac_y_apply=f_jac_y_apply,
        f_jac_y_adjoint_apply=f_jac_y_apply,   # scalar: self-adjoint structure
        f_jac_u_apply=f_jac_u_apply,
        f_jac_u_adjoint_apply=lambda y, u, q: p.b * q,
        f_hess_apply=f_hess_apply,
        running_cost=running_cost,
        running_cost_grads=running_cost_grads,
        phi1_eval=phi1_eval,
        phi1_grad=phi1_grad,
        phi1_hess_apply=phi1_hess_apply,
        phi2_eval=phi2_eval,
        phi2_grad=phi2_grad,
        phi2_hess_apply=phi2_hess,
        f_jac_y_matrix=lambda y, u: np.full(np.shape(y[..., 0]) + (1, 1), p.a),
        vectorized=True,
        name="linear",
    )

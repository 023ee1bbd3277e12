"""Controlled prey-predator system with saturating densities.

    dy1/dt = (y1*(a - b*y2) + u1*y1) * (1 - c1*y1)
    dy2/dt = (y2*(q*y1 - r) + u2*y2) * (1 - c2*y2)

y1, y2 are prey and predator densities; the (1 - c*y) factors saturate each
density at 1/c; u1, u2 control the birth/death rates bilinearly.  The
predator density at the free time is maximized; the optional terminal term
-beta * log(y1/y_des)^2 penalizes prey extinction at the end of the run.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..problem import ProblemSpec


@dataclass(frozen=True)
class LotkaVolterraParams:
    a: float = 0.3
    b: float = 0.1
    r: float = 0.2
    q: float = 0.1
    c1: float = 0.05
    c2: float = 0.05
    alpha: float = 10.0
    terminal: Optional[Tuple[float, float]] = None  # (beta, y_des)


def make_lotka_volterra(params=None, horizon=30.0, y0=(1.0, 2.0)):
    p = params or LotkaVolterraParams()
    a, b, r, q, c1, c2, alpha = p.a, p.b, p.r, p.q, p.c1, p.c2, p.alpha

    def f_eval(y, u):
        if y.ndim == 1:  # scalar fast path: the time stepper's hot loop
            y1, y2 = y
            f1 = (y1 * (a - b * y2) + u[0] * y1) * (1.0 - c1 * y1)
            f2 = (y2 * (q * y1 - r) + u[1] * y2) * (1.0 - c2 * y2)
            return np.array([f1, f2])
        y1, y2 = y[..., 0], y[..., 1]
        f1 = (y1 * (a - b * y2) + u[..., 0] * y1) * (1.0 - c1 * y1)
        f2 = (y2 * (q * y1 - r) + u[..., 1] * y2) * (1.0 - c2 * y2)
        return np.stack([f1, f2], axis=-1)

    def _jac_entries(y, u):
        y1, y2 = y[..., 0], y[..., 1]
        j11 = (a - b * y2 + u[..., 0]) * (1.0 - 2.0 * c1 * y1)
        j12 = -b * y1 * (1.0 - c1 * y1)
        j21 = q * y2 * (1.0 - c2 * y2)
        j22 = (q * y1 - r + u[..., 1]) * (1.0 - 2.0 * c2 * y2)
        return j11, j12, j21, j22

    def f_jac_y_apply(y, u, z):
        j11, j12, j21, j22 = _jac_entries(y, u)
        return np.stack(
            [j11 * z[..., 0] + j12 * z[..., 1], j21 * z[..., 0] + j22 * z[..., 1]],
            axis=-1,
        )

    def f_jac_y_adjoint_apply(y, u, w):
        j11, j12, j21, j22 = _jac_entries(y, u)
        return np.stack(
            [j11 * w[..., 0] + j21 * w[..., 1], j12 * w[..., 0] + j22 * w[..., 1]],
            axis=-1,
        )

    def _control_gains(y):
        # df1/du1 and df2/du2; the control enters each equation bilinearly
        return y[..., 0] * (1.0 - c1 * y[..., 0]), y[..., 1] * (1.0 - c2 * y[..., 1])

    def f_jac_u_apply(y, u, v):
        g1, g2 = _control_gains(y)
        return np.stack([g1 * v[..., 0], g2 * v[..., 1]], axis=-1)

    def f_jac_u_adjoint_apply(y, u, w):
        g1, g2 = _control_gains(y)
        return np.stack([g1 * w[..., 0], g2 * w[..., 1]], axis=-1)

    def f_hess_apply(y, u, pad, z, v):
        y1, y2 = y[..., 0], y[..., 1]
        p1, p2 = pad[..., 0], pad[..., 1]
        z1, z2 = z[..., 0], z[..., 1]
        # second derivatives of f contracted against the adjoint
        d11_1 = -2.0 * c1 * (a - b * y2 + u[..., 0])      # d2f1/dy1dy1
        d12_1 = -b * (1.0 - 2.0 * c1 * y1)                # d2f1/dy1dy2
        d22_2 = -2.0 * c2 * (q * y1 - r + u[..., 1])      # d2f2/dy2dy2
        d12_2 = q * (1.0 - 2.0 * c2 * y2)                 # d2f2/dy1dy2
        du1_1 = 1.0 - 2.0 * c1 * y1                       # d2f1/dy1du1
        du2_2 = 1.0 - 2.0 * c2 * y2                       # d2f2/dy2du2
        hy1 = p1 * (d11_1 * z1 + d12_1 * z2 + du1_1 * v[..., 0]) + p2 * (d12_2 * z2)
        hy2 = p1 * (d12_1 * z1) + p2 * (d12_2 * z1 + d22_2 * z2 + du2_2 * v[..., 1])
        hu1 = p1 * du1_1 * z1 - alpha * v[..., 0]
        hu2 = p2 * du2_2 * z2 - alpha * v[..., 1]
        return np.stack([hy1, hy2], axis=-1), np.stack([hu1, hu2], axis=-1)

    def running_cost(y, u):
        return -0.5 * alpha * np.einsum("...i,...i->...", u, u)

    def running_cost_grads(y, u):
        return np.zeros_like(y), -alpha * u

    def phi1_eval(y):
        return y[1]

    def phi1_grad(y):
        return np.array([0.0, 1.0])

    def phi1_hess_apply(y, z):
        return np.zeros_like(z)

    phi2_eval = phi2_grad = phi2_hess = None
    if p.terminal is not None:
        beta, y_des = p.terminal

        def phi2_eval(y):
            return -beta * np.log(np.abs(y[0] / y_des)) ** 2

        def phi2_grad(y):
            return np.array([-2.0 * beta * np.log(np.abs(y[0] / y_des)) / y[0], 0.0])

        def phi2_hess(y, z):
            h11 = -2.0 * beta * (1.0 - np.log(np.abs(y[0] / y_des))) / y[0] ** 2
            return np.array([h11 * z[0], 0.0])

    def f_jac_y_matrix(y, u):
        if y.ndim == 1:
            y1, y2 = y
            return np.array([
                [(a - b * y2 + u[0]) * (1.0 - 2.0 * c1 * y1), -b * y1 * (1.0 - c1 * y1)],
                [q * y2 * (1.0 - c2 * y2), (q * y1 - r + u[1]) * (1.0 - 2.0 * c2 * y2)],
            ])
        j11, j12, j21, j22 = _jac_entries(y, u)
        out = np.empty(np.shape(j11) + (2, 2))
        out[..., 0, 0] = j11
        out[..., 0, 1] = j12
        out[..., 1, 0] = j21
        out[..., 1, 1] = j22
        return out

    return ProblemSpec(
        state_dim=2,
        control_dim=2,
        horizon=horizon,
        y0=np.asarray(y0, dtype=float),
        f_eval=f_eval,
        f_jac_y_apply=f_jac_y_apply,
        f_jac_y_adjoint_apply=f_jac_y_adjoint_apply,
        f_jac_u_apply=f_jac_u_apply,
        f_jac_u_adjoint_apply=f_jac_u_adjoint_apply,
        f_hess_apply=f_hess_apply,
        running_cost=running_cost,
        running_cost_grads=running_cost_grads,
        phi1_eval=phi1_eval,
        phi1_grad=phi1_grad,
        phi1_hess_apply=phi1_hess_apply,
        phi2_eval=phi2_eval,
        phi2_grad=phi2_grad,
        phi2_hess_apply=phi2_hess,
        f_jac_y_matrix=f_jac_y_matrix,
        vectorized=True,
        name="lotka-volterra",
        metadata={"alpha": alpha, "c": (c1, c2)},
    )

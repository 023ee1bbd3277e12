"""Linearized (tangent) solves around a frozen forward trajectory."""

from dataclasses import dataclass

import numpy as np

from .linearized import LinearizedDynamics
from .timegrid import SGrid, SplitGridValues


@dataclass
class TangentTrajectory:
    """Solution of a tangent system; starts from zero by construction."""

    grid: SGrid
    values: np.ndarray
    origin: str = "combined"   # control-direction | tau-direction | combined


def k_apply(problem, u, tp, y, xi, lin=None):
    """Solve dz/ds = speed * f_y(y, u) z + xi with z(0) = 0.

    `xi` is a SplitGridValues source (one-sided values at s = 1).
    """
    if lin is None:
        lin = LinearizedDynamics(problem, u, tp, y)
    z = lin.tangent_sweep(xi)
    return TangentTrajectory(y.grid, z, origin="combined")


def control_source(problem, u, tp, y, v):
    """Tangent source for a control direction: speed * f_u(y, u) v."""
    fu_v = problem.nodewise(problem.f_jac_u_apply, y.values, u.values, v.values)
    fu_v = np.asarray(fu_v, dtype=float)
    mid = y.grid.mid
    return SplitGridValues(
        y.grid, tp.speed_lower * fu_v[: mid + 1], tp.speed_upper * fu_v[mid:]
    )


def tau_source(problem, u, tp, y, f_nodes=None):
    """Tangent source for the tau direction: (d speed / d tau) * f(y, u)."""
    if f_nodes is None:
        f_nodes = np.asarray(
            problem.nodewise(problem.f_eval, y.values, u.values), dtype=float
        )
    mid = y.grid.mid
    return SplitGridValues(y.grid, f_nodes[: mid + 1], -f_nodes[mid:])


def tangent_u(problem, u, tp, y, v, lin=None):
    """Derivative of the state with respect to the control, in direction v."""
    out = k_apply(problem, u, tp, y, control_source(problem, u, tp, y, v), lin=lin)
    out.origin = "control-direction"
    return out


def tangent_tau(problem, u, tp, y, lin=None):
    """Derivative of the state with respect to the free time tau."""
    out = k_apply(problem, u, tp, y, tau_source(problem, u, tp, y), lin=lin)
    out.origin = "tau-direction"
    return out

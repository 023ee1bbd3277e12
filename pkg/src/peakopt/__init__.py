"""Optimal control with a free interior peak time.

Solves problems of maximizing an intermediate cost of the state at a free
time inside the horizon, together with a running cost and an optional
terminal cost.  The horizon is remapped onto [0, 2] with the peak time at
s = 1; reduced gradients come from an adjoint solve with a jump at the
interface, Hessian actions are matrix-free, and the optimizer combines
Barzilai-Borwein ascent with a Newton-GMRES phase.
"""

__version__ = "0.1.0"

from .adjoint import AdjointTrajectory, adjoint_solve, k_star_apply
from .derivatives import (
    GradientResult,
    HessianOperator,
    ReducedGradient,
    ReducedHVPResult,
    gradient,
    hvp,
    triple_norm,
)
from .errors import (
    AdjointStepError,
    BlowUpError,
    ConfigError,
    ModelEvaluationError,
    SolverError,
    StepFailureError,
)
from .forward import ControlGrid, Trajectory, evaluate_objective, forward_solve
from .linearized import LinearizedDynamics
from .optimizer import (
    SecondOrderResult,
    SolverConfig,
    SolverReport,
    gmres,
    second_order_check,
    solve,
)
from .problem import HamiltonianEval, ProblemSpec, hamiltonian
from .tangent import TangentTrajectory, k_apply, tangent_tau, tangent_u
from .timegrid import (
    SGrid,
    SplitGridValues,
    TauParameter,
    clock_speed,
    clock_speed_dtau,
    physical_time,
    physical_times,
)

__all__ = [name for name in dir() if not name.startswith("_")]

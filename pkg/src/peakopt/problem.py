"""Abstract model contract consumed by the solvers.

A `ProblemSpec` bundles the dynamics f, the running cost, the intermediate
and terminal cost terms, and every first/second derivative action the
reduced-space solver needs.  All quantities live in coefficient space; for
finite-element models the dynamics are the mass-matrix-solved weak form and
gradients are Riesz representatives in the mass-weighted inner products, so
the optimizer behaves mesh-independently.

Derivative callback conventions (state space X = (R^n, M), control space
U = (R^m, M_c); M/M_c identity when `mass_state`/`mass_control` is None):

    f_eval(y, u)                    -> dy/dt in coefficient space
    f_jac_y_apply(y, u, z)          -> f_y(y, u) . z
    f_jac_y_adjoint_apply(y, u, q)  -> adjoint of f_y w.r.t. <.,.>_X
    f_jac_u_apply(y, u, v)          -> f_u(y, u) . v
    f_jac_u_adjoint_apply(y, u, q)  -> adjoint of f_u w.r.t. (X, U) pair
    f_hess_apply(y, u, p, z, v)     -> (Hyy.z + Hyu.v, Huy.z + Huu.v) where
                                       H(y, u, p) = l(y, u) + <p, f(y, u)>_X,
                                       Riesz-represented in (X, U)
    running_cost(y, u)              -> l(y, u)
    running_cost_grads(y, u)        -> (grad_y l, grad_u l), Riesz in (X, U)
    phi1_eval / phi1_grad / phi1_hess_apply     -> intermediate cost at y(1)
    phi2_eval / phi2_grad / phi2_hess_apply     -> terminal cost at y(2); all
                                                   three None means phi2 == 0

Models may set `vectorized=True`, in which case every callback must also
accept stacked inputs of shape (k, n) / (k, m) and broadcast over the
leading axis.  `f_jac_y_matrix(y, u)` (single node) returns the assembled
weak-form Jacobian M f_y — dense for small systems, scipy.sparse for FEM
models — and is used to build the implicit time-step matrices.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ModelEvaluationError


@dataclass
class ProblemSpec:
    state_dim: int
    control_dim: int
    horizon: float
    y0: np.ndarray
    f_eval: Callable
    f_jac_y_apply: Callable
    f_jac_y_adjoint_apply: Callable
    f_jac_u_apply: Callable
    f_jac_u_adjoint_apply: Callable
    f_hess_apply: Callable
    running_cost: Callable
    running_cost_grads: Callable
    phi1_eval: Callable
    phi1_grad: Callable
    phi1_hess_apply: Callable
    phi2_eval: Optional[Callable] = None
    phi2_grad: Optional[Callable] = None
    phi2_hess_apply: Optional[Callable] = None
    mass_state: Optional[object] = None     # SPD weight of <.,.>_X, None = identity
    mass_control: Optional[object] = None   # SPD weight of <.,.>_U, None = identity
    f_jac_y_matrix: Optional[Callable] = None
    vectorized: bool = False
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y0 = np.asarray(self.y0, dtype=float)
        if self.y0.shape != (self.state_dim,):
            raise ModelEvaluationError(
                f"y0 must have shape ({self.state_dim},), got {self.y0.shape}"
            )
        if not np.all(np.isfinite(self.y0)):
            raise ModelEvaluationError("y0 must be finite")
        _check_spd(self.mass_state, self.state_dim, "mass_state")
        _check_spd(self.mass_control, self.control_dim, "mass_control")

    @property
    def has_phi2(self):
        return self.phi2_eval is not None

    # -- weighted inner products ------------------------------------------

    def state_inner(self, a, b):
        """<a, b>_X; for stacked (k, n) inputs returns a (k,) array."""
        return _weighted_inner(self.mass_state, a, b)

    def control_inner(self, a, b):
        """<a, b>_U; for stacked (k, m) inputs returns a (k,) array."""
        return _weighted_inner(self.mass_control, a, b)

    def nodewise(self, fn, *args, out_width=None):
        """Apply a callback over stacked nodal data, honoring `vectorized`."""
        if self.vectorized:
            return fn(*args)
        rows = [fn(*(a[i] for a in args)) for i in range(args[0].shape[0])]
        first = rows[0]
        if isinstance(first, tuple):
            return tuple(np.asarray([r[j] for r in rows]) for j in range(len(first)))
        return np.asarray(rows)


@dataclass
class HamiltonianEval:
    """Value and Riesz gradients of H(y, u, p) = l(y, u) + <p, f(y, u)>_X."""

    value: float
    grad_y: np.ndarray
    grad_u: np.ndarray


def hamiltonian(problem, y, u, p):
    """Evaluate the Hamiltonian and its state/control gradients at one node."""
    value = float(problem.running_cost(y, u)) + float(
        problem.state_inner(p, problem.f_eval(y, u))
    )
    ly, lu = problem.running_cost_grads(y, u)
    grad_y = np.asarray(ly, dtype=float) + problem.f_jac_y_adjoint_apply(y, u, p)
    grad_u = np.asarray(lu, dtype=float) + problem.f_jac_u_adjoint_apply(y, u, p)
    return HamiltonianEval(value, grad_y, grad_u)


def _weighted_inner(mass, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mass is None:
        return np.einsum("...i,...i->...", a, b)
    mb = mass @ b.T if b.ndim == 2 else mass @ b
    mb = mb.T if b.ndim == 2 else mb
    return np.einsum("...i,...i->...", a, np.asarray(mb))


def _check_spd(mass, dim, label):
    """Cholesky-style SPD check of an inner-product weight at load time."""
    if mass is None:
        return
    dense = mass.toarray() if sp.issparse(mass) else np.asarray(mass, dtype=float)
    if dense.shape != (dim, dim):
        raise ModelEvaluationError(f"{label} must be {dim}x{dim}, got {dense.shape}")
    if not np.allclose(dense, dense.T, rtol=1e-12, atol=1e-12):
        raise ModelEvaluationError(f"{label} must be symmetric")
    try:
        np.linalg.cholesky(dense)
    except np.linalg.LinAlgError as exc:
        raise ModelEvaluationError(f"{label} must be positive definite") from exc


def mass_matvec(mass, x):
    """M @ x for dense/sparse/None mass, batched over a leading axis."""
    if mass is None:
        return x
    if x.ndim == 2:
        return np.asarray((mass @ x.T).T)
    return np.asarray(mass @ x)

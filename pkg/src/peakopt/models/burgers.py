"""Viscous Burgers equation, semi-discretized with P1 finite elements.

    dy/dt = nu * y_xx - beta * y * y_x + 1_omega * u    on (0, 1),
    y(0, t) = y(1, t) = 0,
    y(x, 0) = 10 * (1 - exp(-(1 - x))) * (exp(-(1 - x)) - exp(-1)).

The control acts on omega = [0, 0.25] (26 mesh nodes of the 101-node
uniform mesh); the quantity maximized at the free time is the energy
(1/2) * int_D y^2 over D = [0.25, 0.30].  Consistent (non-lumped) mass
matrices are used throughout; Dirichlet conditions are imposed by
eliminating the boundary rows/columns, keeping 101 stored coefficients with
the two boundary ones pinned at zero.  The convection vector C(y), with
C_i = int y y_x phi_i, is assembled from exact element integrals and is
quadratic in y, so all its derivatives are closed-form.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import cho_factor, cho_solve

from ..problem import ProblemSpec


@dataclass(frozen=True)
class BurgersParams:
    nu: float = 2e-4
    beta: float = 0.05
    alpha: float = 2e-9
    n_nodes: int = 101
    control_region: tuple = (0.0, 0.25)
    target_region: tuple = (0.25, 0.30)


@dataclass
class BurgersDiscretization:
    """Assembled P1 matrices on the uniform mesh of [0, 1]."""

    params: BurgersParams
    x: np.ndarray
    mass: sp.csr_matrix            # Dirichlet-eliminated, unit boundary diagonal
    stiffness: sp.csr_matrix       # Dirichlet rows/columns zeroed
    mass_control: np.ndarray       # control-region mass (m x m, dense SPD)
    control_map: sp.csr_matrix     # n x m load of the control expansion
    mass_target: sp.csr_matrix     # target-region mass
    control_nodes: np.ndarray
    raw_mass: sp.csr_matrix = field(repr=False, default=None)


def _element_mass(hx):
    return hx / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])


def _assemble_region_mass(x, elements, n):
    hx = x[1] - x[0]
    local = _element_mass(hx)
    mat = sp.lil_matrix((n, n))
    for k in elements:
        mat[k : k + 2, k : k + 2] += local
    return mat.tocsr()


def assemble_burgers(params=None):
    p = params or BurgersParams()
    n = p.n_nodes
    x = np.linspace(0.0, 1.0, n)
    hx = x[1] - x[0]
    n_el = n - 1

    main = np.full(n, 2.0 * hx / 3.0)
    main[0] = main[-1] = hx / 3.0
    off = np.full(n - 1, hx / 6.0)
    raw_mass = sp.diags([off, main, off], [-1, 0, 1]).tocsr()

    a_main = np.full(n, 2.0 / hx)
    a_main[0] = a_main[-1] = 1.0 / hx
    a_off = np.full(n - 1, -1.0 / hx)
    stiffness = sp.diags([a_off, a_main, a_off], [-1, 0, 1]).tolil()

    # Dirichlet elimination at both ends
    mass = raw_mass.tolil()
    for b in (0, n - 1):
        mass[b, :] = 0.0
        mass[:, b] = 0.0
        mass[b, b] = 1.0
        stiffness[b, :] = 0.0
        stiffness[:, b] = 0.0
    mass = mass.tocsr()
    stiffness = stiffness.tocsr()

    # control region: all elements contained in omega
    ctrl_elements = [
        k for k in range(n_el) if x[k + 1] <= p.control_region[1] + 1e-12
    ]
    control_nodes = np.arange(ctrl_elements[-1] + 2)
    m = control_nodes.size
    mass_control = _assemble_region_mass(x, ctrl_elements, n)[
        np.ix_(control_nodes, control_nodes)
    ].toarray()

    control_map = sp.lil_matrix((n, m))
    control_map[control_nodes, :] = mass_control
    control_map[0, :] = 0.0          # state boundary row eliminated
    control_map[n - 1, :] = 0.0
    control_map = control_map.tocsr()

    tgt_elements = [
        k
        for k in range(n_el)
        if x[k] >= p.target_region[0] - 1e-12 and x[k + 1] <= p.target_region[1] + 1e-12
    ]
    mass_target = _assemble_region_mass(x, tgt_elements, n)

    return BurgersDiscretization(
        params=p,
        x=x,
        mass=mass,
        stiffness=stiffness,
        mass_control=mass_control,
        control_map=control_map,
        mass_target=mass_target,
        control_nodes=control_nodes,
        raw_mass=raw_mass,
    )


def convection(y, eliminate=True):
    """C(y) with C_i = int y y_x phi_i, exact on P1.

    Broadcasts over a leading axis.  With `eliminate` the Dirichlet boundary
    rows are zeroed (the form used in the dynamics); the full assembly has
    entries summing to (y_n^2 - y_0^2) / 2, the discrete counterpart of
    int y y_x dx, which vanishes for zero boundary values.
    """
    y = np.asarray(y, dtype=float)
    yl, yr = y[..., :-1], y[..., 1:]
    d = yr - yl
    c = np.zeros_like(y)
    c[..., :-1] += d * (2.0 * yl + yr) / 6.0
    c[..., 1:] += d * (yl + 2.0 * yr) / 6.0
    if eliminate:
        c[..., 0] = 0.0
        c[..., -1] = 0.0
    return c


def convection_jac_apply(y, z):
    """C'(y) z from the element formulas; boundary rows zeroed."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    yl, yr = y[..., :-1], y[..., 1:]
    zl, zr = z[..., :-1], z[..., 1:]
    d = yr - yl
    s2 = 2.0 * yl + yr
    s1 = yl + 2.0 * yr
    out = np.zeros_like(z)
    out[..., :-1] += ((2.0 * d - s2) * zl + (s2 + d) * zr) / 6.0
    out[..., 1:] += ((d - s1) * zl + (s1 + 2.0 * d) * zr) / 6.0
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def convection_jac_adjoint_apply(y, w):
    """C'(y)^T w (with the boundary-row elimination folded in)."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float).copy()
    w[..., 0] = 0.0
    w[..., -1] = 0.0
    yl, yr = y[..., :-1], y[..., 1:]
    wl, wr = w[..., :-1], w[..., 1:]
    d = yr - yl
    s2 = 2.0 * yl + yr
    s1 = yl + 2.0 * yr
    out = np.zeros_like(w)
    out[..., :-1] += ((2.0 * d - s2) * wl + (d - s1) * wr) / 6.0
    out[..., 1:] += ((s2 + d) * wl + (s1 + 2.0 * d) * wr) / 6.0
    return out


def convection_jac_matrix(y):
    """C'(y) as a sparse tridiagonal matrix; boundary rows zeroed."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    diag = np.zeros(n)
    diag[1:-1] = (y[2:] - y[:-2]) / 6.0
    super_ = (y[:-1] + 2.0 * y[1:]) / 6.0
    sub = (-2.0 * y[:-1] - y[1:]) / 6.0
    # zero the boundary rows
    super_ = super_.copy()
    sub = sub.copy()
    super_[0] = 0.0
    sub[-1] = 0.0
    return sp.diags([sub, diag, super_], [-1, 0, 1])


def initial_state(x):
    e = np.exp(-(1.0 - x))
    return 10.0 * (1.0 - e) * (e - np.exp(-1.0))


def make_burgers(params=None, horizon=10.0):
    p = params or BurgersParams()
    disc = assemble_burgers(p)
    nu, beta, alpha = p.nu, p.beta, p.alpha
    n = p.n_nodes

    mass_lu = spla.splu(disc.mass.tocsc())
    ctrl_cho = cho_factor(disc.mass_control)
    stiffness = disc.stiffness
    control_map = disc.control_map
    mass_control = disc.mass_control
    mass_target = disc.mass_target

    def _mass_solve(rhs):
        if rhs.ndim == 2:
            return mass_lu.solve(rhs.T).T
        return mass_lu.solve(rhs)

    def _weak_rhs(y, u):
        diff = -nu * np.asarray((stiffness @ y.T).T if y.ndim == 2 else stiffness @ y)
        ctrl = np.asarray((control_map @ u.T).T if u.ndim == 2 else control_map @ u)
        return diff - beta * convection(y) + ctrl

    def f_eval(y, u):
        return _mass_solve(_weak_rhs(y, u))

    def f_jac_y_apply(y, u, z):
        az = np.asarray((stiffness @ z.T).T if z.ndim == 2 else stiffness @ z)
        return _mass_solve(-nu * az - beta * convection_jac_apply(y, z))

    def f_jac_y_adjoint_apply(y, u, q):
        q = np.asarray(q, dtype=float)
        aq = np.asarray((stiffness @ q.T).T if q.ndim == 2 else stiffness @ q)
        return _mass_solve(-nu * aq - beta * convection_jac_adjoint_apply(y, q))

    def f_jac_u_apply(y, u, v):
        bv = np.asarray((control_map @ v.T).T if v.ndim == 2 else control_map @ v)
        return _mass_solve(bv)

    def f_jac_u_adjoint_apply(y, u, q):
        q = np.asarray(q, dtype=float)
        btq = np.asarray((control_map.T @ q.T).T if q.ndim == 2 else control_map.T @ q)
        if btq.ndim == 2:
            return cho_solve(ctrl_cho, btq.T).T
        return cho_solve(ctrl_cho, btq)

    def f_hess_apply(y, u, pad, z, v):
        # the convection term is quadratic, so its second derivative is the
        # constant bilinear map z -> C'(z); contract against the adjoint
        hy = _mass_solve(-beta * convection_jac_adjoint_apply(z, np.asarray(pad)))
        return hy, -alpha * np.asarray(v, dtype=float)

    def running_cost(y, u):
        return -0.5 * alpha * np.einsum("...i,ij,...j->...", u, mass_control, u)

    def running_cost_grads(y, u):
        return np.zeros_like(y), -alpha * np.asarray(u, dtype=float)

    def phi1_eval(y):
        return 0.5 * float(y @ (mass_target @ y))

    def phi1_grad(y):
        return _mass_solve(np.asarray(mass_target @ y))

    def phi1_hess_apply(y, z):
        return _mass_solve(np.asarray(mass_target @ z))

    def f_jac_y_matrix(y, u):
        return (-nu * stiffness - beta * convection_jac_matrix(y)).tocsr()

    return ProblemSpec(
        state_dim=n,
        control_dim=disc.control_nodes.size,
        horizon=horizon,
        y0=initial_state(disc.x),
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
        mass_state=disc.mass,
        mass_control=mass_control,
        f_jac_y_matrix=f_jac_y_matrix,
        vectorized=True,
        name="burgers",
        metadata={
            "mesh": disc.x,
            "control_nodes": disc.control_nodes,
            "control_region": p.control_region,
            "target_region": p.target_region,
        },
    )

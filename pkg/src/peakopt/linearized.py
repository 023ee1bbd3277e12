"""Frozen-coefficient linearization of the forward scheme.

Caches, for one linearization point (u, tau, y), the per-node weak-form
Jacobians and the factorized Crank-Nicolson step matrices, and runs the two
linear sweeps every derivative computation is built from:

    tangent:  dz/ds = speed * f_y(y, u) z + xi,   z(0) = 0
    adjoint:  -dq/ds = speed * f_y(y, u)^* q + w, q(2) = b,
              q(1+) - q(1-) + a = 0

In weak form the adjoint step matrix is the transpose of the tangent one,
so a single factorization per node serves both directions.  The interface
node carries two factorizations (one per one-sided speed).
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AdjointStepError
from .problem import mass_matvec
from .timegrid import SplitGridValues


class LinearizedDynamics:
    def __init__(self, problem, u, tp, y):
        self.problem = problem
        self.grid = grid = y.grid
        self.tp = tp
        n, mid, h = grid.n_steps, grid.mid, grid.h
        self.n_steps, self.mid, self.h = n, mid, h
        c_lo = 0.5 * h * tp.speed_lower
        c_hi = 0.5 * h * tp.speed_upper
        # interval coefficients c_i = h * speed_i / 2
        self.c = np.empty(n)
        self.c[:mid] = c_lo
        self.c[mid:] = c_hi

        fy_nodes = self._assemble_jacobians(problem, y, u, n)
        self.sparse = sp.issparse(fy_nodes[0])
        # c of the interval right of node j (defined for j = 0 .. n-1)
        self._c_right = np.empty(n + 1)
        self._c_right[:mid] = c_lo
        self._c_right[mid:] = c_hi
        if self.sparse:
            self._init_sparse(fy_nodes, c_lo, c_hi)
        else:
            self._init_dense(fy_nodes, c_lo, c_hi)

    @staticmethod
    def _assemble_jacobians(problem, y, u, n):
        """Per-node weak Jacobians; batched when the model supports it."""
        if problem.vectorized:
            try:
                stacked = problem.f_jac_y_matrix(y.values, u.values)
            except Exception:
                stacked = None
            if isinstance(stacked, np.ndarray) and stacked.ndim == 3:
                return np.ascontiguousarray(stacked)
        return [problem.f_jac_y_matrix(y.values[i], u.values[i]) for i in range(n + 1)]

    # -- dense path: precomputed step propagators --------------------------

    def _init_dense(self, fy_nodes, c_lo, c_hi):
        problem, n, mid, h = self.problem, self.n_steps, self.mid, self.h
        fy = np.asarray(fy_nodes, dtype=float)
        mass = problem.mass_state
        if mass is None:
            m_dense = np.eye(problem.state_dim)
        else:
            m_dense = mass.toarray() if sp.issparse(mass) else np.asarray(mass, float)
        self._mass_dense = m_dense

        v_lo = np.linalg.inv(m_dense[None] - c_lo * fy[: mid + 1])
        v_hi = np.linalg.inv(m_dense[None] - c_hi * fy[mid:])

        c = self.c[:, None, None]
        # tangent step i -> i+1: solve at node i+1 with interval-i speed
        v_t = np.concatenate([v_lo[1 : mid + 1], v_hi[1:]], axis=0)
        self.prop_t = v_t @ (m_dense[None] + c * fy[:n])
        self.src_t = 0.5 * h * (v_t @ m_dense[None])
        # adjoint step i+1 -> i: transposed solve at node i with interval-i speed
        v_a = np.concatenate([v_lo[:mid], v_hi[: n - mid]], axis=0)
        self.prop_a = np.transpose((m_dense[None] + c * fy[1:]) @ v_a, (0, 2, 1))
        self.src_a = 0.5 * h * np.transpose(m_dense[None] @ v_a, (0, 2, 1))
        # exact-transpose sweep: solves at node j with left-interval speed
        # (same inverses as the tangent steps), rhs matrix at node j with
        # right-interval speed
        c_r = self._c_right[1:n, None, None]
        self.prop_x = np.transpose(
            (m_dense[None] + c_r * fy[1:n]) @ v_t[:-1], (0, 2, 1)
        )
        self.vt_T = np.transpose(v_t, (0, 2, 1))

    # -- sparse path: per-node LU factors -----------------------------------

    def _init_sparse(self, fy_nodes, c_lo, c_hi):
        mid = self.mid
        mass = self.problem.mass_state
        self._mass = mass
        self._fy = fy_nodes
        self._lu_lo = [
            spla.splu((mass - c_lo * fy_nodes[j]).tocsc()) for j in range(mid + 1)
        ]
        self._lu_hi = [
            spla.splu((mass - c_hi * fy_nodes[j]).tocsc())
            for j in range(mid, self.n_steps + 1)
        ]

    def _lu_tangent(self, i):
        """Factor for the tangent step over interval i (node i+1)."""
        return self._lu_lo[i + 1] if i + 1 <= self.mid else self._lu_hi[i + 1 - self.mid]

    def _lu_adjoint(self, i):
        """Factor for the adjoint step over interval i (node i, transposed)."""
        return self._lu_lo[i] if i < self.mid else self._lu_hi[i - self.mid]

    # -- sweeps --------------------------------------------------------------

    def _interval_sums(self, field):
        """Per-interval sums of one-sided node values of a SplitGridValues."""
        lo = field.lower
        up = field.upper
        return np.concatenate([lo[:-1] + lo[1:], up[:-1] + up[1:]], axis=0)

    def tangent_sweep(self, xi):
        """Solve the tangent system with source xi (SplitGridValues); z(0) = 0."""
        n = self.n_steps
        z = np.zeros((n + 1, self.problem.state_dim))
        xsum = self._interval_sums(xi)
        if not self.sparse:
            src = np.einsum("ijk,ik->ij", self.src_t, xsum)
            cur = z[0]
            for i in range(n):
                cur = self.prop_t[i] @ cur + src[i]
                z[i + 1] = cur
            return z
        mass = self._mass
        pre = 0.5 * self.h * mass_matvec(mass, xsum)
        cur = z[0]
        for i in range(n):
            rhs = mass @ cur + self.c[i] * (self._fy[i] @ cur) + pre[i]
            cur = self._lu_tangent(i).solve(rhs)
            z[i + 1] = cur
        return z

    def adjoint_sweep(self, a, b, w):
        """Solve the backward system with jump a, terminal value b, source w."""
        n, mid = self.n_steps, self.mid
        ndim = self.problem.state_dim
        a = np.zeros(ndim) if a is None else np.asarray(a, dtype=float)
        b = np.zeros(ndim) if b is None else np.asarray(b, dtype=float)
        lower = np.empty((mid + 1, ndim))
        upper = np.empty((mid + 1, ndim))
        wsum = self._interval_sums(w)

        if not self.sparse:
            src = np.einsum("ijk,ik->ij", self.src_a, wsum)
            cur = b
            upper[-1] = cur
            for i in range(n - 1, mid - 1, -1):
                cur = self.prop_a[i] @ cur + src[i]
                upper[i - mid] = cur
            cur = upper[0] + a  # transmission condition at s = 1
            lower[-1] = cur
            for i in range(mid - 1, -1, -1):
                cur = self.prop_a[i] @ cur + src[i]
                lower[i] = cur
        else:
            mass = self._mass
            pre = 0.5 * self.h * mass_matvec(mass, wsum)
            cur = b
            upper[-1] = cur
            for i in range(n - 1, mid - 1, -1):
                rhs = mass @ cur + self.c[i] * (self._fy[i + 1].T @ cur) + pre[i]
                cur = self._lu_adjoint(i).solve(rhs, trans="T")
                upper[i - mid] = cur
            cur = upper[0] + a
            lower[-1] = cur
            for i in range(mid - 1, -1, -1):
                rhs = mass @ cur + self.c[i] * (self._fy[i + 1].T @ cur) + pre[i]
                cur = self._lu_adjoint(i).solve(rhs, trans="T")
                lower[i] = cur

        out = SplitGridValues(self.grid, lower, upper)
        if not np.all(np.isfinite(out.lower)) or not np.all(np.isfinite(out.upper)):
            raise AdjointStepError(-1, "non-finite values in backward sweep")
        return out

    def transpose_sweep(self, a, b, w):
        """Backward solve that is the exact discrete transpose of the tangent.

        Used inside Hessian-vector products: with this sweep the identity
        <q, xi>_W = a^T M z(1) + b^T M z(2) + <w, z>_W holds to round-off for
        every source xi (z the tangent solution, W the split trapezoidal
        pairing), which makes the reduced Hessian form symmetric exactly.
        It discretizes the same backward system as `adjoint_sweep` and
        differs from it by O(h^2).
        """
        n, mid, h = self.n_steps, self.mid, self.h
        ndim = self.problem.state_dim
        a = np.zeros(ndim) if a is None else np.asarray(a, dtype=float)
        b = np.zeros(ndim) if b is None else np.asarray(b, dtype=float)

        # nodal sources kappa_j, j = 1 .. n-1 (interface gets both one-sided
        # values with half weight plus the jump data), terminal handled apart
        mass = getattr(self, "_mass", None) if self.sparse else self._mass_dense
        kappa = np.empty((n - 1, ndim))
        w_lo = w.lower
        w_up = w.upper
        if self.sparse:
            mw_lo = mass_matvec(mass, w_lo)
            mw_up = mass_matvec(mass, w_up)
            ma = mass_matvec(mass, a)
            mb = mass_matvec(mass, b)
        else:
            mw_lo = w_lo @ mass.T
            mw_up = w_up @ mass.T
            ma = mass @ a
            mb = mass @ b
        kappa[: mid - 1] = h * mw_lo[1:mid]
        kappa[mid - 1] = 0.5 * h * (mw_lo[mid] + mw_up[0]) + ma
        kappa[mid:] = h * mw_up[1 : n - mid]

        lam = np.empty((n, ndim))  # lam[i] multiplies the interval-i constraint
        if not self.sparse:
            cur = self.vt_T[n - 1] @ (mb + 0.5 * h * mw_up[-1])
            lam[n - 1] = cur
            for j in range(n - 1, 0, -1):
                cur = self.prop_x[j - 1] @ cur + self.vt_T[j - 1] @ kappa[j - 1]
                lam[j - 1] = cur
        else:
            fy = self._fy
            cur = self._lu_tangent(n - 1).solve(mb + 0.5 * h * mw_up[-1], trans="T")
            lam[n - 1] = cur
            for j in range(n - 1, 0, -1):
                rhs = mass @ cur + self._c_right[j] * (fy[j].T @ cur) + kappa[j - 1]
                cur = self._lu_tangent(j - 1).solve(rhs, trans="T")
                lam[j - 1] = cur

        lower = np.empty((mid + 1, ndim))
        upper = np.empty((mid + 1, ndim))
        lower[0] = lam[0]
        lower[1:mid] = 0.5 * (lam[: mid - 1] + lam[1:mid])
        lower[mid] = lam[mid - 1]
        upper[0] = lam[mid]
        upper[1 : n - mid] = 0.5 * (lam[mid : n - 1] + lam[mid + 1 :])
        upper[n - mid] = lam[n - 1]

        out = SplitGridValues(self.grid, lower, upper)
        if not np.all(np.isfinite(out.lower)) or not np.all(np.isfinite(out.upper)):
            raise AdjointStepError(-1, "non-finite values in transpose sweep")
        return out

"""Reparameterized time grid.

The solve horizon [0, T] is mapped onto the fixed interval [0, 2] by a
piecewise-affine change of variables that sends s = 1 to the free interior
time tau:

    pi(s, tau) = tau * s                     for s in [0, 1],
    pi(s, tau) = (T - tau) * s + 2*tau - T   for s in [1, 2].

The slope d(pi)/ds (the local clock speed of the transformed dynamics) is
constant on each half interval, with a jump at s = 1, and its derivative
with respect to tau is +1 on [0, 1] and -1 on [1, 2].  All quadratures and
time steps are therefore split at s = 1, which is forced to be a grid node.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TauParameter:
    """Free interior time tau together with the horizon T.

    tau is kept strictly inside (0, T) by clamping to
    [min_fraction*T, (1 - min_fraction)*T]; the endpoint cases are not
    meaningful for the solver.
    """

    tau: float
    horizon: float
    min_fraction: float = 1e-6

    def __post_init__(self):
        if not np.isfinite(self.horizon) or self.horizon <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        lo = self.min_fraction * self.horizon
        clamped = min(max(float(self.tau), lo), self.horizon - lo)
        object.__setattr__(self, "tau", clamped)

    @property
    def speed_lower(self):
        """Clock speed d(pi)/ds on [0, 1]."""
        return self.tau

    @property
    def speed_upper(self):
        """Clock speed d(pi)/ds on [1, 2]."""
        return self.horizon - self.tau

    def with_tau(self, tau):
        return TauParameter(tau, self.horizon, self.min_fraction)


@dataclass(frozen=True)
class SGrid:
    """Uniform grid of n_steps + 1 nodes on [0, 2] with s = 1 as a node.

    n_steps must be even so that the interface s = 1 (where the clock speed
    and the adjoint are discontinuous) falls exactly on node n_steps // 2.
    """

    n_steps: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_steps
        if n < 2 or n % 2 != 0:
            raise ValueError(f"n_steps must be even and >= 2, got {n}")
        half = n // 2
        # Build per half so that s = 1 is exact in floating point.
        nodes = np.concatenate(
            [np.linspace(0.0, 1.0, half + 1), np.linspace(1.0, 2.0, half + 1)[1:]]
        )
        object.__setattr__(self, "nodes", nodes)

    @property
    def mid(self):
        """Index of the interface node s = 1."""
        return self.n_steps // 2

    @property
    def h(self):
        """Nominal step size 2 / n_steps."""
        return 2.0 / self.n_steps

    def interval_speeds(self, tp):
        """Clock speed on each of the n_steps intervals (constant per half)."""
        out = np.empty(self.n_steps)
        out[: self.mid] = tp.speed_lower
        out[self.mid :] = tp.speed_upper
        return out

    def trapz_weights(self):
        """Trapezoidal weights for single-valued nodal data on [0, 2]."""
        w = np.full(self.n_steps + 1, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def integrate_half(self, values):
        """Trapezoidal integral of nodal data over one half interval.

        `values` holds the mid + 1 node values of that half (either
        [0, 1] or [1, 2]); extra trailing dimensions are carried through.
        """
        v = np.asarray(values, dtype=float)
        if v.shape[0] != self.mid + 1:
            raise ValueError("expected mid + 1 node values for one half interval")
        return self.h * (v.sum(axis=0) - 0.5 * (v[0] + v[-1]))


def _check_s(s):
    if not (0.0 <= s <= 2.0):
        raise ValueError(f"s must lie in [0, 2], got {s}")


def physical_time(s, tp):
    """Map a grid coordinate s in [0, 2] to physical time in [0, T]."""
    _check_s(s)
    if s <= 1.0:
        return tp.tau * s
    return (tp.horizon - tp.tau) * s + 2.0 * tp.tau - tp.horizon


def physical_times(grid, tp):
    """Physical times of all grid nodes; hits tau exactly at node mid."""
    s = grid.nodes
    t = np.where(
        s <= 1.0, tp.tau * s, (tp.horizon - tp.tau) * s + 2.0 * tp.tau - tp.horizon
    )
    t[grid.mid] = tp.tau
    t[0] = 0.0
    t[-1] = tp.horizon
    return t


def clock_speed(s, tp, side=None):
    """Clock speed d(pi)/ds at s; one-sided at the interface.

    At s = 1 the caller must state which half interval governs by passing
    side="left" or side="right".
    """
    _check_s(s)
    if s < 1.0:
        return tp.speed_lower
    if s > 1.0:
        return tp.speed_upper
    if side == "left":
        return tp.speed_lower
    if side == "right":
        return tp.speed_upper
    raise ValueError("at s = 1 a side ('left' or 'right') is required")


def clock_speed_dtau(s, side=None):
    """Derivative of the clock speed with respect to tau: +1 / -1.

    Independent of tau itself; one-sided at s = 1 as in `clock_speed`.
    """
    _check_s(s)
    if s < 1.0:
        return 1.0
    if s > 1.0:
        return -1.0
    if side == "left":
        return 1.0
    if side == "right":
        return -1.0
    raise ValueError("at s = 1 a side ('left' or 'right') is required")


class SplitGridValues:
    """Nodal data with two one-sided values at the interface node s = 1.

    Stores the lower-half values (nodes 0 .. mid, the mid entry being the
    left limit at s = 1) and the upper-half values (nodes mid .. n, the
    first entry being the right limit).  Total storage is n_steps + 2 rows.
    """

    def __init__(self, grid, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape[0] != grid.mid + 1 or upper.shape[0] != grid.mid + 1:
            raise ValueError("each half must hold mid + 1 node values")
        if lower.shape[1:] != upper.shape[1:]:
            raise ValueError("halves must agree in trailing dimensions")
        self.grid = grid
        self.lower = lower
        self.upper = upper

    @classmethod
    def from_nodal(cls, grid, values):
        """Duplicate single-valued nodal data at the interface."""
        values = np.asarray(values, dtype=float)
        return cls(grid, values[: grid.mid + 1], values[grid.mid :])

    @property
    def values(self):
        """(n_steps + 2, ...) array with the interface stored twice."""
        return np.concatenate([self.lower, self.upper], axis=0)

    @property
    def left_at_interface(self):
        return self.lower[-1]

    @property
    def right_at_interface(self):
        return self.upper[0]

    def __mul__(self, factor):
        return SplitGridValues(self.grid, self.lower * factor, self.upper * factor)

    __rmul__ = __mul__

    def __add__(self, other):
        return SplitGridValues(
            self.grid, self.lower + other.lower, self.upper + other.upper
        )

    def __sub__(self, other):
        return SplitGridValues(
            self.grid, self.lower - other.lower, self.upper - other.upper
        )

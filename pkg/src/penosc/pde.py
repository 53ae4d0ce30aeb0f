"""Finite-difference solver for the one-dimensional friction functionals.

The velocity of the white-noise friction model with zero potential and unit
damping is an autonomous scalar diffusion with drift ``-(y + s_n(y))``
where ``s_n`` is the smoothed sign.  Two expectation functionals of this
process solve linear parabolic equations with advection coefficient
``b(y) = y + s_n(y)``:

* ``w(y, tau)`` -- the running mean of the integrated observable,
* ``v(y, tau)`` -- its running variance, whose source is the squared
  spatial gradient of ``w``.

Both start from zero and are marched with a backward-Euler step on a
truncated interval with homogeneous Neumann walls.  The asymptotic linear
growth rate of ``v`` at the center is the squared diffusion coefficient of
the integrated observable (:func:`gamma_from_v`), and the late-time growth
rate of ``w`` is the stationary mean of the observable
(:func:`stationary_mean`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .models import smooth_abs_prime
from .observables import Observable

__all__ = [
    "Grid1D",
    "TridiagonalOperator",
    "PdeSolution",
    "GammaEstimate",
    "PivotError",
    "advection_coefficient",
    "build_operator",
    "step_implicit",
    "solve",
    "gamma_from_v",
    "stationary_mean",
]


class PivotError(ArithmeticError):
    """Zero pivot during tridiagonal elimination."""

    def __init__(self, row: int):
        self.row = row
        super().__init__("zero pivot in tridiagonal elimination at row %d" % row)


@dataclass(frozen=True)
class Grid1D:
    """Uniform space-time grid on [-half_width, half_width] x [0, t_final].

    ``n_nodes`` counts grid nodes including both walls; ``t_final/dt`` must
    be an integer number of steps.
    """

    half_width: float = 10.0
    n_nodes: int = 2001
    dt: float = 1e-3
    t_final: float = 100.0

    def __post_init__(self):
        if self.half_width <= 0 or self.dt <= 0 or self.t_final <= 0:
            raise ValueError("grid extents and steps must be positive")
        if self.n_nodes < 3:
            raise ValueError("need at least 3 nodes")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError("t_final must be an integer multiple of dt")

    @property
    def dy(self) -> float:
        return 2.0 * self.half_width / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n_nodes)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def center_index(self) -> int:
        return int(np.argmin(np.abs(self.nodes)))


@dataclass(frozen=True)
class TridiagonalOperator:
    """Row-wise bands of the implicit-step matrix.

    ``sub[i]``, ``diag[i]``, ``sup[i]`` are the entries of row i at columns
    i-1, i, i+1 (``sub[0]`` and ``sup[-1]`` are unused and kept at zero).
    The first and last rows encode one-sided differences for the Neumann
    walls; interior rows carry the diffusion/advection stencil scaled by
    the time step.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray


def advection_coefficient(y, n: int):
    """Drift coefficient b(y) = y + smoothed-sign(y) of the 1d friction flow."""
    return np.asarray(y, dtype=float) + np.asarray(smooth_abs_prime(y, n), dtype=float)


def build_operator(grid: Grid1D, n: int) -> TridiagonalOperator:
    nodes = grid.nodes
    dy, dt = grid.dy, grid.dt
    nn = grid.n_nodes
    b = advection_coefficient(nodes, n)

    sub = np.zeros(nn)
    diag = np.empty(nn)
    sup = np.zeros(nn)

    diag[0] = 1.0 / dy
    sup[0] = -1.0 / dy
    sub[1:-1] = -(dt / 2.0) * (1.0 / dy**2 + b[1:-1] / dy)
    diag[1:-1] = 1.0 + dt / dy**2
    sup[1:-1] = -(dt / 2.0) * (1.0 / dy**2 - b[1:-1] / dy)
    sub[-1] = 1.0 / dy
    diag[-1] = -1.0 / dy
    return TridiagonalOperator(sub=sub, diag=diag, sup=sup)


def _thomas(op: TridiagonalOperator, rhs: np.ndarray) -> np.ndarray:
    """Forward elimination / back substitution for one tridiagonal solve."""
    nn = op.diag.size
    cp = np.empty(nn)
    dp = np.empty(nn)
    if op.diag[0] == 0.0:
        raise PivotError(0)
    cp[0] = op.sup[0] / op.diag[0]
    dp[0] = rhs[0] / op.diag[0]
    for i in range(1, nn):
        den = op.diag[i] - op.sub[i] * cp[i - 1]
        if den == 0.0:
            raise PivotError(i)
        cp[i] = op.sup[i] / den
        dp[i] = (rhs[i] - op.sub[i] * dp[i - 1]) / den
    u = np.empty(nn)
    u[-1] = dp[-1]
    for i in range(nn - 2, -1, -1):
        u[i] = dp[i] - cp[i] * u[i + 1]
    return u


def step_implicit(op: TridiagonalOperator, prev: np.ndarray,
                  source: np.ndarray, dt: float) -> np.ndarray:
    """One backward-Euler step: solve M u = dt*source + prev.

    Interior right-hand side entries take the previous time level plus the
    scaled source; the two wall rows take zero, which together with the
    one-sided operator rows enforces homogeneous Neumann conditions.
    """
    prev = np.asarray(prev, dtype=float)
    source = np.asarray(source, dtype=float)
    if prev.shape != source.shape or prev.size != op.diag.size:
        raise ValueError("field/source lengths must match the operator")
    rhs = np.empty_like(prev)
    rhs[0] = 0.0
    rhs[-1] = 0.0
    rhs[1:-1] = dt * source[1:-1] + prev[1:-1]
    return _thomas(op, rhs)


@dataclass(frozen=True)
class PdeSolution:
    """Mean and variance fields with their dense center-node traces.

    ``times`` are the checkpoint times at which full fields were stored;
    ``center_times`` is the full per-step time axis of the center-node
    series used for rate extraction.
    """

    grid: Grid1D
    n: int
    observable: str
    times: np.ndarray
    w_fields: np.ndarray
    v_fields: np.ndarray
    center_times: np.ndarray
    w_center: np.ndarray
    v_center: np.ndarray


def default_checkpoints(grid: Grid1D, count: int = 50) -> np.ndarray:
    """Logarithmically spaced checkpoint times plus the final time."""
    lo = max(grid.dt, grid.t_final * 1e-3)
    times = np.geomspace(lo, grid.t_final, count)
    steps = np.unique(np.round(times / grid.dt).astype(np.int64))
    steps = steps[(steps >= 1) & (steps <= grid.n_steps)]
    if steps[-1] != grid.n_steps:
        steps = np.append(steps, grid.n_steps)
    return steps * grid.dt


def solve(grid: Grid1D, n: int, g: Observable,
          checkpoint_times: np.ndarray | None = None) -> PdeSolution:
    """March both fields from zero initial data to the final time.

    The variance source at each step uses the centered gradient of the
    freshly updated mean field, i.e. both fields advance with the same
    implicit operator within one step.
    """
    if checkpoint_times is None:
        checkpoint_times = default_checkpoints(grid)
    steps = np.round(np.asarray(checkpoint_times, dtype=float) / grid.dt).astype(np.int64)
    if np.any(np.abs(steps * grid.dt - checkpoint_times) > 1e-9 * max(1.0, grid.t_final)):
        raise ValueError("checkpoint times must be multiples of dt")
    steps = np.unique(steps)
    if steps.size and (steps[0] < 0 or steps[-1] > grid.n_steps):
        raise ValueError("checkpoint times outside [0, t_final]")

    op = build_operator(grid, n)
    gvals = np.asarray(g.fn(grid.nodes), dtype=float)
    ncp = steps.size
    w_fields = np.empty((ncp, grid.n_nodes))
    v_fields = np.empty((ncp, grid.n_nodes))
    w_center = np.empty(grid.n_steps + 1)
    v_center = np.empty(grid.n_steps + 1)

    status = _kernels.pde_march(op.sub, op.diag, op.sup, gvals, grid.dy,
                                grid.dt, grid.n_steps, grid.center_index,
                                steps, w_fields, v_fields, w_center, v_center)
    if status != -1:
        raise PivotError(-(status + 1))

    return PdeSolution(
        grid=grid, n=n, observable=g.name,
        times=steps.astype(float) * grid.dt,
        w_fields=w_fields, v_fields=v_fields,
        center_times=np.arange(grid.n_steps + 1) * grid.dt,
        w_center=w_center, v_center=v_center,
    )


@dataclass(frozen=True)
class GammaEstimate:
    """Late-time linear growth rate of the center variance trace."""

    gamma_sq: float
    window: tuple[float, float]
    residual_rms: float
    n_points: int
    n: int
    grid: Grid1D

    @property
    def gamma(self) -> float:
        return math.sqrt(self.gamma_sq)


def gamma_from_v(solution: PdeSolution, window: float = 0.5) -> GammaEstimate:
    """Least-squares slope of v(0, tau) over tau in [window*T, T].

    An affine fit absorbs any intercept; the slope is clamped at zero
    (degenerate observables give an identically zero trace).
    """
    if not 0.0 < window < 1.0:
        raise ValueError("window must be a fraction in (0, 1)")
    t = solution.center_times
    lo = window * solution.grid.t_final
    mask = t >= lo
    if int(np.sum(mask)) < 10:
        raise ValueError("fit window [%g, %g] holds fewer than 10 stored points"
                         % (lo, solution.grid.t_final))
    tt = t[mask]
    vv = solution.v_center[mask]
    slope, intercept = np.polyfit(tt, vv, 1)
    resid = vv - (slope * tt + intercept)
    return GammaEstimate(
        gamma_sq=float(max(slope, 0.0)),
        window=(float(lo), float(solution.grid.t_final)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=int(tt.size),
        n=solution.n,
        grid=solution.grid,
    )


def stationary_mean(grid: Grid1D, n: int, g: Observable,
                    tail_fraction: float = 0.1,
                    solution: PdeSolution | None = None) -> float:
    """Stationary mean of the observable as the late-time growth rate of w(0, .).

    Computed as the increment of the center mean trace over the final
    ``tail_fraction`` of the horizon, per unit time.  The mean field grows
    linearly once the process has mixed, so this increment rate stabilizes
    to the stationary average of g.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must be in (0, 1)")
    if solution is None:
        solution = solve(grid, n, g, checkpoint_times=np.array([grid.t_final]))
    span = tail_fraction * grid.t_final
    idx = int(round((grid.t_final - span) / grid.dt))
    w = solution.w_center
    return float((w[-1] - w[idx]) / (grid.t_final - idx * grid.dt))

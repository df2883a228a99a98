"""Time stepping for the controlled adoption dynamics.

Deterministic flows use classical 4th-order Runge-Kutta; the stochastic
dynamics use Euler-Maruyama driven by seeded Brownian increments; the
noisy observer overlays discrete white noise on a stored trajectory.

Conventions
-----------
* Deterministic states are clamped to [0, 1] after each step (a no-op in
  exact arithmetic since the boundaries are invariant).
* Stochastic states are NOT clamped, but the drift is evaluated on the
  clamped value so x*(1-x) cannot amplify noise excursions.
* Brownian increments index the n_steps intervals of the grid; the
  discrete white-noise value on interval k is increments[k] / dt. The
  observer leaves the terminal node untouched because no interval starts
  there.
* All stochastic outputs are pure functions of (inputs, seed); per-path
  seeds are derived as base_seed + path_index by the callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import ModelParams

CSV_DIGITS = 17


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of n_steps intervals covering [0, t_end]."""

    n_steps: int
    t_end: float

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    def times(self) -> np.ndarray:
        """Node times t_k = k*dt, k = 0..n_steps."""
        return np.linspace(0.0, self.t_end, self.n_steps + 1)

    def refined(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.n_steps * factor, self.t_end)


@dataclass(frozen=True)
class Trajectory:
    """State values on the nodes of a time grid."""

    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self):
        if self.states.shape != (self.grid.n_steps + 1,):
            raise ValueError(
                f"states must have length n_steps+1={self.grid.n_steps + 1}, "
                f"got shape {self.states.shape}")


@dataclass(frozen=True)
class NoisePath:
    """Brownian increments on a grid, reproducible from (seed, grid)."""

    grid: TimeGrid
    increments: np.ndarray
    seed: int

    def __post_init__(self):
        if self.increments.shape != (self.grid.n_steps,):
            raise ValueError(
                f"increments must have length n_steps={self.grid.n_steps}, "
                f"got shape {self.increments.shape}")

    def brownian_nodes(self) -> np.ndarray:
        """W at the grid nodes: W(t_k) = sum of increments before k."""
        w = np.empty(self.grid.n_steps + 1)
        w[0] = 0.0
        np.cumsum(self.increments, out=w[1:])
        return w


def _drift(x: float, u: float, params: ModelParams) -> float:
    # Raw formula: RK4 stage states may sit transiently outside [0, 1].
    return x * (1.0 - x) * (params.beta * u - params.xi_cost)


def integrate_deterministic(
    x0: float,
    control: Callable[[float], float],
    params: ModelParams,
    grid: TimeGrid,
) -> Trajectory:
    """Classical RK4 solution of ẋ = x(1-x)(beta*u(t) - xi).

    Parameters
    ----------
    x0 : initial share in [0, 1].
    control : effort as a function of time, defined on [0, t_end].
    params : model constants (only beta and xi_cost enter the drift).
    grid : integration grid.

    Returns the trajectory on the grid nodes, clamped to [0, 1] after
    each step.
    """
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"x0 must be within [0, 1], got {x0}")
    dt = grid.dt
    times = grid.times()
    states = np.empty(grid.n_steps + 1)
    states[0] = x0
    x = float(x0)
    for k in range(grid.n_steps):
        t = times[k]
        u0 = control(t)
        um = control(t + 0.5 * dt)
        u1 = control(t + dt)
        k1 = _drift(x, u0, params)
        k2 = _drift(x + 0.5 * dt * k1, um, params)
        k3 = _drift(x + 0.5 * dt * k2, um, params)
        k4 = _drift(x + dt * k3, u1, params)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x = min(1.0, max(0.0, x))
        states[k + 1] = x
    return Trajectory(grid=grid, states=states)


def sample_noise(grid: TimeGrid, seed: int) -> NoisePath:
    """Draw n_steps independent N(0, dt) Brownian increments.

    Deterministic in (seed, grid): the same call always returns the same
    path (PCG64 generator seeded with `seed`).
    """
    rng = np.random.default_rng(seed)
    increments = rng.standard_normal(grid.n_steps) * np.sqrt(grid.dt)
    return NoisePath(grid=grid, increments=increments, seed=seed)


def integrate_sde(
    x0: float,
    control: Callable[[float], float],
    params: ModelParams,
    noise: NoisePath,
) -> Trajectory:
    """Euler-Maruyama path of dx = x(1-x)(beta*u - xi) dt + sigma dW.

    The drift is evaluated on the [0, 1]-clamped state; the stored state
    itself is left unclamped since the additive noise may exit [0, 1].
    """
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"x0 must be within [0, 1], got {x0}")
    grid = noise.grid
    dt = grid.dt
    times = grid.times()
    states = np.empty(grid.n_steps + 1)
    states[0] = x0
    x = float(x0)
    for k in range(grid.n_steps):
        xc = min(1.0, max(0.0, x))
        x = x + _drift(xc, control(times[k]), params) * dt \
            + params.sigma * noise.increments[k]
        states[k + 1] = x
    return Trajectory(grid=grid, states=states)


def em_paths(
    x0: float,
    control_nodes: np.ndarray,
    params: ModelParams,
    dt: float,
    increments: np.ndarray,
) -> np.ndarray:
    """Euler-Maruyama, vectorized over an ensemble of noise paths.

    `control_nodes` holds u(t_k) for k = 0..n_steps (only the first
    n_steps values drive the scheme); `increments` is an
    (n_paths, n_steps) matrix whose row i is the increment sequence of
    path i. Each row reproduces integrate_sde run with that path.
    Returns the (n_paths, n_steps+1) state matrix.
    """
    n_paths, n_steps = increments.shape
    if control_nodes.shape[0] < n_steps:
        raise ValueError("control_nodes shorter than the step count")
    states = np.empty((n_paths, n_steps + 1))
    states[:, 0] = x0
    x = np.full(n_paths, float(x0))
    offset = params.beta * control_nodes - params.xi_cost
    for k in range(n_steps):
        xc = np.clip(x, 0.0, 1.0)
        x = x + xc * (1.0 - xc) * offset[k] * dt \
            + params.sigma * increments[:, k]
        states[:, k + 1] = x
    return states


def observe(trajectory: Trajectory, noise: NoisePath, sigma: float) -> Trajectory:
    """Overlay discrete white noise: y_k = x_k + sigma * dW_k / dt.

    The increment of interval k supplies the noise at node k; the
    terminal node is returned unchanged. sigma = 0 returns the input
    states unmodified.
    """
    if trajectory.grid != noise.grid:
        raise ValueError("trajectory and noise must share the same grid")
    if sigma == 0.0:
        return Trajectory(grid=trajectory.grid, states=trajectory.states.copy())
    dt = trajectory.grid.dt
    states = trajectory.states.copy()
    states[:-1] = states[:-1] + sigma * noise.increments / dt
    return Trajectory(grid=trajectory.grid, states=states)


def trajectory_to_csv(trajectory: Trajectory, observed: Trajectory | None = None) -> str:
    """Render a trajectory as CSV text with header t,x (or t,x,y)."""
    times = trajectory.grid.times()
    fmt = f"%.{CSV_DIGITS}g"
    lines = []
    if observed is None:
        lines.append("t,x")
        for t, x in zip(times, trajectory.states):
            lines.append(f"{fmt % t},{fmt % x}")
    else:
        if observed.grid != trajectory.grid:
            raise ValueError("observed trajectory must share the grid")
        lines.append("t,x,y")
        for t, x, y in zip(times, trajectory.states, observed.states):
            lines.append(f"{fmt % t},{fmt % x},{fmt % y}")
    return "\n".join(lines) + "\n"

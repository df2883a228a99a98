"""Independent baselines that bound and validate the surface solution.

Direct transcription: the control is a free piecewise-constant value on
every grid interval, optimized by (projected) gradient descent. Because
this class contains any sampled surface control, its optimum is a lower
bound for the per-x0 objective of any parameterized control on the same
grid, up to discretization error.

First-order optimality check: with the running cost C*u^2 - alpha*x*u
and dynamics f = x*(1-x)*(beta*u - xi), the Hamiltonian is

    H(x, u, lam) = C*u^2 - alpha*x*u + lam * x*(1-x)*(beta*u - xi)

so the costate satisfies

    dlam/dt = -dH/dx = alpha*u - lam*(1-2x)*(beta*u - xi),  lam(T) = 0,

and stationarity dH/du = 0 with the u >= 0 projection gives the map

    u = max(0, (alpha*x - lam*beta*x*(1-x)) / (2C)).

pmp_residual reports the worst deviation of a candidate control from
this map along its own trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams
from .simulate import TimeGrid

_BB_CLIP = (1e-8, 1e6)


@dataclass(frozen=True)
class TranscriptionSolution:
    """Piecewise-constant optimal control for one initial condition."""

    grid: TimeGrid
    controls: np.ndarray
    objective: float
    x0: float
    converged: bool
    grad_norm: float
    iterations: int

    def __post_init__(self):
        if self.controls.shape != (self.grid.n_steps,):
            raise ValueError(
                f"controls must have length n_steps={self.grid.n_steps}, "
                f"got shape {self.controls.shape}")


def _state_nodes(x0: float, controls: np.ndarray, params: ModelParams,
                 grid: TimeGrid) -> np.ndarray:
    """RK4 state under a piecewise-constant control (clamped per step)."""
    dt = grid.dt
    beta, xi = params.beta, params.xi_cost
    states = np.empty(grid.n_steps + 1)
    states[0] = x0
    x = float(x0)
    for k in range(grid.n_steps):
        off = beta * controls[k] - xi
        k1 = x * (1.0 - x) * off
        xs = x + 0.5 * dt * k1
        k2 = xs * (1.0 - xs) * off
        xs = x + 0.5 * dt * k2
        k3 = xs * (1.0 - xs) * off
        xs = x + dt * k3
        k4 = xs * (1.0 - xs) * off
        x = min(1.0, max(0.0, x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)))
        states[k + 1] = x
    return states


def _node_controls(controls: np.ndarray) -> np.ndarray:
    """Control value attributed to each node: u_k on nodes 0..n-1, the
    last interval's value on the terminal node."""
    return np.concatenate([controls, controls[-1:]])


def transcription_objective(controls: np.ndarray, x0: float,
                            params: ModelParams, grid: TimeGrid) -> float:
    """Cost of a piecewise-constant control along its own flow.

    The control is attributed to intervals, so the quadrature is the
    per-interval trapezoid sum dt * (C*u_j^2 - alpha*u_j*(x_j+x_{j+1})/2):
    uniform effective weight per control value, no boundary-node bias.
    """
    states = _state_nodes(x0, controls, params, grid)
    return _interval_cost(controls, states, params, grid)


def _interval_cost(controls, states, params, grid):
    dt = grid.dt
    x_mean = 0.5 * (states[:-1] + states[1:])
    terms = params.cost_c * controls ** 2 - params.alpha * controls * x_mean
    return float(dt * np.sum(terms))


def _objective_and_gradient(controls, x0, params, grid):
    """Cost plus its exact-per-interval sensitivity gradient.

    Per-interval sensitivities s_j = dx/du_j obey the same linear
    variational equation for every j, so one cumulative propagator
    P_k = prod Phi_i turns all of them into s_j(t_k) = gamma_j * P_k /
    P_{j+1}; the gradient sum then collapses to a suffix sum.
    """
    dt = grid.dt
    n = grid.n_steps
    beta, xi, alpha, cost_c = params.beta, params.xi_cost, params.alpha, params.cost_c
    states = np.empty(n + 1)
    phis = np.empty(n)     # one-step propagators of the variational equation
    gammas = np.empty(n)   # one-step forced responses (sensitivity births)
    states[0] = x0
    x = float(x0)
    for k in range(n):
        off = beta * controls[k] - xi
        k1 = x * (1.0 - x) * off
        x2 = x + 0.5 * dt * k1
        k2 = x2 * (1.0 - x2) * off
        x3 = x + 0.5 * dt * k2
        k3 = x3 * (1.0 - x3) * off
        x4 = x + dt * k3
        k4 = x4 * (1.0 - x4) * off

        a1 = (1.0 - 2.0 * x) * off
        a2 = (1.0 - 2.0 * x2) * off
        a3 = (1.0 - 2.0 * x3) * off
        a4 = (1.0 - 2.0 * x4) * off
        p1 = a1
        p2 = a2 * (1.0 + 0.5 * dt * p1)
        p3 = a3 * (1.0 + 0.5 * dt * p2)
        p4 = a4 * (1.0 + dt * p3)
        phis[k] = 1.0 + (dt / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)

        b1 = beta * x * (1.0 - x)
        b2 = beta * x2 * (1.0 - x2)
        b3 = beta * x3 * (1.0 - x3)
        b4 = beta * x4 * (1.0 - x4)
        q1 = b1
        q2 = a2 * (0.5 * dt * q1) + b2
        q3 = a3 * (0.5 * dt * q2) + b3
        q4 = a4 * (dt * q3) + b4
        gammas[k] = (dt / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4)

        x = min(1.0, max(0.0, x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)))
        states[k + 1] = x

    objective = _interval_cost(controls, states, params, grid)

    # sensitivity of the state nodes appears in the cost with weight
    # v_m = dt*(u_{m-1} + u_m)/2 (interval-trapezoid shares), m = 1..n
    v = np.empty(n + 1)
    v[0] = 0.0
    v[1:n] = 0.5 * dt * (controls[:-1] + controls[1:])
    v[n] = 0.5 * dt * controls[-1]
    cumulative = np.concatenate([[1.0], np.cumprod(phis)])  # P_0..P_n
    weighted = v * cumulative                                # c_m over nodes
    tail = np.cumsum(weighted[::-1])[::-1]                   # sum_{i>=m} c_i
    x_mean = 0.5 * (states[:-1] + states[1:])
    grad = dt * (2.0 * cost_c * controls - alpha * x_mean)
    grad = grad - alpha * gammas * tail[1:] / cumulative[1:]
    return objective, grad


DEFAULT_START_LEVELS = (0.0, 0.5, 1.0, 1.5)


def solve_transcription(x0: float, params: ModelParams, grid: TimeGrid,
                        enforce_nonneg: bool = False,
                        tol: float = 1e-8,
                        max_iters: int = 50000,
                        start_levels: tuple = DEFAULT_START_LEVELS) -> TranscriptionSolution:
    """Optimize the per-interval control values by projected descent.

    Projection clamps the control at 0 when enforce_nonneg is set (the
    default mirrors the unconstrained reduced problem). The cost has
    distinct strategy basins (let the share decay cheaply vs. invest and
    saturate it), so the descent is run from one constant start per
    entry of `start_levels` and the best converged result wins. Descent
    uses spectral (Barzilai-Borwein) steps with an Armijo backtracking
    safeguard and runs until the projected-gradient norm drops below
    `tol`. Non-convergence is reported through the flag, never raised.
    """
    if not 0.0 < x0 < 1.0:
        raise ValueError(f"x0 must be inside (0, 1), got {x0}")
    best = None
    for level in start_levels:
        candidate = _descend(np.full(grid.n_steps, float(level)), x0, params,
                             grid, enforce_nonneg, tol, max_iters)
        if best is None or candidate[1] < best[1] - 1e-12 \
                or (abs(candidate[1] - best[1]) <= 1e-12
                    and candidate[2] < best[2]):
            best = candidate
    u, objective, residual, converged, iterations = best
    return TranscriptionSolution(grid=grid, controls=u, objective=objective,
                                 x0=x0, converged=converged,
                                 grad_norm=residual, iterations=iterations)


def _descend(u: np.ndarray, x0: float, params: ModelParams, grid: TimeGrid,
             enforce_nonneg: bool, tol: float, max_iters: int):
    def project(v):
        return np.maximum(v, 0.0) if enforce_nonneg else v

    u = project(u)
    obj, grad = _objective_and_gradient(u, x0, params, grid)
    # inverse of the dominant diagonal curvature 2*C*dt
    step = 1.0 / (2.0 * params.cost_c * grid.dt)
    converged = False
    iterations = 0
    stalled = 0
    residual = float(np.linalg.norm(u - project(u - grad)))
    best_residual = residual
    while iterations < max_iters:
        if residual <= tol:
            converged = True
            break
        if stalled >= 100:
            break
        t = step
        if iterations == 0:
            # keep the first move inside the starting basin
            largest = float(np.max(np.abs(grad)))
            if largest > 0:
                t = min(t, 0.25 / largest)
        accepted = None
        while t >= 1e-16:
            candidate = project(u - t * grad)
            direction = u - candidate
            required = 1e-4 * float(np.dot(grad, direction))
            cand_obj = transcription_objective(candidate, x0, params, grid)
            if required <= 1e-14 * max(1.0, abs(obj)):
                # decrease demanded is below fp resolution of the cost;
                # take the spectral step unconditionally
                accepted = (candidate, cand_obj)
                break
            if cand_obj <= obj - required:
                accepted = (candidate, cand_obj)
                break
            t *= 0.5
        if accepted is None:
            break
        u_new, obj = accepted
        grad_new = _objective_and_gradient(u_new, x0, params, grid)[1]
        du = u_new - u
        dg = grad_new - grad
        dgdu = float(np.dot(du, dg))
        if dgdu > 0:
            step = float(np.dot(du, du)) / dgdu
            step = min(max(step, _BB_CLIP[0]), _BB_CLIP[1])
        u, grad = u_new, grad_new
        residual = float(np.linalg.norm(u - project(u - grad)))
        if residual < best_residual:
            best_residual = residual
            stalled = 0
        else:
            stalled += 1
        iterations += 1

    objective = transcription_objective(u, x0, params, grid)
    return u, objective, residual, converged, iterations


def _costate_nodes(states: np.ndarray, controls: np.ndarray,
                   params: ModelParams, grid: TimeGrid) -> np.ndarray:
    """Backward RK4 of the costate equation from lam(T) = 0."""
    dt = grid.dt
    n = grid.n_steps
    alpha, beta, xi = params.alpha, params.beta, params.xi_cost
    lam = np.empty(n + 1)
    lam[n] = 0.0
    value = 0.0
    for k in range(n - 1, -1, -1):
        u = controls[k]
        off = beta * u - xi
        x_hi = states[k + 1]
        x_mid = 0.5 * (states[k] + states[k + 1])
        x_lo = states[k]

        def rate(x, lam_val):
            # reversed time: d(lam)/d(tau) = -alpha*u + lam*(1-2x)*off
            return -alpha * u + lam_val * (1.0 - 2.0 * x) * off

        m1 = rate(x_hi, value)
        m2 = rate(x_mid, value + 0.5 * dt * m1)
        m3 = rate(x_mid, value + 0.5 * dt * m2)
        m4 = rate(x_lo, value + dt * m3)
        value = value + (dt / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
        lam[k] = value
    return lam


def pmp_residual(candidate, x0: float, params: ModelParams,
                 grid: TimeGrid) -> float:
    """Worst stationarity violation of a candidate control.

    `candidate` is either a TranscriptionSolution or an array of
    per-interval control values (e.g. a surface control sampled on the
    grid). The state is re-integrated, the costate integrated backward
    from zero, and the residual is the max over nodes of
    |u - max(0, (alpha*x - lam*beta*x*(1-x)) / (2C))|.
    """
    if isinstance(candidate, TranscriptionSolution):
        controls = candidate.controls
    else:
        controls = np.asarray(candidate, dtype=float)
    if controls.shape != (grid.n_steps,):
        raise ValueError(f"candidate must provide n_steps={grid.n_steps} "
                         f"control values, got shape {controls.shape}")
    states = _state_nodes(x0, controls, params, grid)
    lam = _costate_nodes(states, controls, params, grid)
    stationary = (params.alpha * states
                  - lam * params.beta * states * (1.0 - states)) \
        / (2.0 * params.cost_c)
    stationary = np.maximum(stationary, 0.0)
    return float(np.max(np.abs(_node_controls(controls) - stationary)))

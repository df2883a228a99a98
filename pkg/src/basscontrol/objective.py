"""Performance index of the control surface and its Monte Carlo checks.

The deterministic index for one initial condition is

    J(a; x0) = integral_0^T ( C*u^2 - alpha*phi*u ) dt

with u = u(t, x0) from the cosine surface and phi the deterministic flow
started at x0. Quadrature is composite trapezoid on the integrator's own
grid. The aggregate index sums J over a set of initial conditions in
canonical (sorted) order.

The stochastic estimators verify by simulation that both noise variants
(additive dynamics noise, noisy observer) leave the expected index equal
to the deterministic one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import BasisTables, FourierSurface
from .model import ModelParams
from .simulate import TimeGrid, em_paths

NOISE_MODELS = ("dynamics", "observer")


@dataclass(frozen=True)
class X0Grid:
    """Ordered initial conditions inside [lo, hi], a subset of [0, 1].

    Points are canonicalized to ascending order on construction, so the
    aggregate objective and gradients do not depend on the order in
    which points were supplied.
    """

    points: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise ValueError("X0Grid needs at least one point")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("X0Grid points must be distinct")
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise ValueError(f"need 0 <= lo < hi <= 1, got [{self.lo}, {self.hi}]")
        if pts[0] < self.lo or pts[-1] > self.hi:
            raise ValueError("X0Grid points must lie within [lo, hi]")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, lo: float, hi: float, count: int) -> "X0Grid":
        return cls(np.linspace(lo, hi, count), lo, hi)

    @classmethod
    def default(cls) -> "X0Grid":
        """19 points, x0 in {0.05, 0.10, ..., 0.95}."""
        return cls.uniform(0.05, 0.95, 19)


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    quad_rule: str
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"objective value must be finite, got {self.value}")


def trapezoid_weights(grid: TimeGrid) -> np.ndarray:
    w = np.full(grid.n_steps + 1, grid.dt)
    w[0] = 0.5 * grid.dt
    w[-1] = 0.5 * grid.dt
    return w


def simulate_phi(tables: BasisTables, params: ModelParams,
                 flat_coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """RK4 flow for every x0 column of the tables, plus the control values.

    Same scheme as simulate.integrate_deterministic (clamp to [0, 1]
    after each full step), vectorized across initial conditions.
    Returns (phi, u_nodes), both of shape (n_steps+1, n_x0).
    """
    u_nodes = tables.control_nodes(flat_coeffs)
    u_mids = tables.control_mids(flat_coeffs)
    off_nodes = params.beta * u_nodes - params.xi_cost
    off_mids = params.beta * u_mids - params.xi_cost
    dt = tables.grid.dt
    phi = np.empty_like(u_nodes)
    x = tables.x0_points.astype(float).copy()
    phi[0] = x
    for k in range(tables.grid.n_steps):
        o0, om, o1 = off_nodes[k], off_mids[k], off_nodes[k + 1]
        k1 = x * (1.0 - x) * o0
        xs = x + 0.5 * dt * k1
        k2 = xs * (1.0 - xs) * om
        xs = x + 0.5 * dt * k2
        k3 = xs * (1.0 - xs) * om
        xs = x + dt * k3
        k4 = xs * (1.0 - xs) * o1
        x = np.clip(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0, 1.0)
        phi[k + 1] = x
    return phi, u_nodes


def objective_columns(tables: BasisTables, params: ModelParams,
                      flat_coeffs: np.ndarray,
                      penalty_weight: float = 0.0) -> np.ndarray:
    """Per-x0 objective values for every column of the tables.

    Column values are reduced one by one so they do not depend on which
    other columns are present (aggregate additivity is exact).
    """
    phi, u_nodes = simulate_phi(tables, params, flat_coeffs)
    integrand = params.cost_c * u_nodes ** 2 - params.alpha * phi * u_nodes
    if penalty_weight != 0.0:
        integrand = integrand + penalty_weight * np.minimum(u_nodes, 0.0) ** 2
    w = trapezoid_weights(tables.grid)
    return np.array([float(np.dot(w, integrand[:, j]))
                     for j in range(integrand.shape[1])])


def objective_batch(tables: BasisTables, params: ModelParams,
                    flat_batch: np.ndarray,
                    penalty_weight: float = 0.0) -> np.ndarray:
    """Aggregate objective for a batch of coefficient vectors.

    `flat_batch` has shape (B, K); returns the (B,) aggregate values
    (summed over the tables' x0 columns in ascending order). One fused
    state recursion over nx*B columns, so finite differencing all
    coefficients costs barely more than a single evaluation.
    """
    flat_batch = np.atleast_2d(np.asarray(flat_batch, dtype=float))
    n_b = flat_batch.shape[0]
    n_x0 = len(tables.x0_points)
    u_nodes = np.einsum("txk,bk->txb", tables.node_basis, flat_batch) \
        .reshape(tables.grid.n_steps + 1, n_x0 * n_b)
    u_mids = np.einsum("txk,bk->txb", tables.mid_basis, flat_batch) \
        .reshape(tables.grid.n_steps, n_x0 * n_b)
    off_nodes = params.beta * u_nodes - params.xi_cost
    off_mids = params.beta * u_mids - params.xi_cost
    dt = tables.grid.dt
    x = np.repeat(tables.x0_points.astype(float), n_b)
    integrand = np.empty_like(u_nodes)
    integrand[0] = params.cost_c * u_nodes[0] ** 2 \
        - params.alpha * x * u_nodes[0]
    for k in range(tables.grid.n_steps):
        o0, om, o1 = off_nodes[k], off_mids[k], off_nodes[k + 1]
        k1 = x * (1.0 - x) * o0
        xs = x + 0.5 * dt * k1
        k2 = xs * (1.0 - xs) * om
        xs = x + 0.5 * dt * k2
        k3 = xs * (1.0 - xs) * om
        xs = x + dt * k3
        k4 = xs * (1.0 - xs) * o1
        x = np.clip(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0, 1.0)
        integrand[k + 1] = params.cost_c * u_nodes[k + 1] ** 2 \
            - params.alpha * x * u_nodes[k + 1]
    if penalty_weight != 0.0:
        integrand = integrand + penalty_weight * np.minimum(u_nodes, 0.0) ** 2
    w = trapezoid_weights(tables.grid)
    per_column = w @ integrand
    return per_column.reshape(n_x0, n_b).sum(axis=0)


def objective_deterministic(surface: FourierSurface, x0: float,
                            params: ModelParams, grid: TimeGrid,
                            penalty_weight: float = 0.0) -> ObjectiveValue:
    """J(a; x0): trapezoid quadrature along the RK4 flow from x0."""
    tables = BasisTables(surface, grid, np.array([x0]))
    value = objective_columns(tables, params, surface.flatten(),
                              penalty_weight)[0]
    return ObjectiveValue(value=value, quad_rule="trapezoid",
                          n_steps=grid.n_steps)


def objective_aggregate(surface: FourierSurface, x0grid: X0Grid,
                        params: ModelParams, grid: TimeGrid,
                        penalty_weight: float = 0.0) -> ObjectiveValue:
    """Sum of the per-x0 objectives over the grid, in ascending x0 order."""
    tables = BasisTables(surface, grid, x0grid.points)
    values = objective_columns(tables, params, surface.flatten(),
                               penalty_weight)
    total = 0.0
    for v in values:
        total += v
    return ObjectiveValue(value=total, quad_rule="trapezoid",
                          n_steps=grid.n_steps)


def _increment_matrix(grid: TimeGrid, n_paths: int, base_seed: int) -> np.ndarray:
    """Row i equals sample_noise(grid, base_seed + i).increments."""
    out = np.empty((n_paths, grid.n_steps))
    scale = np.sqrt(grid.dt)
    for i in range(n_paths):
        rng = np.random.default_rng(base_seed + i)
        out[i] = rng.standard_normal(grid.n_steps) * scale
    return out


def objective_stochastic_mc(surface: FourierSurface, x0: float,
                            params: ModelParams, grid: TimeGrid,
                            n_paths: int, base_seed: int,
                            noise_model: str) -> tuple[float, float]:
    """Monte Carlo estimate of the stochastic index; (mean, std_error).

    noise_model "dynamics": each sample integrates the noisy dynamics by
    Euler-Maruyama and evaluates the integrand along the simulated state.
    noise_model "observer": the deterministic flow is observed through
    discrete white noise and the integrand uses the observed values.
    With sigma = 0 both models degenerate to the deterministic index
    exactly (mean = J_det, std_error = 0).
    """
    if n_paths < 2:
        raise ValueError(f"n_paths must be >= 2, got {n_paths}")
    if noise_model not in NOISE_MODELS:
        raise ValueError(f"noise_model must be one of {NOISE_MODELS}, "
                         f"got {noise_model!r}")
    tables = BasisTables(surface, grid, np.array([x0]))
    flat = surface.flatten()
    if params.sigma == 0.0:
        value = objective_columns(tables, params, flat)[0]
        return value, 0.0

    u = tables.control_nodes(flat)[:, 0]
    w = trapezoid_weights(grid)
    increments = _increment_matrix(grid, n_paths, base_seed)
    if noise_model == "dynamics":
        states = em_paths(x0, u, params, grid.dt, increments)
    else:
        phi = simulate_phi(tables, params, flat)[0][:, 0]
        states = np.tile(phi, (n_paths, 1))
        states[:, :-1] += params.sigma * increments / grid.dt
    integrand = params.cost_c * u ** 2 - params.alpha * states * u
    samples = integrand @ w
    mean = float(np.mean(samples))
    std_error = float(np.std(samples, ddof=1) / np.sqrt(n_paths))
    return mean, std_error


def mc_report(surface: FourierSurface, x0: float, params: ModelParams,
              grid: TimeGrid, n_paths: int, base_seed: int,
              noise_model: str) -> dict:
    """Monte Carlo comparison record against the deterministic index."""
    mean, std_error = objective_stochastic_mc(
        surface, x0, params, grid, n_paths, base_seed, noise_model)
    j_det = objective_deterministic(surface, x0, params, grid).value
    return {
        "model": noise_model,
        "n_paths": n_paths,
        "base_seed": base_seed,
        "mean": mean,
        "std_error": std_error,
        "j_det": j_det,
    }


def superposition_discrepancy(surface: FourierSurface, x0: float,
                              params: ModelParams, grid: TimeGrid,
                              n_paths: int, base_seed: int) -> dict:
    """Compare the simulated SDE against the flow-plus-Brownian overlay.

    The overlay construction x = phi + sigma*W leaves the expected index
    equal to the deterministic one exactly (the Brownian integral has
    zero mean). Simulating the true state-dependent SDE need not: the
    returned discrepancy (SDE mean minus overlay mean, common random
    numbers) isolates how far the overlay premise is from the actual
    dynamics at these parameters.
    """
    if n_paths < 2:
        raise ValueError(f"n_paths must be >= 2, got {n_paths}")
    tables = BasisTables(surface, grid, np.array([x0]))
    flat = surface.flatten()
    u = tables.control_nodes(flat)[:, 0]
    phi = simulate_phi(tables, params, flat)[0][:, 0]
    w = trapezoid_weights(grid)
    j_det = float(np.dot(w, params.cost_c * u ** 2 - params.alpha * phi * u))

    increments = _increment_matrix(grid, n_paths, base_seed)
    sde_states = em_paths(x0, u, params, grid.dt, increments)
    brownian = np.concatenate(
        [np.zeros((n_paths, 1)), np.cumsum(increments, axis=1)], axis=1)
    overlay_states = phi + params.sigma * brownian

    def estimate(states):
        integrand = params.cost_c * u ** 2 - params.alpha * states * u
        samples = integrand @ w
        return (float(np.mean(samples)),
                float(np.std(samples, ddof=1) / np.sqrt(n_paths)))

    sde_mean, sde_se = estimate(sde_states)
    overlay_mean, overlay_se = estimate(overlay_states)
    return {
        "j_det": j_det,
        "sde_mean": sde_mean,
        "sde_std_error": sde_se,
        "overlay_mean": overlay_mean,
        "overlay_std_error": overlay_se,
        "discrepancy": sde_mean - overlay_mean,
    }


def nonnegativity_violation(surface: FourierSurface, x0grid: X0Grid,
                            grid: TimeGrid) -> tuple[float, float]:
    """Scan u over the (t, x0) lattice for violations of u >= 0.

    Returns (largest negative excursion magnitude, fraction of lattice
    points with u < 0). Diagnostic only; nothing is clamped.
    """
    tables = BasisTables(surface, grid, x0grid.points)
    u = tables.control_nodes(surface.flatten())
    max_violation = float(max(0.0, -np.min(u)))
    measure_fraction = float(np.mean(u < 0.0))
    return max_violation, measure_fraction

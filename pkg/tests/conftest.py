import numpy as np
import pytest

import basscontrol as bc

# Reference constants: alpha=2, C=1, beta=1/2, xi=1/4, sigma=0.1, with the
# artifact defaults horizon 25 and dt = 0.02.
REF = dict(alpha=2.0, cost_c=1.0, beta=0.5, xi_cost=0.25, sigma=0.1)
DEFAULT_T = 25.0
DEFAULT_STEPS = 1250


def make_params(horizon_t=DEFAULT_T, **overrides):
    values = {**REF, "horizon_t": horizon_t, **overrides}
    return bc.ModelParams(**values)


def logistic(x0, rate, t):
    """Closed-form solution of dx/dt = rate * x * (1 - x)."""
    e = np.exp(rate * np.asarray(t, dtype=float))
    return x0 * e / (1.0 - x0 + x0 * e)


def logistic_integral(x0, xi, t_end):
    """Closed form of the integral of the u=0 decay flow over [0, t_end]."""
    return -(1.0 / xi) * np.log(1.0 - x0 + x0 * np.exp(-xi * t_end))


@pytest.fixture(scope="session")
def params():
    return make_params()


@pytest.fixture(scope="session")
def grid():
    return bc.TimeGrid(DEFAULT_STEPS, DEFAULT_T)


@pytest.fixture(scope="session")
def x0grid():
    return bc.X0Grid.default()


@pytest.fixture(scope="session")
def solved_m3(params, grid, x0grid):
    initial = bc.FourierSurface.zeros(3, 3, params.horizon_t,
                                      x0grid.lo, x0grid.hi)
    report = bc.solve(initial, x0grid, params, grid)
    assert report.converged
    return report


@pytest.fixture(scope="session")
def solved_m5(solved_m3, params, grid, x0grid):
    report = bc.solve(solved_m3.final_surface.padded(5, 5), x0grid,
                      params, grid)
    assert report.converged
    return report


@pytest.fixture(scope="session")
def oracle_solutions(params, grid, x0grid):
    return {float(x0): bc.solve_transcription(float(x0), params, grid)
            for x0 in x0grid.points}

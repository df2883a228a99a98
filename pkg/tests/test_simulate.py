from pathlib import Path

import numpy as np
import pytest

import basscontrol as bc
from basscontrol.simulate import em_paths

from conftest import logistic, make_params

DATA_DIR = Path(__file__).resolve().parent / "data"


def zero_control(t):
    return 0.0


def test_time_grid_properties():
    grid = bc.TimeGrid(4, 2.0)
    assert grid.dt == 0.5
    times = grid.times()
    assert times[0] == 0.0 and times[-1] == 2.0
    assert len(times) == 5


def test_time_grid_validation():
    with pytest.raises(ValueError):
        bc.TimeGrid(0, 1.0)
    with pytest.raises(ValueError):
        bc.TimeGrid(10, 0.0)


def test_trajectory_shape_validation():
    grid = bc.TimeGrid(5, 1.0)
    with pytest.raises(ValueError):
        bc.Trajectory(grid=grid, states=np.zeros(5))


def test_noise_path_shape_validation():
    grid = bc.TimeGrid(5, 1.0)
    with pytest.raises(ValueError):
        bc.NoisePath(grid=grid, increments=np.zeros(6), seed=0)


def test_deterministic_boundary_invariance_zero():
    params = make_params()
    traj = bc.integrate_deterministic(0.0, lambda t: 5.0, params,
                                      bc.TimeGrid(100, params.horizon_t))
    assert np.all(traj.states == 0.0)


def test_deterministic_boundary_invariance_one():
    params = make_params()
    traj = bc.integrate_deterministic(1.0, lambda t: -3.0, params,
                                      bc.TimeGrid(100, params.horizon_t))
    assert np.all(traj.states == 1.0)


def test_deterministic_matches_logistic_decay():
    # u = 0 turns the dynamics into logistic decay at rate -xi
    params = make_params(horizon_t=4.0)
    grid = bc.TimeGrid(2000, 4.0)
    traj = bc.integrate_deterministic(0.5, zero_control, params, grid)
    exact = logistic(0.5, -params.xi_cost, grid.times())
    assert np.max(np.abs(traj.states - exact)) < 1e-11
    assert traj.states[-1] == pytest.approx(0.26894, abs=5e-6)


def test_deterministic_stays_inside_unit_interval():
    params = make_params(horizon_t=5.0)
    grid = bc.TimeGrid(250, 5.0)
    rng = np.random.default_rng(3)
    for x0 in rng.uniform(0.0, 1.0, 5):
        traj = bc.integrate_deterministic(
            float(x0), lambda t: 2.0 * np.cos(t), params, grid)
        assert np.all((traj.states >= 0.0) & (traj.states <= 1.0))


def test_rk4_fourth_order_convergence():
    params = make_params()
    t_end = params.horizon_t
    errors = []
    for n in (100, 200, 400):
        grid = bc.TimeGrid(n, t_end)
        traj = bc.integrate_deterministic(0.5, zero_control, params, grid)
        exact = logistic(0.5, -params.xi_cost, grid.times())
        errors.append(np.max(np.abs(traj.states - exact)))
    assert errors[0] / errors[1] >= 12.0
    assert errors[1] / errors[2] >= 12.0


def test_x0_validation():
    params = make_params()
    grid = bc.TimeGrid(10, params.horizon_t)
    with pytest.raises(ValueError):
        bc.integrate_deterministic(1.5, zero_control, params, grid)
    with pytest.raises(ValueError):
        bc.integrate_sde(-0.5, zero_control, params,
                         bc.sample_noise(grid, 0))


def test_sample_noise_reproducible():
    grid = bc.TimeGrid(64, 2.0)
    a = bc.sample_noise(grid, 123)
    b = bc.sample_noise(grid, 123)
    assert np.array_equal(a.increments, b.increments)
    assert a.seed == 123
    c = bc.sample_noise(grid, 124)
    assert not np.array_equal(a.increments, c.increments)


def test_sample_noise_terminal_statistics():
    grid = bc.TimeGrid(50, 2.0)
    n_seeds = 10000
    finals = np.array([bc.sample_noise(grid, s).increments.sum()
                       for s in range(n_seeds)])
    sigma_w = np.sqrt(grid.t_end)
    assert abs(finals.mean()) <= 3.0 * sigma_w / np.sqrt(n_seeds)
    assert finals.var() == pytest.approx(grid.t_end, rel=0.10)


def test_brownian_nodes_cumulative():
    grid = bc.TimeGrid(20, 1.0)
    noise = bc.sample_noise(grid, 5)
    w = noise.brownian_nodes()
    assert w[0] == 0.0
    assert w[-1] == pytest.approx(noise.increments.sum(), rel=1e-12)


def test_sde_sigma_zero_is_first_order_euler():
    # EM with sigma=0 degenerates to explicit Euler: O(dt) global error
    params = make_params(sigma=0.0, horizon_t=4.0)
    reference = logistic(0.5, -params.xi_cost, 4.0)
    errors = []
    for n in (200, 400):
        grid = bc.TimeGrid(n, 4.0)
        noise = bc.sample_noise(grid, 0)
        traj = bc.integrate_sde(0.5, zero_control, params, noise)
        errors.append(abs(traj.states[-1] - float(reference)))
    ratio = errors[0] / errors[1]
    assert 1.5 <= ratio <= 2.8


def test_sde_ensemble_mean_matches_deterministic():
    params = make_params(horizon_t=1.0)
    grid = bc.TimeGrid(100, 1.0)
    det = bc.integrate_deterministic(0.5, zero_control, params, grid)
    finals = np.empty(2000)
    for i in range(2000):
        noise = bc.sample_noise(grid, 1000 + i)
        finals[i] = bc.integrate_sde(0.5, zero_control, params, noise).states[-1]
    se = finals.std(ddof=1) / np.sqrt(len(finals))
    assert abs(finals.mean() - det.states[-1]) <= 3.0 * se


def test_sde_golden_path():
    params = make_params()
    grid = bc.TimeGrid(1250, params.horizon_t)
    noise = bc.sample_noise(grid, 42)
    traj = bc.integrate_sde(0.5, zero_control, params, noise)
    golden = np.loadtxt(DATA_DIR / "golden_sde_seed42.csv",
                        delimiter=",", skiprows=1)
    assert np.array_equal(golden[:, 0], grid.times())
    assert np.array_equal(golden[:, 1], traj.states)


def test_em_paths_match_scalar_integrator():
    params = make_params(horizon_t=2.0)
    grid = bc.TimeGrid(40, 2.0)
    u_nodes = np.full(grid.n_steps + 1, 0.7)
    increments = np.stack([bc.sample_noise(grid, 10 + i).increments
                           for i in range(4)])
    batch = em_paths(0.4, u_nodes, params, grid.dt, increments)
    for i in range(4):
        noise = bc.sample_noise(grid, 10 + i)
        single = bc.integrate_sde(0.4, lambda t: 0.7, params, noise)
        assert np.array_equal(batch[i], single.states)


def test_observe_noise_free_is_identity():
    params = make_params(horizon_t=2.0)
    grid = bc.TimeGrid(50, 2.0)
    traj = bc.integrate_deterministic(0.5, zero_control, params, grid)
    noise = bc.sample_noise(grid, 7)
    observed = bc.observe(traj, noise, 0.0)
    assert np.array_equal(observed.states, traj.states)
    assert observed is not traj


def test_observe_zero_mean_per_node():
    grid = bc.TimeGrid(20, 1.0)
    params = make_params(horizon_t=1.0)
    traj = bc.integrate_deterministic(0.5, zero_control, params, grid)
    sigma = 0.1
    n_seeds = 2000
    deviations = np.empty((n_seeds, grid.n_steps + 1))
    for i in range(n_seeds):
        noise = bc.sample_noise(grid, 500 + i)
        deviations[i] = bc.observe(traj, noise, sigma).states - traj.states
    assert np.all(deviations[:, -1] == 0.0)  # terminal node carries no noise
    node_std = sigma / np.sqrt(grid.dt)
    se = node_std / np.sqrt(n_seeds)
    assert np.max(np.abs(deviations.mean(axis=0))) <= 3.0 * se


def test_observe_integral_telescopes_to_brownian_total():
    # left-Riemann integral of the white-noise overlay equals sigma * W(T)
    grid = bc.TimeGrid(32, 2.0)
    params = make_params(horizon_t=2.0)
    traj = bc.integrate_deterministic(0.3, zero_control, params, grid)
    sigma = 0.2
    for seed in range(5):
        noise = bc.sample_noise(grid, seed)
        y = bc.observe(traj, noise, sigma)
        riemann = np.sum((y.states - traj.states)[:-1]) * grid.dt
        assert riemann == pytest.approx(sigma * noise.increments.sum(),
                                        rel=1e-12)


def test_observe_grid_mismatch():
    params = make_params(horizon_t=2.0)
    traj = bc.integrate_deterministic(0.5, zero_control, params,
                                      bc.TimeGrid(50, 2.0))
    noise = bc.sample_noise(bc.TimeGrid(49, 2.0), 0)
    with pytest.raises(ValueError, match="grid"):
        bc.observe(traj, noise, 0.1)


def test_em_strong_order_for_additive_noise():
    # error against a dt/16 reference driven by the same refined increments
    params = make_params(horizon_t=2.0)
    base = 50
    fine_grid = bc.TimeGrid(base * 16, 2.0)
    fine_noise = bc.sample_noise(fine_grid, 11)
    fine = bc.integrate_sde(0.5, zero_control, params, fine_noise)

    def coarse_error(factor):
        n = base * factor
        stride = (base * 16) // n
        grid = bc.TimeGrid(n, 2.0)
        agg = fine_noise.increments.reshape(n, stride).sum(axis=1)
        noise = bc.NoisePath(grid=grid, increments=agg, seed=11)
        coarse = bc.integrate_sde(0.5, zero_control, params, noise)
        return np.max(np.abs(coarse.states - fine.states[::stride]))

    err_dt = coarse_error(1)
    err_half = coarse_error(2)
    ratio = err_dt / err_half
    assert 1.0 <= ratio <= 4.0  # linear in dt within a factor of 2


def test_trajectory_csv_format():
    params = make_params(horizon_t=1.0)
    grid = bc.TimeGrid(4, 1.0)
    traj = bc.integrate_deterministic(0.5, zero_control, params, grid)
    text = bc.trajectory_to_csv(traj)
    lines = text.strip().split("\n")
    assert lines[0] == "t,x"
    assert len(lines) == grid.n_steps + 2
    parsed = np.array([[float(v) for v in line.split(",")]
                       for line in lines[1:]])
    assert np.array_equal(parsed[:, 1], traj.states)  # 17 digits round-trip


def test_trajectory_csv_with_observer():
    params = make_params(horizon_t=1.0)
    grid = bc.TimeGrid(4, 1.0)
    traj = bc.integrate_deterministic(0.5, zero_control, params, grid)
    observed = bc.observe(traj, bc.sample_noise(grid, 1), 0.1)
    text = bc.trajectory_to_csv(traj, observed)
    lines = text.strip().split("\n")
    assert lines[0] == "t,x,y"
    assert len(lines[1].split(",")) == 3

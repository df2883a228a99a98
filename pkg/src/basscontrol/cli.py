"""Command-line front end: solve, surface, paths, verify.

Every command is a pure function of (config, input files, seeds): reruns
with the same inputs produce byte-identical outputs. Output location is
--out, else the BASSCONTROL_OUT environment variable, else the current
directory. Exit codes: 0 success, 1 invalid input, 2 verification
failure.

CSV files start with a `#schema=` comment line followed by the column
header; JSON files carry a `schema` key. Values are written with 17
significant digits.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baseline import pmp_residual, solve_transcription
from .fourier import FourierSurface, load_coefficients, save_coefficients
from .model import ModelParams
from .objective import X0Grid, mc_report, nonnegativity_violation, \
    objective_deterministic, superposition_discrepancy
from .optimize import OptimizerConfig, gradient_fd, gradient_sensitivity, solve
from .simulate import TimeGrid, integrate_deterministic, integrate_sde, \
    observe, sample_noise

OUT_ENV_VAR = "BASSCONTROL_OUT"
_FMT = "%.17g"

NOISE_CHOICES = ("dynamics", "observer", "none")

# Reference parameter set (alpha=2, C=1, beta=1/2, xi=1/4, sigma=0.1) with
# the artifact defaults: horizon 25, dt = 0.02, 19 initial conditions.
_BASE_CONFIG = {
    "params": {
        "alpha": 2.0,
        "cost_c": 1.0,
        "beta": 0.5,
        "xi_cost": 0.25,
        "sigma": 0.1,
        "horizon_t": 25.0,
    },
    "orders": [5, 5],
    "x0_grid": {"lo": 0.05, "hi": 0.95, "count": 19},
    "time_grid": {"n_steps": 1250},
    "optimizer": {},
    "noise_model": "dynamics",
    "n_paths": 2000,
    "base_seed": 1234,
    "out_dir": None,
}

PRESETS = {
    "paper": {},
    "paper-m3": {"orders": [3, 3]},
    "paper-m5": {"orders": [5, 5]},
}


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    orders: tuple
    x0grid: X0Grid
    grid: TimeGrid
    optimizer: OptimizerConfig
    noise_model: str
    n_paths: int
    base_seed: int
    out_dir: str | None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(_BASE_CONFIG)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged = _merge(copy.deepcopy(_BASE_CONFIG), data)
        orders = merged["orders"]
        if len(orders) != 2 or any(int(o) < 0 for o in orders):
            raise ValueError(f"orders must be two nonnegative ints, got {orders}")
        xg = merged["x0_grid"]
        params = ModelParams.from_dict(merged["params"])
        noise_model = merged["noise_model"]
        if noise_model not in NOISE_CHOICES:
            raise ValueError(f"noise_model must be one of {NOISE_CHOICES}, "
                             f"got {noise_model!r}")
        try:
            optimizer = OptimizerConfig(**merged["optimizer"])
        except TypeError as exc:
            raise ValueError(f"bad optimizer config: {exc}") from None
        return cls(
            params=params,
            orders=(int(orders[0]), int(orders[1])),
            x0grid=X0Grid.uniform(float(xg["lo"]), float(xg["hi"]),
                                  int(xg["count"])),
            grid=TimeGrid(int(merged["time_grid"]["n_steps"]),
                          params.horizon_t),
            optimizer=optimizer,
            noise_model=noise_model,
            n_paths=int(merged["n_paths"]),
            base_seed=int(merged["base_seed"]),
            out_dir=merged["out_dir"],
        )


def _merge(base: dict, override: dict) -> dict:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = _merge(base[key], value)
        else:
            base[key] = value
    return base


def _load_config(args) -> ExperimentConfig:
    data: dict = {}
    preset = getattr(args, "preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; "
                             f"choose from {sorted(PRESETS)}")
        data = _merge(data, copy.deepcopy(PRESETS[preset]))
    config_path = getattr(args, "config", None)
    if config_path is not None:
        with open(config_path) as fh:
            data = _merge(data, json.load(fh))
    if getattr(args, "seed", None) is not None:
        data["base_seed"] = args.seed
    if getattr(args, "noise_model", None) is not None:
        data["noise_model"] = args.noise_model
    if getattr(args, "out", None) is not None:
        data["out_dir"] = args.out
    return ExperimentConfig.from_dict(data)


def _out_dir(config: ExperimentConfig) -> Path:
    out = config.out_dir or os.environ.get(OUT_ENV_VAR) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _surface_for(config: ExperimentConfig) -> FourierSurface:
    return FourierSurface.zeros(config.orders[0], config.orders[1],
                                config.params.horizon_t,
                                config.x0grid.lo, config.x0grid.hi)


def cmd_solve(args) -> int:
    config = _load_config(args)
    initial = _surface_for(config)
    if args.warm_start is not None:
        warm = load_coefficients(args.warm_start)
        if (warm.horizon_t != initial.horizon_t
                or warm.x0_lo != initial.x0_lo
                or warm.x0_hi != initial.x0_hi):
            raise ValueError("warm-start file domain does not match config")
        initial = warm.padded(config.orders[0], config.orders[1])
    report = solve(initial, config.x0grid, config.params, config.grid,
                   config.optimizer)
    out = _out_dir(config)
    save_coefficients(report.final_surface, out / "coefficients.json")
    _write_json(out / "solve_report.json", report.to_json_dict())
    print(f"aggregate objective: {report.final_objective:.12g}")
    print(f"converged: {report.converged} "
          f"(iterations: {report.iterations_used})")
    return 0


def _surface_control(surface: FourierSurface, x0: float):
    return lambda t: surface.evaluate(t, x0)


def cmd_surface(args) -> int:
    config = _load_config(args)
    surface = load_coefficients(args.coefficients)
    try:
        nt, nx = (int(v) for v in args.lattice.lower().split("x"))
    except ValueError:
        raise ValueError(f"lattice must look like 101x19, got {args.lattice!r}")
    if nt < 2 or nx < 1:
        raise ValueError("lattice needs at least 2 time and 1 x0 points")
    noise_model = args.noise_model or "none"
    times = np.linspace(0.0, surface.horizon_t, nt)
    x0s = np.linspace(surface.x0_lo, surface.x0_hi, nx)
    grid = TimeGrid(nt - 1, surface.horizon_t)

    columns = "t,x0,u,x_det"
    if noise_model != "none":
        columns += ",x_sample"
    lines = [f"#schema=surface-v1 noise_model={noise_model}", columns]
    for j, x0 in enumerate(x0s):
        control = _surface_control(surface, float(x0))
        det = integrate_deterministic(float(x0), control, config.params, grid)
        sample = None
        if noise_model == "dynamics":
            noise = sample_noise(grid, config.base_seed + j)
            sample = integrate_sde(float(x0), control, config.params, noise)
        elif noise_model == "observer":
            noise = sample_noise(grid, config.base_seed + j)
            sample = observe(det, noise, config.params.sigma)
        for i, t in enumerate(times):
            u = surface.evaluate(float(t), float(x0))
            row = f"{_FMT % t},{_FMT % x0},{_FMT % u},{_FMT % det.states[i]}"
            if sample is not None:
                row += f",{_FMT % sample.states[i]}"
            lines.append(row)
    out = _out_dir(config)
    (out / "surface.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {nt * nx} lattice rows to {out / 'surface.csv'}")
    return 0


def cmd_paths(args) -> int:
    config = _load_config(args)
    surface = load_coefficients(args.coefficients)
    x0 = args.x0
    if not surface.x0_lo <= x0 <= surface.x0_hi:
        raise ValueError(f"x0={x0} outside the surface domain "
                         f"[{surface.x0_lo}, {surface.x0_hi}]")
    if args.n_samples < 1:
        raise ValueError("n-samples must be >= 1")
    noise_model = args.noise_model or "dynamics"
    grid = config.grid
    control = _surface_control(surface, x0)
    det = integrate_deterministic(x0, control, config.params, grid)
    samples = []
    for i in range(args.n_samples):
        noise = sample_noise(grid, config.base_seed + i)
        if noise_model == "dynamics":
            samples.append(integrate_sde(x0, control, config.params, noise))
        elif noise_model == "observer":
            samples.append(observe(det, noise, config.params.sigma))
        else:
            samples.append(det)
    header = "t,x_det," + ",".join(f"sample_{i + 1}"
                                   for i in range(args.n_samples))
    lines = [f"#schema=paths-v1 noise_model={noise_model} x0={_FMT % x0}",
             header]
    times = grid.times()
    for k, t in enumerate(times):
        row = [_FMT % t, _FMT % det.states[k]]
        row += [_FMT % s.states[k] for s in samples]
        lines.append(",".join(row))
    out = _out_dir(config)
    (out / "paths.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(times)} rows ({args.n_samples} sample paths) "
          f"to {out / 'paths.csv'}")
    return 0


def _verify_checks(config: ExperimentConfig, surface: FourierSurface) -> list:
    checks = []
    params, grid = config.params, config.grid

    # gradient fidelity on seeded random coefficient vectors
    rng = np.random.default_rng(config.base_seed)
    worst_rel = 0.0
    worst_abs = 0.0
    for _ in range(3):
        probe = surface.with_coeffs(
            rng.normal(0.0, 0.1, surface.coeffs.shape))
        g_fd = gradient_fd(probe, config.x0grid, params, grid,
                           config.optimizer.fd_epsilon)
        g_sens = np.zeros_like(g_fd)
        for x0 in config.x0grid.points:
            g_sens += gradient_sensitivity(probe, float(x0), params, grid)
        big = np.abs(g_fd) >= 1e-8
        diff = np.abs(g_sens - g_fd)
        worst_rel = max(worst_rel, float(np.max(
            diff[big] / np.abs(g_fd[big]), initial=0.0)))
        worst_abs = max(worst_abs, float(np.max(diff[~big], initial=0.0)))
    checks.append({
        "name": "gradient_sensitivity_vs_fd",
        "passed": bool(worst_rel <= 1e-4 and worst_abs <= 1e-8),
        "worst_relative_error": worst_rel,
        "worst_small_component_error": worst_abs,
    })

    # noise equivalence at representative initial conditions
    probe_x0s = [x0 for x0 in (0.35, 0.5, 0.75)
                 if config.x0grid.lo <= x0 <= config.x0grid.hi]
    for model in ("dynamics", "observer"):
        results = []
        passed = True
        for x0 in probe_x0s:
            rec = mc_report(surface, x0, params, grid, config.n_paths,
                            config.base_seed, model)
            gap = abs(rec["mean"] - rec["j_det"])
            ok = bool(gap <= 3.0 * rec["std_error"])
            passed = passed and ok
            results.append({"x0": x0, **rec, "within_3se": ok})
        checks.append({
            "name": f"noise_equivalence_{model}",
            "passed": passed,
            "results": results,
        })

    # overlay diagnostic (not pass/fail): SDE mean vs flow+Brownian mean
    diag = [dict(x0=x0, **superposition_discrepancy(
        surface, x0, params, grid, config.n_paths, config.base_seed))
        for x0 in probe_x0s]
    checks.append({"name": "superposition_diagnostic", "passed": True,
                   "results": diag})

    # oracle gap and lower bound per x0
    gap_results = []
    gaps_ok = True
    residual_worst = 0.0
    for x0 in config.x0grid.points:
        x0 = float(x0)
        oracle = solve_transcription(x0, params, grid)
        j_f = objective_deterministic(surface, x0, params, grid).value
        gap = (j_f - oracle.objective) / abs(oracle.objective)
        lower_ok = bool(oracle.objective <= j_f + 1e-6)
        gaps_ok = gaps_ok and lower_ok and gap <= 0.05
        residual_worst = max(residual_worst,
                             pmp_residual(oracle, x0, params, grid))
        gap_results.append({"x0": x0, "j_oracle": oracle.objective,
                            "j_fourier": j_f, "relative_gap": float(gap),
                            "lower_bound_ok": lower_ok})
    checks.append({"name": "oracle_gap", "passed": bool(gaps_ok),
                   "results": gap_results})
    checks.append({"name": "pmp_residual", "passed": bool(residual_worst <= 1e-3),
                   "worst_residual": float(residual_worst)})

    max_viol, frac = nonnegativity_violation(surface, config.x0grid, grid)
    checks.append({"name": "nonnegativity_diagnostic", "passed": True,
                   "max_violation": max_viol, "negative_fraction": frac})
    return checks


def cmd_verify(args) -> int:
    config = _load_config(args)
    if args.coefficients is not None:
        surface = load_coefficients(args.coefficients)
    else:
        report = solve(_surface_for(config), config.x0grid, config.params,
                       config.grid, config.optimizer)
        surface = report.final_surface
    checks = _verify_checks(config, surface)
    passed = all(c["passed"] for c in checks)
    payload = {"schema": "verify-report-v1", "passed": passed,
               "checks": checks}
    out = _out_dir(config)
    _write_json(out / "verify_report.json", payload)
    for check in checks:
        print(f"[{'PASS' if check['passed'] else 'FAIL'}] {check['name']}")
    print(f"verification {'passed' if passed else 'FAILED'}; "
          f"report: {out / 'verify_report.json'}")
    return 0 if passed else 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="basscontrol",
        description="Cosine-series optimal control surfaces for the "
                    "controlled adoption model")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help=f"named preset: {sorted(PRESETS)}")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="base RNG seed")
        p.add_argument("--noise-model", choices=NOISE_CHOICES,
                       dest="noise_model")

    p_solve = sub.add_parser("solve", help="fit the control surface")
    common(p_solve)
    p_solve.add_argument("--warm-start", help="coefficient file to start from")
    p_solve.set_defaults(func=cmd_solve)

    p_surface = sub.add_parser("surface",
                               help="tabulate u(t, x0) and state surfaces")
    common(p_surface)
    p_surface.add_argument("coefficients", help="coefficient JSON file")
    p_surface.add_argument("--lattice", default="101x19",
                           help="time-by-x0 lattice, e.g. 101x19")
    p_surface.set_defaults(func=cmd_surface)

    p_paths = sub.add_parser("paths",
                             help="sample state paths for one x0")
    common(p_paths)
    p_paths.add_argument("coefficients", help="coefficient JSON file")
    p_paths.add_argument("--x0", type=float, required=True)
    p_paths.add_argument("--n-samples", type=int, default=5,
                         dest="n_samples")
    p_paths.set_defaults(func=cmd_paths)

    p_verify = sub.add_parser("verify", help="run the verification battery")
    common(p_verify)
    p_verify.add_argument("--coeffs", dest="coefficients",
                          help="verify an existing coefficient file "
                               "instead of solving first")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

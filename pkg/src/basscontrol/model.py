"""Problem constants and right-hand sides of the market-share dynamics.

Three parameter sets live here: the two-strategy replicator interaction,
the innovation/imitation diffusion equation, and the controlled dynamics
ẋ = x(1-x)(beta*u - xi) together with the cost/revenue coefficients and
the noise intensity used by the stochastic variants.

All functions are pure and validate their state arguments; integrators
apply any clamping policy themselves and evaluate the raw formulas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields


@dataclass(frozen=True)
class ModelParams:
    """Scalar constants of the controlled adoption problem.

    alpha      revenue coefficient (currency per share per effort)
    cost_c     effort cost coefficient (currency per effort^2 * time)
    beta       control effectiveness (1 / (effort * time))
    xi_cost    next-best-alternative rate (1/time); also the drift offset
               of the stochastic dynamics
    sigma      noise intensity (share / sqrt(time))
    horizon_t  terminal time (time)
    """

    alpha: float
    cost_c: float
    beta: float
    xi_cost: float
    sigma: float
    horizon_t: float

    def __post_init__(self):
        if not self.cost_c > 0:
            raise ValueError(f"cost_c must be > 0, got {self.cost_c}")
        if not self.horizon_t > 0:
            raise ValueError(f"horizon_t must be > 0, got {self.horizon_t}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.xi_cost >= 0:
            raise ValueError(f"xi_cost must be >= 0, got {self.xi_cost}")

    def to_json(self) -> str:
        """Serialize to a flat JSON object with exactly the field names."""
        return json.dumps({f.name: getattr(self, f.name) for f in fields(self)},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        """Parse a flat JSON object; unknown keys are rejected."""
        data = json.loads(text)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown ModelParams keys: {sorted(unknown)}")
        missing = names - set(data)
        if missing:
            raise ValueError(f"missing ModelParams keys: {sorted(missing)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class ReplicatorParams:
    """Interaction payoff of the two-strategy skew-symmetric game.

    The payoff matrix is [[0, -rho], [rho, 0]], fully determined by rho.
    """

    rho: float


@dataclass(frozen=True)
class BassParams:
    """Innovation/imitation coefficients of the diffusion equation."""

    p_innovation: float
    q_imitation: float

    def __post_init__(self):
        if not self.p_innovation >= 0:
            raise ValueError(f"p_innovation must be >= 0, got {self.p_innovation}")
        if not self.q_imitation >= 0:
            raise ValueError(f"q_imitation must be >= 0, got {self.q_imitation}")


def _check_share(x: float, name: str = "x") -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must be within [0, 1], got {x}")


def replicator_rhs(x1: float, x2: float, params: ReplicatorParams) -> tuple[float, float]:
    """Growth rates (dx1/dt, dx2/dt) of the two strategy shares.

    Returns (-rho*x1*x2, rho*x2*x1); the components sum to zero exactly,
    so x1 + x2 is conserved.
    """
    _check_share(x1, "x1")
    _check_share(x2, "x2")
    flow = params.rho * x1 * x2
    return (-flow, flow)


def bass_rhs(x: float, params: BassParams) -> float:
    """Adoption rate p*(1-x) + q*(1-x)*x of the diffusion equation."""
    _check_share(x)
    return params.p_innovation * (1.0 - x) + params.q_imitation * (1.0 - x) * x


def controlled_rhs(x: float, u: float, params: ModelParams) -> float:
    """Drift x*(1-x)*(beta*u - xi_cost) of the controlled dynamics.

    Zero at x in {0, 1} regardless of u; positive on (0, 1) iff
    beta*u > xi_cost.
    """
    _check_share(x)
    return x * (1.0 - x) * (params.beta * u - params.xi_cost)

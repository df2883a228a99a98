"""Two-variable cosine series for the control surface u(t, x0).

The surface is a coefficient matrix a of shape (M+1, N+1) evaluated as

    u(t, x0) = sum_{m,n} a[m, n] * cos(m*pi*t/T) * cos(n*pi*(x0-lo)/L)

with L = x0_hi - x0_lo, so the published form is recovered when the
initial-condition interval starts at 0. No nonnegativity is enforced
here; violation of u >= 0 is diagnosed at the objective level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .simulate import TimeGrid

_DOMAIN_RTOL = 1e-9


@dataclass(frozen=True)
class FourierSurface:
    """Cosine-series control surface over [0, T] x [x0_lo, x0_hi]."""

    order_m: int
    order_n: int
    coeffs: np.ndarray
    horizon_t: float
    x0_lo: float
    x0_hi: float

    def __post_init__(self):
        expected = (self.order_m + 1, self.order_n + 1)
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs must have shape {expected}, "
                             f"got {self.coeffs.shape}")
        if not self.horizon_t > 0:
            raise ValueError(f"horizon_t must be > 0, got {self.horizon_t}")
        if not self.x0_hi > self.x0_lo:
            raise ValueError("x0 interval must have positive length, got "
                             f"[{self.x0_lo}, {self.x0_hi}]")

    @property
    def x0_range(self) -> float:
        """Length L of the initial-condition interval."""
        return self.x0_hi - self.x0_lo

    @classmethod
    def zeros(cls, order_m: int, order_n: int, horizon_t: float,
              x0_lo: float, x0_hi: float) -> "FourierSurface":
        return cls(order_m, order_n,
                   np.zeros((order_m + 1, order_n + 1)),
                   horizon_t, x0_lo, x0_hi)

    def _check_domain(self, t: float, x0: float) -> None:
        ttol = _DOMAIN_RTOL * max(1.0, self.horizon_t)
        if not -ttol <= t <= self.horizon_t + ttol:
            raise ValueError(f"t={t} outside [0, {self.horizon_t}]")
        xtol = _DOMAIN_RTOL * max(1.0, self.x0_range)
        if not self.x0_lo - xtol <= x0 <= self.x0_hi + xtol:
            raise ValueError(f"x0={x0} outside [{self.x0_lo}, {self.x0_hi}]")

    def evaluate(self, t: float, x0: float) -> float:
        """The double cosine sum at (t, x0)."""
        self._check_domain(t, x0)
        return float(np.sum(self.coeffs * self.basis(t, x0)))

    def basis(self, t: float, x0: float) -> np.ndarray:
        """Matrix of basis values; entry (m, n) is the (m, n) cosine product."""
        self._check_domain(t, x0)
        return basis_matrix(self.order_m, self.order_n, self.horizon_t,
                            self.x0_lo, self.x0_hi, t, x0)

    def flatten(self) -> np.ndarray:
        """Coefficients as a row-major vector (m outer, n inner)."""
        return self.coeffs.ravel().copy()

    @classmethod
    def from_flat(cls, vector: np.ndarray, order_m: int, order_n: int,
                  horizon_t: float, x0_lo: float, x0_hi: float) -> "FourierSurface":
        """Inverse of flatten; raises on length mismatch."""
        vector = np.asarray(vector, dtype=float)
        expected = (order_m + 1) * (order_n + 1)
        if vector.shape != (expected,):
            raise ValueError(f"coefficient vector must have length {expected}, "
                             f"got shape {vector.shape}")
        return cls(order_m, order_n,
                   vector.reshape(order_m + 1, order_n + 1).copy(),
                   horizon_t, x0_lo, x0_hi)

    def with_coeffs(self, coeffs: np.ndarray) -> "FourierSurface":
        return replace(self, coeffs=np.asarray(coeffs, dtype=float))

    def padded(self, order_m: int, order_n: int) -> "FourierSurface":
        """Zero-pad to larger orders; evaluates identically everywhere."""
        if order_m < self.order_m or order_n < self.order_n:
            raise ValueError("padded orders must not be smaller")
        coeffs = np.zeros((order_m + 1, order_n + 1))
        coeffs[:self.order_m + 1, :self.order_n + 1] = self.coeffs
        return FourierSurface(order_m, order_n, coeffs,
                              self.horizon_t, self.x0_lo, self.x0_hi)


def basis_matrix(order_m: int, order_n: int, horizon_t: float,
                 x0_lo: float, x0_hi: float, t: float, x0: float) -> np.ndarray:
    """(M+1, N+1) matrix with entry (m, n) = cos(m*pi*t/T)*cos(n*pi*(x0-lo)/L)."""
    tc = np.cos(np.arange(order_m + 1) * (np.pi * t / horizon_t))
    xc = np.cos(np.arange(order_n + 1)
                * (np.pi * (x0 - x0_lo) / (x0_hi - x0_lo)))
    return np.outer(tc, xc)


class BasisTables:
    """Precomputed cosine tables on a time grid and a set of x0 points.

    Shared by the objective and gradient kernels so the basis is
    evaluated once per (grid, x0 set, orders). `node` index k covers the
    grid nodes t_k; `mid` index k covers the step midpoints t_k + dt/2.
    Basis arrays have shape (n_x0, K) with K = (M+1)*(N+1) flattened
    row-major to match FourierSurface.flatten().
    """

    def __init__(self, surface: FourierSurface, grid: TimeGrid,
                 x0_points: np.ndarray):
        x0_points = np.asarray(x0_points, dtype=float)
        for x0 in x0_points:
            surface._check_domain(0.0, x0)
        self.grid = grid
        self.x0_points = x0_points
        m = np.arange(surface.order_m + 1)
        n = np.arange(surface.order_n + 1)
        times = grid.times()
        mids = times[:-1] + 0.5 * grid.dt
        tcos_nodes = np.cos(np.outer(times, m) * (np.pi / surface.horizon_t))
        tcos_mids = np.cos(np.outer(mids, m) * (np.pi / surface.horizon_t))
        xcos = np.cos(np.outer(x0_points - surface.x0_lo, n)
                      * (np.pi / surface.x0_range))
        k = (surface.order_m + 1) * (surface.order_n + 1)
        self.n_coeffs = k
        # (t, x0, K): outer product of the time and x0 cosine factors
        self.node_basis = np.einsum("tm,xn->txmn", tcos_nodes, xcos) \
            .reshape(len(times), len(x0_points), k)
        self.mid_basis = np.einsum("tm,xn->txmn", tcos_mids, xcos) \
            .reshape(len(mids), len(x0_points), k)

    def control_nodes(self, flat_coeffs: np.ndarray) -> np.ndarray:
        """u(t_k, x0_j) for all nodes/points, shape (n_steps+1, n_x0)."""
        return self.node_basis @ flat_coeffs

    def control_mids(self, flat_coeffs: np.ndarray) -> np.ndarray:
        """u at step midpoints, shape (n_steps, n_x0)."""
        return self.mid_basis @ flat_coeffs


def save_coefficients(surface: FourierSurface, path) -> None:
    with open(path, "w") as fh:
        fh.write(coefficients_to_json(surface))


def coefficients_to_json(surface: FourierSurface) -> str:
    payload = {
        "M": surface.order_m,
        "N": surface.order_n,
        "T": surface.horizon_t,
        "x0_lo": surface.x0_lo,
        "x0_hi": surface.x0_hi,
        "coeffs": [float(c) for c in surface.coeffs.ravel()],
    }
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def load_coefficients(path) -> FourierSurface:
    """Load a coefficient file, validating the stated dimensions."""
    with open(path) as fh:
        payload = json.load(fh)
    required = {"M", "N", "T", "x0_lo", "x0_hi", "coeffs"}
    missing = required - set(payload)
    if missing:
        raise ValueError(f"coefficient file missing keys: {sorted(missing)}")
    order_m, order_n = int(payload["M"]), int(payload["N"])
    coeffs = np.asarray(payload["coeffs"], dtype=float)
    return FourierSurface.from_flat(coeffs, order_m, order_n,
                                    float(payload["T"]),
                                    float(payload["x0_lo"]),
                                    float(payload["x0_hi"]))

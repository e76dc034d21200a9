"""Truncated log-price x time-to-maturity lattice."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DiscreteJumps, JumpLaw, KouJumps, MarketParams, MertonJumps


@dataclass(frozen=True)
class Grid:
    """Uniform grid: nx interior nodes in (x_min, x_max), nt time steps of dt."""

    x_min: float
    x_max: float
    nx: int
    nt: int
    dt: float

    def __post_init__(self):
        if self.nx < 16 or self.nt < 16:
            raise ValueError("grid needs nx >= 16 and nt >= 16")
        if self.x_max <= self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx + 1)

    @property
    def x(self) -> np.ndarray:
        """All nodes including the two far-field boundary nodes."""
        return np.linspace(self.x_min, self.x_max, self.nx + 2)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)

    @property
    def T(self) -> float:
        return self.dt * self.nt


def jump_scale(law: JumpLaw) -> float:
    """Displacement scale used to widen the truncation for jumps."""
    if isinstance(law, MertonJumps):
        return abs(law.m) + 4.0 * law.s
    if isinstance(law, KouJumps):
        return 4.0 / min(law.eta1, law.eta2)
    if isinstance(law, DiscreteJumps):
        return max(abs(z) for z, _ in law.points)
    raise TypeError(f"unknown jump law {type(law).__name__}")


def default_grid(params: MarketParams, law: JumpLaw | None, nx: int = 400,
                 nt: int = 400, x_min: float | None = None,
                 x_max: float | None = None) -> Grid:
    """Bracket both diffusion (6 sigma sqrt(T)) and jump displacement."""
    logK = math.log(params.K)
    margin = 6.0 * params.sigma_max * math.sqrt(params.T)
    if law is not None and params.lam > 0.0:
        margin = max(margin, 4.0 * jump_scale(law))
    lo = logK - margin if x_min is None else x_min
    hi = logK + margin if x_max is None else x_max
    if not (lo < logK < hi):
        raise ValueError("grid truncation must bracket the strike")
    return Grid(x_min=lo, x_max=hi, nx=nx, nt=nt, dt=params.T / nt)

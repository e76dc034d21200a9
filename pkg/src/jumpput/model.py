"""Market parameters and jump-size laws.

All derived model quantities (xi, the risk-neutral drift mu, the upward
jump gain) are closed-form per law; quadrature is only used in tests as
an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.stats import norm


class InfiniteMomentError(ValueError):
    """The jump law has no finite exponential moment (xi = +inf)."""


SigmaSpec = Union[float, Callable[[np.ndarray, float], np.ndarray]]


@dataclass(frozen=True)
class MarketParams:
    """Scalar market data. sigma is either a constant or a callable sigma(x, t)
    with stated bounds (sigma_lo, sigma_hi)."""

    r: float
    q: float
    lam: float
    K: float
    T: float
    sigma: SigmaSpec
    sigma_lo: float | None = None
    sigma_hi: float | None = None

    def __post_init__(self):
        if self.r <= 0.0:
            # r = 0 degenerates the boundary (b drops to -inf); rejected.
            raise ValueError("interest rate r must be strictly positive")
        if self.q < 0.0:
            raise ValueError("dividend yield q must be nonnegative")
        if self.lam < 0.0:
            raise ValueError("jump intensity lam must be nonnegative")
        if self.K <= 0.0:
            raise ValueError("strike K must be positive")
        if self.T <= 0.0:
            raise ValueError("maturity T must be positive")
        if self.constant_sigma:
            if self.sigma <= 0.0:
                raise ValueError("constant sigma must be positive")
        else:
            lo, hi = self.sigma_lo, self.sigma_hi
            if lo is None or hi is None or not (0.0 < lo <= hi):
                raise ValueError(
                    "callable sigma requires bounds 0 < sigma_lo <= sigma_hi"
                )

    @property
    def constant_sigma(self) -> bool:
        return isinstance(self.sigma, (int, float))

    def sigma_at(self, x, t):
        """Volatility sampled at log-prices x, time-to-maturity t."""
        x = np.asarray(x, dtype=float)
        if self.constant_sigma:
            return np.full_like(x, float(self.sigma))
        vals = np.asarray(self.sigma(x, t), dtype=float)
        if np.any(vals < self.sigma_lo - 1e-12) or np.any(vals > self.sigma_hi + 1e-12):
            raise ValueError("sigma(x,t) sample violates its stated bounds")
        return vals

    @property
    def sigma_max(self) -> float:
        return float(self.sigma) if self.constant_sigma else float(self.sigma_hi)


class JumpLaw:
    """Jump-size probability measure. Subclasses supply closed-form moments."""

    def xi(self) -> float:
        """E[e^Z]."""
        raise NotImplementedError

    def up_gain(self) -> float:
        """Integral of (e^z - 1) over z > 0."""
        raise NotImplementedError

    def call_partial_expectation(self, x: float, K: float) -> float:
        """E[(e^{x+Z} - K)^+], closed form."""
        raise NotImplementedError

    def unbounded_above(self) -> bool:
        """Whether the support of the law is unbounded from above."""
        raise NotImplementedError

    def positive_mass(self) -> float:
        """nu((0, inf))."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class MertonJumps(JumpLaw):
    """Normal jump sizes: Z ~ N(m, s^2)."""

    m: float
    s: float

    def __post_init__(self):
        if self.s <= 0.0:
            raise ValueError("Merton jump std s must be positive")

    def xi(self):
        return math.exp(self.m + 0.5 * self.s**2)

    def up_gain(self):
        m, s = self.m, self.s
        return math.exp(m + 0.5 * s**2) * norm.cdf((m + s**2) / s) - norm.cdf(m / s)

    def call_partial_expectation(self, x, K):
        m, s = self.m, self.s
        zstar = math.log(K) - x
        d1 = (m + s**2 - zstar) / s
        d2 = (m - zstar) / s
        return math.exp(x) * self.xi() * norm.cdf(d1) - K * norm.cdf(d2)

    def unbounded_above(self):
        return True

    def positive_mass(self):
        return float(norm.sf(-self.m / self.s))

    def sample(self, rng, size):
        return rng.normal(self.m, self.s, size)


@dataclass(frozen=True)
class KouJumps(JumpLaw):
    """Double-exponential jump sizes: density p*eta1*exp(-eta1 z) for z>0,
    (1-p)*eta2*exp(eta2 z) for z<0."""

    p: float
    eta1: float
    eta2: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("Kou p must lie in [0, 1]")
        if self.eta2 <= 0.0:
            raise ValueError("Kou eta2 must be positive")
        if self.eta1 <= 0.0:
            raise ValueError("Kou eta1 must be positive")

    def xi(self):
        if self.p > 0.0 and self.eta1 <= 1.0:
            raise InfiniteMomentError("Kou law needs eta1 > 1 for finite E[e^Z]")
        up = self.p * self.eta1 / (self.eta1 - 1.0) if self.p > 0.0 else 0.0
        return up + (1.0 - self.p) * self.eta2 / (self.eta2 + 1.0)

    def up_gain(self):
        if self.p == 0.0:
            return 0.0
        if self.eta1 <= 1.0:
            raise InfiniteMomentError("Kou law needs eta1 > 1 for finite E[e^Z]")
        return self.p / (self.eta1 - 1.0)

    def call_partial_expectation(self, x, K):
        if self.p > 0.0 and self.eta1 <= 1.0:
            raise InfiniteMomentError("Kou law needs eta1 > 1 for finite E[e^Z]")
        p, e1, e2 = self.p, self.eta1, self.eta2
        ex = math.exp(x)
        zstar = math.log(K) - x
        if zstar >= 0.0:
            if p == 0.0:
                return 0.0
            return p * (e1 * ex * math.exp(-(e1 - 1.0) * zstar) / (e1 - 1.0)
                        - K * math.exp(-e1 * zstar))
        pos = p * (e1 / (e1 - 1.0) * ex - K) if p > 0.0 else 0.0
        neg = (1.0 - p) * (e2 * ex * (1.0 - math.exp((e2 + 1.0) * zstar)) / (e2 + 1.0)
                           - K * (1.0 - math.exp(e2 * zstar)))
        return pos + neg

    def unbounded_above(self):
        return self.p > 0.0

    def positive_mass(self):
        return self.p

    def sample(self, rng, size):
        up = rng.random(size) < self.p
        z = np.where(
            up,
            rng.exponential(1.0 / self.eta1, size),
            -rng.exponential(1.0 / self.eta2, size),
        )
        return z


@dataclass(frozen=True)
class DiscreteJumps(JumpLaw):
    """Finite point-mass jump law: P[Z = z_i] = w_i."""

    points: tuple = field(default=())

    def __post_init__(self):
        pts = tuple((float(z), float(w)) for z, w in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("discrete jump law needs at least one point")
        if any(w < 0.0 for _, w in pts):
            raise ValueError("discrete jump weights must be nonnegative")
        total = sum(w for _, w in pts)
        if abs(total - 1.0) > 1e-12:
            raise ValueError("discrete jump weights must sum to 1")

    def xi(self):
        return sum(w * math.exp(z) for z, w in self.points)

    def up_gain(self):
        return sum(w * (math.exp(z) - 1.0) for z, w in self.points if z > 0.0)

    def call_partial_expectation(self, x, K):
        return sum(w * max(math.exp(x + z) - K, 0.0) for z, w in self.points)

    def unbounded_above(self):
        return False

    def positive_mass(self):
        return sum(w for z, w in self.points if z > 0.0)

    def sample(self, rng, size):
        zs = np.array([z for z, _ in self.points])
        ws = np.array([w for _, w in self.points])
        return rng.choice(zs, size=size, p=ws)


@dataclass(frozen=True)
class ModelSummary:
    xi: float
    mu: float
    yang_holds: bool
    up_gain: float
    j_strictly_increasing_guaranteed: bool


def compute_xi(law: JumpLaw) -> float:
    """Mean of e^Z under the jump law (must be finite)."""
    return law.xi()


def drift_mu(params: MarketParams, law: JumpLaw) -> float:
    """Risk-neutral log-price drift r - q + lam*(1 - xi)."""
    return params.r - params.q + params.lam - params.lam * compute_xi(law)


def check_yang_condition(params: MarketParams, law: JumpLaw):
    """Returns (condition holds, upward jump gain).

    The condition r >= q + lam * up_gain decides whether the exercise
    boundary is continuous at maturity (limit log K) or jumps to B(0).
    """
    ug = law.up_gain()
    return params.r >= params.q + params.lam * ug, ug


def j_strictly_increasing_guaranteed(params: MarketParams, law: JumpLaw) -> bool:
    """Whether x -> J(x,t) is guaranteed strictly increasing (q > 0 or the
    law puts mass arbitrarily high / on some positive point)."""
    if params.q > 0.0:
        return True
    if isinstance(law, DiscreteJumps):
        return any(z > 0.0 and w > 0.0 for z, w in law.points)
    return law.unbounded_above()


def summarize(params: MarketParams, law: JumpLaw) -> ModelSummary:
    xi = compute_xi(law)
    yang, ug = check_yang_condition(params, law)
    return ModelSummary(
        xi=xi,
        mu=drift_mu(params, law),
        yang_holds=yang,
        up_gain=ug,
        j_strictly_increasing_guaranteed=j_strictly_increasing_guaranteed(params, law),
    )

"""Monte Carlo oracle: exact log-Euler simulation of the jump diffusion,
European put pricing and the exercise-at-b(t) policy lower bound.

Log-price increments are (mu - sigma^2/2) dt + sigma sqrt(dt) Z plus a
Poisson number of i.i.d. jumps per step; constant sigma only. Randomness
comes from a counter-based Philox stream keyed by the seed so batches are
reproducible regardless of how the work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryCurve
from .model import JumpLaw, MarketParams, drift_mu


@dataclass
class PathBatch:
    n_paths: int
    n_steps: int
    dt: float
    log_s: np.ndarray         # (n_paths, n_steps + 1) log-price paths
    jump_counts: np.ndarray   # (n_paths,) total jumps per path
    seed: int
    params: MarketParams
    law: JumpLaw | None

    @property
    def terminal_log_s(self) -> np.ndarray:
        return self.log_s[:, -1]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def simulate(params: MarketParams, law: JumpLaw | None, S0: float,
             n_paths: int, n_steps: int, seed: int) -> PathBatch:
    """Exact-scheme paths of Eq. (1)'s log-price on a uniform step grid."""
    if not params.constant_sigma:
        raise ValueError("simulation requires constant sigma")
    if S0 <= 0.0:
        raise ValueError("S0 must be positive")
    dt = params.T / n_steps
    sigma = params.sigma_max
    mu = drift_mu(params, law) if law is not None else params.r - params.q
    drift = (mu - 0.5 * sigma**2) * dt

    rng = _rng(seed)
    increments = drift + sigma * math.sqrt(dt) * rng.standard_normal(
        (n_paths, n_steps))
    total_jumps = np.zeros(n_paths, dtype=np.int64)
    if law is not None and params.lam > 0.0:
        counts = rng.poisson(params.lam * dt, size=(n_paths, n_steps))
        total_jumps = counts.sum(axis=1)
        max_count = int(counts.max(initial=0))
        for j in range(max_count):
            active = counts > j
            n_active = int(active.sum())
            if n_active == 0:
                break
            increments[active] += law.sample(rng, n_active)

    log_s = np.empty((n_paths, n_steps + 1))
    log_s[:, 0] = math.log(S0)
    np.cumsum(increments, axis=1, out=log_s[:, 1:])
    log_s[:, 1:] += math.log(S0)
    return PathBatch(n_paths=n_paths, n_steps=n_steps, dt=dt, log_s=log_s,
                     jump_counts=total_jumps, seed=seed, params=params,
                     law=law)


def price_european(batch: PathBatch, K: float, r: float):
    """Discounted mean of (K - S_T)^+ with its standard error."""
    payoff = np.maximum(K - np.exp(batch.terminal_log_s), 0.0)
    disc = math.exp(-r * batch.params.T)
    vals = disc * payoff
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(batch.n_paths))
    return mean, se


def martingale_statistic(batch: PathBatch):
    """Mean and SE of e^{-(r-q)T} S_T / S0; the drift choice makes this 1."""
    p = batch.params
    disc = math.exp(-(p.r - p.q) * p.T)
    vals = disc * np.exp(batch.terminal_log_s - batch.log_s[:, 0])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(batch.n_paths))


def policy_value(params: MarketParams, law: JumpLaw | None, S0: float,
                 curve: BoundaryCurve | None, n_paths: int, seed: int,
                 n_steps: int | None = None):
    """Lower bound on the American value from the stop-at-b policy.

    A path stops the first step its log-price is at or below
    b(T - elapsed) (the curve lives on the time-to-maturity axis) and pays
    the discounted immediate exercise value; otherwise it pays the
    discounted terminal payoff. curve=None means never stop (European).
    """
    if n_steps is None:
        n_steps = max(16, int(round(252 * params.T)))
    batch = simulate(params, law, S0, n_paths, n_steps, seed)
    r, K, T = params.r, params.K, params.T
    dt = batch.dt

    payoff = np.zeros(n_paths)
    alive = np.ones(n_paths, dtype=bool)
    if curve is not None:
        for step in range(1, n_steps + 1):
            tau = T - step * dt            # time-to-maturity after this step
            b_here = float(curve.at(max(tau, 0.0)))
            x = batch.log_s[:, step]
            stop = alive & (x <= b_here)
            if np.any(stop):
                payoff[stop] = math.exp(-r * step * dt) * np.maximum(
                    K - np.exp(x[stop]), 0.0)
                alive[stop] = False
    if np.any(alive):
        payoff[alive] = math.exp(-r * T) * np.maximum(
            K - np.exp(batch.log_s[alive, -1]), 0.0)
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1) / math.sqrt(n_paths))
    return mean, se

"""Reference pricers used as independent oracles: CRR binomial tree for the
American put (no jumps) and the Black-Scholes European put closed form."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm


def bs_put(S: float, K: float, r: float, q: float, sigma: float, T: float) -> float:
    """Black-Scholes European put."""
    if T <= 0.0:
        return max(K - S, 0.0)
    srt = sigma * math.sqrt(T)
    d1 = (math.log(S / K) + (r - q + 0.5 * sigma**2) * T) / srt
    d2 = d1 - srt
    return K * math.exp(-r * T) * norm.cdf(-d2) - S * math.exp(-q * T) * norm.cdf(-d1)


def binomial_american_put(S0: float, K: float, r: float, q: float, sigma: float,
                          T: float, n_steps: int = 2000):
    """CRR tree price and exercise boundary.

    Returns (price, tau_levels, boundary_S) where boundary_S[j] is the
    largest spot at which exercise is optimal when tau_levels[j] of
    time-to-maturity remains (nan where no node exercises).
    """
    dt = T / n_steps
    u = math.exp(sigma * math.sqrt(dt))
    d = 1.0 / u
    disc = math.exp(-r * dt)
    p = (math.exp((r - q) * dt) - d) / (u - d)
    if not 0.0 < p < 1.0:
        raise ValueError("binomial step outside (0,1); refine n_steps")

    j = np.arange(n_steps + 1)
    S = S0 * u**j * d ** (n_steps - j)
    V = np.maximum(K - S, 0.0)
    boundary = np.full(n_steps + 1, np.nan)
    boundary[0] = K  # at maturity exercise is optimal for all S < K

    for step in range(n_steps - 1, -1, -1):
        S = S0 * u ** np.arange(step + 1) * d ** (step - np.arange(step + 1))
        cont = disc * (p * V[1:step + 2] + (1.0 - p) * V[:step + 1])
        ex = np.maximum(K - S, 0.0)
        exercise = ex >= cont - 1e-14
        exercise &= ex > 0.0
        V = np.where(exercise, ex, cont)
        tau_index = n_steps - step
        if np.any(exercise):
            boundary[tau_index] = S[exercise].max()

    tau_levels = dt * np.arange(n_steps + 1)
    return float(V[0]), tau_levels, boundary

import math

import numpy as np
import pytest

from jumpput.mc import (martingale_statistic, policy_value, price_european,
                        simulate)
from jumpput.model import MarketParams, MertonJumps, drift_mu
from jumpput.reference import bs_put


def test_simulation_is_deterministic(params_merton, merton_law):
    a = simulate(params_merton, merton_law, 100.0, 2000, 16, seed=42)
    b = simulate(params_merton, merton_law, 100.0, 2000, 16, seed=42)
    assert np.array_equal(a.log_s, b.log_s)
    c = simulate(params_merton, merton_law, 100.0, 2000, 16, seed=43)
    assert not np.array_equal(a.log_s, c.log_s)


def test_martingale_statistic_near_one(params_merton, merton_law):
    batch = simulate(params_merton, merton_law, 100.0, 200000, 16, seed=3)
    mean, se = martingale_statistic(batch)
    assert abs(mean - 1.0) <= 4.0 * se


def test_log_return_moments(params_merton, merton_law):
    p, law = params_merton, merton_law
    batch = simulate(p, law, 100.0, 200000, 16, seed=5)
    ret = batch.terminal_log_s - math.log(100.0)
    mu = drift_mu(p, law)
    want_mean = (mu - 0.5 * 0.2**2) * p.T + p.lam * p.T * law.m
    want_var = 0.2**2 * p.T + p.lam * p.T * (law.m**2 + law.s**2)
    assert ret.mean() == pytest.approx(want_mean, abs=4 * ret.std()
                                       / math.sqrt(batch.n_paths))
    assert ret.var() == pytest.approx(want_var, rel=0.02)
    assert batch.jump_counts.mean() == pytest.approx(p.lam * p.T, rel=0.05)


def test_european_price_matches_black_scholes(params_nojump):
    p = params_nojump
    batch = simulate(p, None, 100.0, 200000, 16, seed=7)
    mc, se = price_european(batch, p.K, p.r)
    want = bs_put(100.0, p.K, p.r, p.q, 0.2, p.T)
    assert abs(mc - want) <= 4.0 * se


def test_policy_without_curve_is_european(params_nojump):
    p = params_nojump
    val, se = policy_value(p, None, 100.0, None, 50000, seed=9, n_steps=16)
    batch = simulate(p, None, 100.0, 50000, 16, seed=9)
    mc, _ = price_european(batch, p.K, p.r)
    assert val == pytest.approx(mc, abs=1e-12)


def test_policy_is_a_lower_bound_above_european(params_nojump,
                                                surface_nojump,
                                                curve_nojump):
    p = params_nojump
    pol, pol_se = policy_value(p, None, 100.0, curve_nojump, 100000, seed=11)
    euro = bs_put(100.0, p.K, p.r, p.q, 0.2, p.T)
    amer = surface_nojump.price(100.0)
    assert pol > euro  # exercising along b beats never exercising
    assert pol <= amer + 3.0 * pol_se  # and cannot beat the supremum


def test_simulation_input_validation(params_nojump):
    with pytest.raises(ValueError):
        simulate(params_nojump, None, -5.0, 100, 16, seed=0)
    var_sigma = MarketParams(r=0.05, q=0.0, lam=0.0, K=100.0, T=1.0,
                             sigma=lambda x, t: np.full_like(x, 0.2),
                             sigma_lo=0.1, sigma_hi=0.3)
    with pytest.raises(ValueError):
        simulate(var_sigma, None, 100.0, 100, 16, seed=0)

import numpy as np
import pytest

from jumpput.grids import default_grid
from jumpput.model import MarketParams, MertonJumps
from jumpput.reference import binomial_american_put, bs_put
from jumpput.solver import (SolverOptions, penalty_constant,
                            solve_european_pide, solve_pide)


def test_american_price_vs_binomial_tree(params_nojump, surface_nojump):
    p = params_nojump
    tree_price, _, _ = binomial_american_put(100.0, p.K, p.r, p.q, 0.2, p.T,
                                             n_steps=2000)
    assert surface_nojump.price(100.0) == pytest.approx(tree_price,
                                                        rel=2e-3)


def test_european_price_vs_black_scholes(params_nojump):
    p = params_nojump
    grid = default_grid(p, None, nx=200, nt=200)
    surf = solve_european_pide(p, None, grid)
    want = bs_put(100.0, p.K, p.r, p.q, 0.2, p.T)
    assert surf.price(100.0) == pytest.approx(want, rel=2e-3)


def test_european_error_shrinks_under_refinement(params_nojump):
    import math
    from jumpput.grids import Grid
    p = params_nojump
    logK = math.log(p.K)
    errs = []
    # strike-aligned grids so the payoff kink sits on a node at every
    # resolution; the sup-norm error near the strike then decays cleanly
    for n in (99, 199, 399):
        grid = Grid(x_min=logK - 1.2, x_max=logK + 1.2, nx=n, nt=n + 1,
                    dt=p.T / (n + 1))
        surf = solve_european_pide(p, None, grid)
        x = grid.x
        sel = np.abs(x - logK) <= 0.5
        want = np.array([bs_put(math.exp(xx), p.K, p.r, p.q, 0.2, p.T)
                         for xx in x[sel]])
        errs.append(float(np.max(np.abs(surf.u[-1, sel] - want))))
    assert errs[1] <= 0.65 * errs[0]
    assert errs[2] <= 0.65 * errs[1]


def test_psor_and_penalty_schemes_agree(params_nojump):
    p = params_nojump
    grid = default_grid(p, None, nx=128, nt=64)
    u1 = solve_pide(p, None, grid, scheme="psor").u
    u2 = solve_pide(p, None, grid, scheme="penalty").u
    assert np.max(np.abs(u1 - u2)) < 1e-6 * p.K


def test_solution_dominates_payoff_and_european(params_nojump,
                                                surface_nojump):
    p = params_nojump
    g = surface_nojump.payoff
    assert np.min(surface_nojump.u - g[None, :]) >= -1e-9 * p.K
    grid = surface_nojump.grid
    euro = solve_european_pide(p, None, grid)
    assert np.min(surface_nojump.u - euro.u) >= -1e-9 * p.K


def test_comparison_principle_under_payoff_bump(params_nojump):
    p = params_nojump
    grid = default_grid(p, None, nx=128, nt=64)
    base = solve_pide(p, None, grid)
    bump = 0.5 * np.exp(-0.5 * ((grid.x - 4.3) / 0.2) ** 2)
    bumped = solve_pide(p, None, grid, payoff_bump=bump)
    assert np.min(bumped.u - base.u) >= -1e-9 * p.K


def test_jump_solution_exceeds_diffusion_only(params_merton, merton_law):
    grid = default_grid(params_merton, merton_law, nx=128, nt=64)
    with_jumps = solve_pide(params_merton, merton_law, grid)
    p0 = MarketParams(r=0.05, q=0.0, lam=0.0, K=100.0, T=1.0, sigma=0.2)
    without = solve_pide(p0, None, grid)
    assert with_jumps.price(100.0) > without.price(100.0)


def test_penalty_constant_examples():
    p = MarketParams(r=0.05, q=0.0, lam=0.3, K=100.0, T=1.0, sigma=0.2)
    assert penalty_constant(p, 0.01, slack=0.0) == pytest.approx(35.0005)
    assert penalty_constant(p, 0.01, slack=1.0) == pytest.approx(36.0005)
    with pytest.raises(ValueError):
        penalty_constant(p, 0.0)


def test_exercised_mask_consistent(surface_nojump):
    g = surface_nojump.payoff
    m = surface_nojump.exercised
    gap = surface_nojump.u - g[None, :]
    assert np.all(gap[m] <= 1e-6 * surface_nojump.params.K + 1e-12)
    # at maturity everything below the strike is in contact
    assert m[0, surface_nojump.grid.x < np.log(100.0)].all()


def test_unknown_scheme_rejected(params_nojump):
    grid = default_grid(params_nojump, None, nx=64, nt=16)
    with pytest.raises(ValueError):
        solve_pide(params_nojump, None, grid, scheme="simplex")

import math

import numpy as np
import pytest

from jumpput.fixedpoint import (IterationTrace, check_bn_limit, iterate,
                                payoff_rows)
from jumpput.grids import default_grid
from jumpput.model import MarketParams, MertonJumps, check_yang_condition
from jumpput.solver import solve_pide


@pytest.fixture(scope="module")
def merton_short():
    params = MarketParams(r=0.05, q=0.0, lam=0.3, K=100.0, T=0.5, sigma=0.2)
    law = MertonJumps(m=0.0, s=0.3)
    grid = default_grid(params, law, nx=128, nt=32)
    return params, law, grid, iterate(params, law, grid)


def test_no_jumps_converges_immediately(params_nojump):
    grid = default_grid(params_nojump, None, nx=128, nt=32)
    trace = iterate(params_nojump, None, grid)
    # with no jump term the first solve is already the fixed point
    assert trace.converged_at == 2
    direct = solve_pide(params_nojump, None, grid)
    assert np.max(np.abs(trace.surfaces[-1].u - direct.u)) < 1e-10


def test_iterates_increase_monotonically(merton_short):
    params, law, grid, trace = merton_short
    prev = payoff_rows(params, grid)
    for surf in trace.surfaces:
        assert np.min(surf.u - prev) >= -1e-9 * params.K
        prev = surf.u


def test_boundaries_decrease(merton_short):
    params, law, grid, trace = merton_short
    for a, b in zip(trace.boundaries[:-1], trace.boundaries[1:]):
        m = np.isfinite(a.b) & np.isfinite(b.b)
        assert np.all(b.b[m] <= a.b[m] + grid.dx)


def test_limit_matches_full_pide(merton_short):
    params, law, grid, trace = merton_short
    assert trace.converged_at is not None
    direct = solve_pide(params, law, grid)
    assert np.max(np.abs(trace.surfaces[-1].u - direct.u)) < 5e-3 * params.K


def test_sup_diffs_shrink(merton_short):
    _, _, _, trace = merton_short
    assert all(b < a for a, b in zip(trace.sup_diffs[1:-1],
                                     trace.sup_diffs[2:]))


def test_bn_limit_report(merton_short):
    params, law, grid, trace = merton_short
    yang, _ = check_yang_condition(params, law)
    rep = check_bn_limit(trace, bool(yang), None)
    assert rep.expected == pytest.approx(math.log(params.K))
    assert len(rep.measured) == len(trace.boundaries)
    assert rep.all_pass


def test_empty_trace_rejected():
    trace = IterationTrace(surfaces=[], boundaries=[], sup_diffs=[],
                           converged_at=None)
    with pytest.raises(ValueError):
        check_bn_limit(trace, True, None)


def test_bad_n_max(params_nojump):
    grid = default_grid(params_nojump, None, nx=64, nt=16)
    with pytest.raises(ValueError):
        iterate(params_nojump, None, grid, n_max=0)

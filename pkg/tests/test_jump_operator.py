import math

import numpy as np
import pytest

from jumpput.grids import default_grid
from jumpput.jumps import (CoverageError, build_jump_operator,
                           jump_quadrature)
from jumpput.model import (DiscreteJumps, KouJumps, MarketParams, MertonJumps)

P = MarketParams(r=0.05, q=0.0, lam=0.3, K=100.0, T=1.0, sigma=0.2)
LAWS = [MertonJumps(m=-0.1, s=0.2), KouJumps(p=0.4, eta1=10.0, eta2=5.0),
        DiscreteJumps(points=((-0.2, 0.5), (0.1, 0.5)))]


@pytest.mark.parametrize("law", LAWS)
def test_weights_normalized(law):
    grid = default_grid(P, law, nx=200, nt=50)
    op = build_jump_operator(grid, law, P.K)
    assert op.q.sum() == pytest.approx(1.0, abs=1e-14)
    assert op.trunc_mass <= 1e-6


@pytest.mark.parametrize("law", LAWS)
def test_constant_row_preserved(law):
    grid = default_grid(P, law, nx=200, nt=50)
    op = build_jump_operator(grid, law, P.K)
    row = np.full(grid.nx + 2, 7.0)
    ext = lambda y: np.full_like(y, 7.0)
    out = op.apply(row, low_ext=ext, high_ext=ext)
    assert np.max(np.abs(out - 7.0)) < 1e-12


@pytest.mark.parametrize("law", LAWS[:2])
def test_exponential_row_recovers_xi(law):
    grid = default_grid(P, law, nx=800, nt=50)
    op = build_jump_operator(grid, law, P.K)
    ext = lambda y: np.exp(y)
    out = op.apply(np.exp(grid.x), low_ext=ext, high_ext=ext)
    want = law.xi() * np.exp(grid.x[1:-1])
    # limited by linear interpolation of e^x between grid nodes, O(dx^2)
    assert np.max(np.abs(out / want - 1.0)) < 5e-5


def test_quadrature_density_refinement():
    law = MertonJumps(m=-0.1, s=0.2)
    z1, w1, _ = jump_quadrature(law, 160, 6.0)
    z2, w2, _ = jump_quadrature(law, 1280, 6.0)
    q1, q2 = w1 / w1.sum(), w2 / w2.sum()
    f = lambda y: 100.0 / (1.0 + np.exp(y - math.log(100.0)))
    for x in np.linspace(3.5, 5.5, 9):
        assert np.sum(q1 * f(x + z1)) == pytest.approx(
            np.sum(q2 * f(x + z2)), abs=1e-10)


def test_coverage_error_on_narrow_truncation():
    law = MertonJumps(m=-0.1, s=0.2)
    grid = default_grid(P, law, nx=200, nt=50)
    with pytest.raises(CoverageError):
        build_jump_operator(grid, law, P.K, tail_width=2.0)


def test_apply_matches_convolve_at():
    law = MertonJumps(m=-0.1, s=0.2)
    grid = default_grid(P, law, nx=200, nt=50)
    op = build_jump_operator(grid, law, P.K)
    row = np.maximum(P.K - np.exp(grid.x), 0.0)
    assert np.allclose(op.apply(row), op.convolve_at(grid.x[1:-1], row),
                       atol=1e-10)


def test_exercise_gap_vanishes_deep_in_stopping_region():
    law = DiscreteJumps(points=((-0.05, 1.0),))  # no upward mass
    grid = default_grid(P, law, nx=200, nt=50)
    op = build_jump_operator(grid, law, P.K)
    row = np.maximum(P.K - np.exp(grid.x), 0.0)
    # x + z stays below the grid, where the integrand vanishes identically
    out = op.exercise_gap_integral(np.array([grid.x_min + 0.02]), row)
    assert abs(float(out[0])) < 1e-12

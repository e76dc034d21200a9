import numpy as np
import pytest

from jumpput.boundary import extract_boundary
from jumpput.grids import default_grid
from jumpput.model import MarketParams, MertonJumps
from jumpput.solver import solve_pide


@pytest.fixture(scope="session")
def params_nojump():
    return MarketParams(r=0.05, q=0.0, lam=0.0, K=100.0, T=1.0, sigma=0.2)


@pytest.fixture(scope="session")
def merton_law():
    return MertonJumps(m=-0.1, s=0.2)


@pytest.fixture(scope="session")
def params_merton():
    return MarketParams(r=0.05, q=0.0, lam=0.3, K=100.0, T=1.0, sigma=0.2)


@pytest.fixture(scope="session")
def surface_nojump(params_nojump):
    """Shared 400x400 no-jump American solve (the workhorse benchmark)."""
    grid = default_grid(params_nojump, None, nx=400, nt=400)
    return solve_pide(params_nojump, None, grid)


@pytest.fixture(scope="session")
def curve_nojump(surface_nojump):
    return extract_boundary(surface_nojump, "smoothfit_cross")

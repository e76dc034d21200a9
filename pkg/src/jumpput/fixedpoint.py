"""Monotone approximating scheme: iterate diffusion-only obstacle solves
with the jump integral frozen at the previous iterate.

u_0 is the payoff at every time level; u_n solves the pure-PDE obstacle
problem driven by f_n(x,t) = lam * int u_{n-1}(x+z,t) nu(dz). The sequence
increases to the PIDE solution and the boundaries b_n decrease to b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundaryCurve, extract_boundary
from .grids import Grid
from .jumps import build_jump_operator
from .model import JumpLaw, MarketParams
from .solver import SolutionSurface, SolverOptions, solve_obstacle_with_source


class NonMonotoneError(RuntimeError):
    """An iterate dropped below its predecessor beyond tolerance."""


@dataclass
class IterationTrace:
    surfaces: list            # u_1 .. u_N
    boundaries: list          # extracted b_n curves
    sup_diffs: list           # ||u_n - u_{n-1}||_inf
    converged_at: int | None


@dataclass
class BnLimitReport:
    t_small: float
    expected: float
    measured: list = field(default_factory=list)   # b_n(t_small) per iterate
    passed: list = field(default_factory=list)
    tol: float = 0.0

    @property
    def all_pass(self) -> bool:
        return all(self.passed)


def payoff_rows(params: MarketParams, grid: Grid) -> np.ndarray:
    """u_0: the payoff repeated at every time level."""
    g = np.maximum(params.K - np.exp(grid.x), 0.0)
    return np.tile(g, (grid.nt + 1, 1))


def iterate(params: MarketParams, law: JumpLaw | None, grid: Grid,
            n_max: int = 50, tol: float | None = None, scheme: str = "psor",
            opts: SolverOptions | None = None,
            extraction: str = "smoothfit_cross") -> IterationTrace:
    """Run the approximating scheme until the sup-norm update is below tol."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    opts = opts or SolverOptions()
    if tol is None:
        tol = 1e-6 * params.K
    lam = params.lam

    jump_op = None
    if law is not None and lam > 0.0:
        jump_op = build_jump_operator(grid, law, params.K, opts.n_quad,
                                      opts.tail_width)

    u_prev = payoff_rows(params, grid)
    surfaces: list[SolutionSurface] = []
    boundaries: list[BoundaryCurve] = []
    sup_diffs: list[float] = []
    converged_at = None

    for n in range(1, n_max + 1):
        if jump_op is None:
            source = np.zeros((grid.nt + 1, grid.nx))
        else:
            source = lam * np.array([jump_op.apply(row) for row in u_prev])
        surf = solve_obstacle_with_source(params, law, grid, source,
                                          scheme=scheme, opts=opts)
        diff = surf.u - u_prev
        if diff.min() < -10.0 * tol:
            raise NonMonotoneError(
                f"iterate {n} dropped {-diff.min():.3e} below its predecessor"
            )
        sup_diffs.append(float(np.max(np.abs(diff))))
        surfaces.append(surf)
        boundaries.append(extract_boundary(surf, extraction))
        u_prev = surf.u
        if sup_diffs[-1] < tol:
            converged_at = n
            break

    return IterationTrace(surfaces=surfaces, boundaries=boundaries,
                          sup_diffs=sup_diffs, converged_at=converged_at)


def check_bn_limit(trace: IterationTrace, yang_holds: bool,
                   B0: float | None) -> BnLimitReport:
    """Shared short-time limit of the iterate boundaries.

    Every b_n with n >= 1 starts at min(log K, B(0)); measured at the
    earliest reliable level t_small = 5*dt with tolerance 3*dx.
    """
    if not trace.boundaries:
        raise ValueError("trace holds no boundaries")
    surf = trace.surfaces[0]
    grid = surf.grid
    logK = math.log(surf.params.K)
    if yang_holds or B0 is None:
        expected = logK
    else:
        expected = min(logK, B0)
    t_small = 5.0 * grid.dt
    tol = 3.0 * grid.dx
    report = BnLimitReport(t_small=t_small, expected=expected, tol=tol)
    for curve in trace.boundaries:
        val = float(curve.at(t_small))
        report.measured.append(val)
        report.passed.append(abs(val - expected) <= tol)
    return report

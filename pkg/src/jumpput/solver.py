"""IMEX finite-difference solver for the transformed obstacle problem.

Time axis is time-to-maturity: the payoff is the initial condition and the
solver marches t = 0 -> T. Diffusion/drift/reaction are implicit (tridiagonal
solve); the jump integral is lagged and iterated to convergence within each
step. The obstacle is enforced either by projected SOR on the per-step LCP
or by a steep-penalty semismooth Newton iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .grids import Grid
from .jumps import JumpOperator, build_jump_operator
from .model import JumpLaw, MarketParams, drift_mu


class InnerIterationError(RuntimeError):
    """The lagged jump-term iteration failed to converge within a step."""


@dataclass(frozen=True)
class SolverOptions:
    scheme: str = "psor"
    jump_tol: float = 1e-9          # sup-norm tol of the inner jump iteration, x K
    max_inner: int = 200
    psor_omega: float = 1.2
    psor_tol: float = 1e-9
    psor_max_sweeps: int = 10000
    penalty_epsilon: float = 1e-7
    penalty_slack: float = 1.0
    newton_max: int = 50
    contact_tol: float = 1e-6       # exercise-mask tolerance, x K
    n_quad: int = 160
    tail_width: float = 6.0


@dataclass
class SolutionSurface:
    """u(x, t) on the grid, (nt+1) rows x (nx+2) columns."""

    u: np.ndarray
    exercised: np.ndarray
    grid: Grid
    params: MarketParams
    law: JumpLaw | None
    scheme: str

    @property
    def payoff(self) -> np.ndarray:
        return np.maximum(self.params.K - np.exp(self.grid.x), 0.0)

    def value_at(self, x: float, t: float) -> float:
        """Bilinear interpolation of u at (log-price, time-to-maturity)."""
        tg = self.grid.t
        k = int(np.clip(np.searchsorted(tg, t) - 1, 0, len(tg) - 2))
        w = (t - tg[k]) / self.grid.dt
        w = min(max(w, 0.0), 1.0)
        row = (1.0 - w) * self.u[k] + w * self.u[k + 1]
        return float(np.interp(x, self.grid.x, row))

    def price(self, S: float) -> float:
        """Option value at spot S with full maturity T remaining."""
        return self.value_at(np.log(S), self.grid.T)

    def dt_u(self) -> np.ndarray:
        """Time derivative by centered differences (one-sided at the ends)."""
        return np.gradient(self.u, self.grid.dt, axis=0)


def penalty_constant(params: MarketParams, epsilon: float,
                     slack: float = 1.0) -> float:
    """Magnitude of the penalty at zero; must dominate (r+lam)K + r*eps."""
    if epsilon <= 0.0:
        raise ValueError("penalty epsilon must be positive")
    return (params.r + params.lam) * params.K + params.r * epsilon + slack


def _psor(sub, diag, sup, rhs, g, u0, omega, tol, max_sweeps):
    """Projected SOR on the tridiagonal LCP  Au >= rhs, u >= g  with
    vectorized red-black sweeps."""
    n = len(rhs)
    u = np.maximum(u0.copy(), g)
    even = np.arange(0, n, 2)
    odd = np.arange(1, n, 2)
    for _ in range(max_sweeps):
        u_old = u.copy()
        for idx in (even, odd):
            neigh = np.zeros(len(idx))
            has_lo = idx > 0
            neigh[has_lo] += sub[idx[has_lo]] * u[idx[has_lo] - 1]
            has_hi = idx < n - 1
            neigh[has_hi] += sup[idx[has_hi]] * u[idx[has_hi] + 1]
            gs = (rhs[idx] - neigh) / diag[idx]
            u[idx] = np.maximum(g[idx], u[idx] + omega * (gs - u[idx]))
        if np.max(np.abs(u - u_old)) < tol:
            break
    return u


def _banded_solve(sub, diag, sup, rhs):
    n = len(rhs)
    ab = np.zeros((3, n))
    ab[0, 1:] = sup[:-1]
    ab[1] = diag
    ab[2, :-1] = sub[1:]
    return solve_banded((1, 1), ab, rhs)


def _penalty_solve(sub, diag, sup, rhs, g, u0, c, max_newton):
    """Semismooth Newton on  Au - rhs - c*max(g - u, 0) = 0."""
    u = u0.copy()
    active = u < g
    for _ in range(max_newton):
        u = _banded_solve(sub, diag + c * active, sup, rhs + c * g * active)
        new_active = u < g
        if np.array_equal(new_active, active):
            break
        active = new_active
    return u


def _march(params: MarketParams, law: JumpLaw | None, grid: Grid, *,
           obstacle: bool, opts: SolverOptions, source: np.ndarray | None = None,
           use_jump_operator: bool = True,
           payoff_bump: np.ndarray | None = None) -> SolutionSurface:
    """Shared time-marching core.

    source: optional (nt+1, nx) frozen driving term added to the right-hand
    side (evaluated at the new time level); used by the approximating scheme.
    """
    x = grid.x
    dx = grid.dx
    dt = grid.dt
    K = params.K
    lam = params.lam
    g_full = np.maximum(K - np.exp(x), 0.0)
    if payoff_bump is not None:
        g_full = g_full + payoff_bump
    g = g_full[1:-1]
    left, right = g_full[0], 0.0

    jump_op = None
    if use_jump_operator and law is not None and lam > 0.0:
        jump_op = build_jump_operator(grid, law, K, opts.n_quad, opts.tail_width)

    mu = drift_mu(params, law) if law is not None else params.r - params.q
    constant_coeffs = params.constant_sigma

    def coeffs(t):
        sig2 = params.sigma_at(x[1:-1], t) ** 2
        conv = mu - 0.5 * sig2
        if np.max(np.abs(conv)) * dx > np.min(sig2):
            warnings.warn("drift-dominated grid (Peclet guard); refine dx",
                          RuntimeWarning, stacklevel=2)
        sub = -dt * (0.5 * sig2 / dx**2 - conv / (2.0 * dx))
        diag = 1.0 + dt * (sig2 / dx**2 + params.r + lam)
        sup = -dt * (0.5 * sig2 / dx**2 + conv / (2.0 * dx))
        return sub, diag, sup

    if constant_coeffs:
        sub, diag, sup = coeffs(0.0)

    c_pen = penalty_constant(params, opts.penalty_epsilon,
                             opts.penalty_slack) / opts.penalty_epsilon
    jump_tol = opts.jump_tol * K

    u = np.empty((grid.nt + 1, grid.nx + 2))
    u[0] = g_full

    for k in range(grid.nt):
        t_new = (k + 1) * dt
        if not constant_coeffs:
            sub, diag, sup = coeffs(t_new)
        base = u[k, 1:-1].copy()
        if source is not None:
            base = base + dt * source[k + 1]
        base[0] -= sub[0] * left
        base[-1] -= sup[-1] * right

        def step(rhs, guess):
            if not obstacle:
                return _banded_solve(sub, diag, sup, rhs)
            if opts.scheme == "psor":
                return _psor(sub, diag, sup, rhs, g, guess, opts.psor_omega,
                             opts.psor_tol, opts.psor_max_sweeps)
            if opts.scheme == "penalty":
                return _penalty_solve(sub, diag, sup, rhs, g, guess, c_pen,
                                      opts.newton_max)
            raise ValueError(f"unknown scheme {opts.scheme!r}")

        if jump_op is None:
            interior = step(base, u[k, 1:-1])
        else:
            row = u[k].copy()
            interior = row[1:-1]
            for inner in range(opts.max_inner):
                rhs = base + dt * lam * jump_op.apply(row)
                new_interior = step(rhs, interior)
                delta = np.max(np.abs(new_interior - interior))
                interior = new_interior
                row = np.concatenate(([left], interior, [right]))
                if delta < jump_tol:
                    break
            else:
                raise InnerIterationError(
                    f"jump iteration stalled at t={t_new:.6g} (delta={delta:.3e})"
                )
        u[k + 1, 0] = left
        u[k + 1, -1] = right
        u[k + 1, 1:-1] = interior

    exercised = (u - g_full[None, :]) <= opts.contact_tol * K
    return SolutionSurface(u=u, exercised=exercised, grid=grid, params=params,
                           law=law, scheme=opts.scheme if obstacle else "european")


def solve_pide(params: MarketParams, law: JumpLaw | None, grid: Grid,
               scheme: str = "psor", opts: SolverOptions | None = None,
               payoff_bump: np.ndarray | None = None) -> SolutionSurface:
    """American put surface under the jump-diffusion obstacle problem."""
    opts = replace(opts or SolverOptions(), scheme=scheme)
    return _march(params, law, grid, obstacle=True, opts=opts,
                  payoff_bump=payoff_bump)


def solve_european_pide(params: MarketParams, law: JumpLaw | None, grid: Grid,
                        opts: SolverOptions | None = None) -> SolutionSurface:
    """Same stepping with the obstacle removed (validation target)."""
    opts = opts or SolverOptions()
    return _march(params, law, grid, obstacle=False, opts=opts)


def solve_obstacle_with_source(params: MarketParams, law: JumpLaw | None,
                               grid: Grid, source: np.ndarray,
                               scheme: str = "psor",
                               opts: SolverOptions | None = None) -> SolutionSurface:
    """Pure-PDE obstacle problem with a frozen driving term (nt+1, nx).

    lam enters only through the drift and the reaction coefficient r + lam;
    the jump integral itself is supplied by the caller.
    """
    opts = replace(opts or SolverOptions(), scheme=scheme)
    return _march(params, law, grid, obstacle=True, opts=opts, source=source,
                  use_jump_operator=False)

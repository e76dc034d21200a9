"""Weakly singular Volterra equation for the boundary trace of the
cross-derivative v(t) = d/dx [d/dt u] (b(t)+, t), constant volatility only.

With G the Green function of the constant-coefficient continuation operator,

    (1/2) v(t) = - int_{t0}^t v(s) (sigma^2/2) dxG(b(t),t;b(s),s) ds
                 + N1(t) + N2(t),

    N1(t) = int_{b(t)}^inf dxG(b(t),t;y,t0) w(y,t0) dy,
    N2(t) = int_{t0}^t ds int_{b(s)}^inf dxG(b(t),t;y,s) h(y,s) dy,

where w = d/dt u and h(y,s) = lam * int w(y+z,s) nu(dz). The 1/2 on the
left is the single-layer jump of the potential's x-derivative: for
diffusivity sigma^2/2 the jump of d/dx int rho(s) G ds across the boundary
is -rho(t)/sigma^2, and rho = (sigma^2/2) v here (verified against a
manufactured half-line heat solution). The kernel carries an integrable
(t-s)^{-1/2} singularity which the product-integration weights absorb
exactly; the y-integrals against piecewise-linear data have closed forms
through Gaussian cell masses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .boundary import DIAG_LEVEL_SKIP, BoundaryCurve, _one_sided_fit, \
    _first_continuation_index
from .jumps import build_jump_operator
from .model import JumpLaw, MarketParams, drift_mu
from .solver import SolutionSurface, SolverOptions


class KernelError(RuntimeError):
    """Non-integrable kernel evaluation (degenerate time separation)."""


@dataclass(frozen=True)
class GreenKernel:
    """Green function of w_t - (sigma^2/2) w_xx - c w_x + rho w = 0."""

    sigma: float
    c: float          # drift of the first-order term, mu - sigma^2/2
    rho: float        # reaction rate, r + lam

    def G(self, x: float, t: float, y, s: float):
        """Density in y of x + c*tau + sigma*W_tau, discounted by rho."""
        tau = t - s
        if tau <= 0.0:
            raise KernelError(f"kernel needs t > s (tau={tau:.3e})")
        sd = self.sigma * math.sqrt(tau)
        return math.exp(-self.rho * tau) * norm.pdf(y - x - self.c * tau,
                                                    scale=sd)

    def dxG(self, x: float, t: float, y, s: float):
        tau = t - s
        arg = y - x - self.c * tau
        return arg / (self.sigma**2 * tau) * self.G(x, t, y, s)

    def cell_mass(self, x: float, t: float, y0, y1, s: float):
        """int_{y0}^{y1} G(x,t;y,s) dy (closed form)."""
        tau = t - s
        if tau <= 0.0:
            raise KernelError(f"kernel needs t > s (tau={tau:.3e})")
        sd = self.sigma * math.sqrt(tau)
        mean = x + self.c * tau
        hi = norm.cdf((y1 - mean) / sd)
        lo = norm.cdf((y0 - mean) / sd)
        return math.exp(-self.rho * tau) * (hi - lo)


def dxG_linear_integral(kern: GreenKernel, x: float, t: float, s: float,
                        lo: float, nodes: np.ndarray, fvals: np.ndarray):
    """int_{lo}^{inf} dxG(x,t;y,s) f(y) dy for piecewise-linear f.

    f interpolates (nodes, fvals) and vanishes above the last node. Since
    dxG = -dyG for constant coefficients, integrating by parts per cell
    leaves the boundary term G(x,t;lo,s) f(lo) plus slope-weighted Gaussian
    cell masses; both are exact for the interpolant.
    """
    keep = nodes > lo
    y = np.concatenate(([lo], nodes[keep]))
    f = np.concatenate(([np.interp(lo, nodes, fvals)], fvals[keep]))
    if len(y) < 2:
        return kern.G(x, t, lo, s) * f[0]
    slopes = np.diff(f) / np.diff(y)
    masses = kern.cell_mass(x, t, y[:-1], y[1:], s)
    return kern.G(x, t, lo, s) * f[0] + float(np.dot(slopes, masses))


def march_volterra(kern: GreenKernel, t_levels: np.ndarray, b_at,
                   N_of_t, v0: float) -> np.ndarray:
    """Forward product-integration of the Volterra recursion.

    t_levels: increasing times t_0 .. t_n (t_0 is the data level); b_at(t)
    evaluates the boundary; N_of_t(k) returns N1(t_k) + N2(t_k); v0 seeds
    the data level. The (t-s)^{-1/2} kernel factor is integrated exactly on
    each subinterval: weight 2(sqrt(t-s_j) - sqrt(t-s_{j+1})); the regular
    factor is sampled at midpoints with trapezoidal values of v.
    """
    n = len(t_levels)
    lhs = 0.5  # single-layer jump coefficient of the boundary potential
    v = np.empty(n)
    v[0] = v0
    for k in range(1, n):
        t = t_levels[k]
        bt = b_at(t)
        s_all = t_levels[:k + 1]
        s_mid = 0.5 * (s_all[:-1] + s_all[1:])
        weights = 2.0 * (np.sqrt(t - s_all[:-1]) - np.sqrt(t - s_all[1:]))
        reg = np.array([
            0.5 * kern.sigma**2 * kern.dxG(bt, t, b_at(sm), sm)
            * math.sqrt(t - sm) for sm in s_mid
        ])
        coeff = reg * weights
        acc = N_of_t(k)
        # trapezoidal v on each subinterval; the k-th value is implicit
        acc -= float(np.dot(coeff[:-1], 0.5 * (v[:k - 1] + v[1:k]))) \
            if k > 1 else 0.0
        acc -= coeff[-1] * 0.5 * v[k - 1]
        v[k] = acc / (lhs + 0.5 * coeff[-1])
    return v


def solve_volterra(curve: BoundaryCurve, surface: SolutionSurface, t0: float,
                   params: MarketParams, law: JumpLaw | None,
                   opts: SolverOptions | None = None):
    """v on the surface's t-levels in [t0, T]; nan before t0.

    Returns (t, v) with t the full surface time axis.
    """
    if not params.constant_sigma:
        raise ValueError("Volterra check requires constant sigma")
    grid = surface.grid
    if t0 < DIAG_LEVEL_SKIP * grid.dt - 1e-12:
        raise ValueError(f"t0 must be at least {DIAG_LEVEL_SKIP}*dt "
                         "(initial layer)")
    opts = opts or SolverOptions()
    k0 = int(round(t0 / grid.dt))
    sigma = float(params.sigma_at(np.array([math.log(params.K)]), t0)[0])
    mu = drift_mu(params, law) if law is not None else params.r - params.q
    kern = GreenKernel(sigma=sigma, c=mu - 0.5 * sigma**2,
                       rho=params.r + params.lam)

    x = grid.x
    w = surface.dt_u()
    lam = params.lam
    levels = np.arange(k0, grid.nt + 1)
    t_levels = grid.t[levels]

    h_rows = None
    if law is not None and lam > 0.0:
        op = build_jump_operator(grid, law, params.K, opts.n_quad,
                                 opts.tail_width)
        zero = lambda y: np.zeros_like(y)
        # d/dt u vanishes in the stopping region and at the far field
        h_rows = lam * np.array([op.apply(w[k], low_ext=zero, high_ext=zero)
                                 for k in levels])

    b_at = lambda t: float(curve.at(t))
    w0 = w[k0]

    def N_of_t(k_rel: int) -> float:
        t = t_levels[k_rel]
        bt = b_at(t)
        total = dxG_linear_integral(kern, bt, t, t_levels[0], bt, x, w0)
        if h_rows is not None:
            s_all = t_levels[:k_rel + 1]
            s_mid = 0.5 * (s_all[:-1] + s_all[1:])
            weights = 2.0 * (np.sqrt(t - s_all[:-1]) - np.sqrt(t - s_all[1:]))
            xi = x[1:-1]
            for j, sm in enumerate(s_mid):
                h_mid = 0.5 * (h_rows[j] + h_rows[j + 1])
                bs = b_at(sm)
                inner = dxG_linear_integral(kern, bt, t, sm, bs, xi, h_mid)
                total += inner * math.sqrt(t - sm) * weights[j]
        return total

    i0 = _first_continuation_index(x, b_at(t_levels[0]), grid.dx)
    v0, _ = _one_sided_fit(x[i0:i0 + 3], w[k0, i0:i0 + 3], b_at(t_levels[0]))

    v_window = march_volterra(kern, t_levels, b_at, N_of_t, v0)
    v = np.full(grid.nt + 1, np.nan)
    v[levels] = v_window
    return grid.t, v


def cross_derivative_fd(surface: SolutionSurface, curve: BoundaryCurve):
    """Finite-difference oracle: one-sided d/dx of d/dt u at b(t)+."""
    grid = surface.grid
    x = grid.x
    w = surface.dt_u()
    out = np.full(grid.nt + 1, np.nan)
    for k in range(DIAG_LEVEL_SKIP, grid.nt + 1):
        b = curve.b[k]
        if not np.isfinite(b):
            continue
        i = _first_continuation_index(x, b, grid.dx)
        if i + 2 > grid.nx + 1:
            continue
        out[k], _ = _one_sided_fit(x[i:i + 3], w[k, i:i + 3], b)
    return grid.t, out

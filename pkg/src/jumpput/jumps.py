"""Discrete jump-integral operator: quadrature of u(x+z) against the jump law.

Off-grid evaluation is linear interpolation; below the grid the solution is
extended by the deep-stopping value K - e^x, above the grid by 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .grids import Grid
from .model import DiscreteJumps, JumpLaw, KouJumps, MertonJumps

COVERAGE_TOL = 1e-6


class CoverageError(ValueError):
    """Truncated jump-law mass exceeds the allowed tolerance."""


def _gauss_panels(a: float, b: float, n_nodes: int, panel_size: int = 16):
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    n_panels = max(1, int(math.ceil(n_nodes / panel_size)))
    gl_x, gl_w = np.polynomial.legendre.leggauss(panel_size)
    edges = np.linspace(a, b, n_panels + 1)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (lo + hi) + half * gl_x)
        weights.append(half * gl_w)
    return np.concatenate(nodes), np.concatenate(weights)


def jump_quadrature(law: JumpLaw, n_quad: int = 160, tail_width: float = 6.0):
    """Quadrature nodes z, raw weights (before normalization), and the
    analytically truncated mass."""
    if isinstance(law, DiscreteJumps):
        z = np.array([p for p, _ in law.points])
        w = np.array([p for _, p in law.points])
        return z, w, 0.0
    if isinstance(law, MertonJumps):
        a = law.m - tail_width * law.s
        b = law.m + tail_width * law.s
        z, glw = _gauss_panels(a, b, n_quad)
        w = glw * norm.pdf(z, loc=law.m, scale=law.s)
        trunc = 2.0 * norm.sf(tail_width)
        return z, w, trunc
    if isinstance(law, KouJumps):
        # normal-equivalent per-side tail target
        tau = float(norm.sf(tail_width))
        nodes, weights = [], []
        trunc = 0.0
        p, e1, e2 = law.p, law.eta1, law.eta2
        if 1.0 - p > 0.0:
            z_lo = -math.log((1.0 - p) / tau) / e2 if (1.0 - p) > tau else -1.0 / e2
            z_lo = min(z_lo, -1e-12)
            zn, wn = _gauss_panels(z_lo, 0.0, n_quad // 2)
            nodes.append(zn)
            weights.append(wn * (1.0 - p) * e2 * np.exp(e2 * zn))
            trunc += (1.0 - p) * math.exp(e2 * z_lo)
        if p > 0.0:
            z_hi = math.log(p / tau) / e1 if p > tau else 1.0 / e1
            z_hi = max(z_hi, 1e-12)
            zp, wp = _gauss_panels(0.0, z_hi, n_quad // 2)
            nodes.append(zp)
            weights.append(wp * p * e1 * np.exp(-e1 * zp))
            trunc += p * math.exp(-e1 * z_hi)
        return np.concatenate(nodes), np.concatenate(weights), trunc
    raise TypeError(f"unknown jump law {type(law).__name__}")


def _interp_with_ext(x: np.ndarray, row: np.ndarray, y: np.ndarray, K: float,
                     low_ext=None, high_ext=None) -> np.ndarray:
    """Linear interpolation of row (on nodes x) at points y with the
    deep-stopping / far-field extensions beyond the grid."""
    vals = np.interp(y, x, row)
    below = y < x[0]
    above = y > x[-1]
    if np.any(below):
        vals[below] = (K - np.exp(y[below])) if low_ext is None else low_ext(y[below])
    if np.any(above):
        vals[above] = 0.0 if high_ext is None else high_ext(y[above])
    return vals


@dataclass
class JumpOperator:
    """Precomputed linear map u |-> int u(x+z) nu(dz) on the interior nodes."""

    grid: Grid
    law: JumpLaw
    K: float
    z: np.ndarray
    q: np.ndarray          # normalized weights, sum 1
    trunc_mass: float
    xi_quad: float = field(init=False)
    _mat: np.ndarray = field(init=False, repr=False)
    _affine: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.xi_quad = float(np.sum(self.q * np.exp(self.z)))
        x = self.grid.x
        xi = x[1:-1]
        dx = self.grid.dx
        n = len(xi)
        mat = np.zeros((n, len(x)))
        affine = np.zeros(n)
        for zj, qj in zip(self.z, self.q):
            y = xi + zj
            pos = (y - x[0]) / dx
            below = y < x[0]
            above = y > x[-1]
            inside = ~(below | above)
            k = np.clip(np.floor(pos[inside]).astype(int), 0, len(x) - 2)
            frac = pos[inside] - k
            rows = np.nonzero(inside)[0]
            np.add.at(mat, (rows, k), qj * (1.0 - frac))
            np.add.at(mat, (rows, k + 1), qj * frac)
            affine[below] += qj * (self.K - np.exp(y[below]))
        self._mat = mat
        self._affine = affine

    def apply(self, row: np.ndarray, low_ext=None, high_ext=None) -> np.ndarray:
        """Jump integral at the interior nodes for a full grid row."""
        if low_ext is None and high_ext is None:
            return self._mat @ row + self._affine
        x = self.grid.x
        out = np.zeros(self.grid.nx)
        for zj, qj in zip(self.z, self.q):
            out += qj * _interp_with_ext(x, row, x[1:-1] + zj, self.K,
                                         low_ext, high_ext)
        return out

    def convolve_at(self, xq: np.ndarray, row: np.ndarray) -> np.ndarray:
        """Jump integral of the row at arbitrary log-prices xq."""
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        out = np.zeros_like(xq)
        for zj, qj in zip(self.z, self.q):
            out += qj * _interp_with_ext(self.grid.x, row, xq + zj, self.K)
        return out

    def exercise_gap_integral(self, xq: np.ndarray, row: np.ndarray) -> np.ndarray:
        """Integral of [u(x+z) + e^{x+z} - K] nu(dz) at points xq.

        Below the grid the integrand vanishes identically (u = K - e^x there);
        above the grid u = 0 so the integrand is e^{x+z} - K.
        """
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        x = self.grid.x
        out = np.zeros_like(xq)
        for zj, qj in zip(self.z, self.q):
            y = xq + zj
            vals = np.interp(y, x, row) + np.exp(y) - self.K
            vals[y < x[0]] = 0.0
            above = y > x[-1]
            vals[above] = np.exp(y[above]) - self.K
            out += qj * vals
        return out


def build_jump_operator(grid: Grid, law: JumpLaw, K: float, n_quad: int = 160,
                        tail_width: float = 6.0) -> JumpOperator:
    z, w, trunc = jump_quadrature(law, n_quad, tail_width)
    if trunc > COVERAGE_TOL:
        raise CoverageError(
            f"truncated jump mass {trunc:.3e} exceeds {COVERAGE_TOL:.0e}; "
            "widen tail_width"
        )
    q = w / w.sum()
    return JumpOperator(grid=grid, law=law, K=K, z=z, q=q, trunc_mass=trunc)

#!/usr/bin/env python3
"""Boundary Holder-exponent study: estimate the modulus exponent on the
bulk window [0.2T, T] and the near-maturity window [5dt, 0.1T] across grid
refinements of the diffusion-only benchmark."""

from jumpput.boundary import extract_boundary, holder_exponent
from jumpput.grids import default_grid
from jumpput.model import MarketParams
from jumpput.solver import solve_pide

params = MarketParams(r=0.05, q=0.0, lam=0.0, K=100.0, T=1.0, sigma=0.2)

print(f"{'grid':>12} {'bulk alpha':>11} {'r2':>6} {'near-0 alpha':>13} {'r2':>6}")
for nx, nt in ((400, 400), (800, 400), (1600, 400)):
    grid = default_grid(params, None, nx=nx, nt=nt)
    surf = solve_pide(params, None, grid)
    curve = extract_boundary(surf, "smoothfit_cross")
    a_bulk, r2_bulk = holder_exponent(curve, 0.2 * grid.T, grid.T)
    a_near, r2_near = holder_exponent(curve, 0.0, 0.1 * grid.T)
    print(f"{nx:>6}x{nt:<5} {a_bulk:>11.4f} {r2_bulk:>6.3f} "
          f"{a_near:>13.4f} {r2_near:>6.3f}")

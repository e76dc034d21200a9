import math

import numpy as np
import pytest
from scipy.special import erf

from jumpput.boundary import extract_boundary
from jumpput.volterra import (GreenKernel, KernelError, cross_derivative_fd,
                              dxG_linear_integral, march_volterra,
                              solve_volterra)


def test_kernel_total_mass_is_discount():
    kern = GreenKernel(sigma=0.25, c=0.03, rho=0.08)
    mass = kern.cell_mass(4.6, 0.7, -50.0, 60.0, 0.2)
    assert mass == pytest.approx(math.exp(-0.08 * 0.5), abs=1e-14)


def test_kernel_needs_positive_time_gap():
    kern = GreenKernel(sigma=0.25, c=0.0, rho=0.0)
    with pytest.raises(KernelError):
        kern.G(0.0, 0.5, 0.0, 0.5)
    with pytest.raises(KernelError):
        kern.cell_mass(0.0, 0.2, -1.0, 1.0, 0.5)


def test_dxG_matches_numerical_derivative():
    kern = GreenKernel(sigma=0.2, c=0.05, rho=0.1)
    x, t, s = 4.6, 0.8, 0.3
    y = np.linspace(3.8, 5.4, 7)
    h = 1e-6
    num = (kern.G(x + h, t, y, s) - kern.G(x - h, t, y, s)) / (2 * h)
    assert np.allclose(kern.dxG(x, t, y, s), num, atol=1e-6)


def test_dxG_linear_integral_matches_dense_quadrature():
    kern = GreenKernel(sigma=0.2, c=0.02, rho=0.05)
    x, t, s, lo = 4.5, 0.9, 0.4, 4.3
    nodes = np.linspace(3.0, 7.0, 400)
    fvals = np.maximum(100.0 - np.exp(0.8 * nodes), 0.0) / 50.0
    got = dxG_linear_integral(kern, x, t, s, lo, nodes, fvals)
    yq = np.linspace(lo, 7.0, 400001)
    fq = np.interp(yq, nodes, fvals)
    want = np.trapezoid(kern.dxG(x, t, yq, s) * fq, yq)
    assert got == pytest.approx(want, rel=1e-6)


def test_march_zero_data_stays_zero():
    kern = GreenKernel(sigma=0.2, c=0.0, rho=0.05)
    t = np.linspace(0.2, 1.0, 65)
    v = march_volterra(kern, t, lambda s: 0.1, lambda k: 0.0, 0.0)
    assert np.all(v == 0.0)


def test_manufactured_flat_boundary():
    # w = erf((y - b0) / (sigma sqrt(2 t))) solves the half-line heat
    # problem with w(b0, t) = 0; its boundary flux is known in closed form
    sigma, b0, t0 = 0.3, 1.0, 0.1
    kern = GreenKernel(sigma=sigma, c=0.0, rho=0.0)
    nodes = np.linspace(b0, b0 + 4.0, 4000)
    w0 = erf((nodes - b0) / (sigma * math.sqrt(2.0 * t0)))
    t_levels = np.linspace(t0, 0.5, 81)
    exact = lambda t: 2.0 / (sigma * np.sqrt(2.0 * math.pi * t))

    def N_of_t(k):
        t = t_levels[k]
        return dxG_linear_integral(kern, b0, t, t0, b0, nodes, w0)

    v = march_volterra(kern, t_levels, lambda s: b0, N_of_t, exact(t0))
    rel = np.abs(v[1:] / exact(t_levels[1:]) - 1.0)
    assert np.max(rel) < 1e-3


def test_manufactured_traveling_wave():
    # b(t) = -beta (t - t0), w = exp(2 beta (x - b(t)) / sigma^2) - 1 solves
    # the free heat equation with constant boundary flux v = 2 beta / sigma^2
    sigma, beta, t0 = 0.2, 0.05, 0.1
    kern = GreenKernel(sigma=sigma, c=0.0, rho=0.0)
    vstar = 2.0 * beta / sigma**2
    b_at = lambda t: -beta * (t - t0)
    nodes = np.linspace(-1.0, 3.0, 4000)
    w0 = np.maximum(np.exp(vstar * (nodes - b_at(t0))) - 1.0, 0.0)
    w0[nodes < b_at(t0)] = 0.0
    t_levels = np.linspace(t0, 0.4, 121)

    def N_of_t(k):
        t = t_levels[k]
        return dxG_linear_integral(kern, b_at(t), t, t0, b_at(t), nodes, w0)

    v = march_volterra(kern, t_levels, b_at, N_of_t, vstar)
    assert np.max(np.abs(v / vstar - 1.0)) < 1e-2


def test_solve_volterra_tracks_fd_oracle(surface_nojump, params_nojump,
                                         curve_nojump):
    t, v = solve_volterra(curve_nojump, surface_nojump, 0.2,
                          params_nojump, None)
    _, vfd = cross_derivative_fd(surface_nojump, curve_nojump)
    m = np.isfinite(v) & np.isfinite(vfd) & (t > 0.2 + 1e-12)
    assert np.all(v[m] > 0.0)
    med = float(np.median(np.abs(v[m] - vfd[m]) / np.abs(vfd[m])))
    assert med <= 0.15


def test_solve_volterra_rejects_early_start(surface_nojump, params_nojump,
                                            curve_nojump):
    with pytest.raises(ValueError):
        solve_volterra(curve_nojump, surface_nojump, 1e-4, params_nojump,
                       None)

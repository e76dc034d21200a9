"""Free-boundary extraction and the regularity lab.

Everything here consumes an already-solved SolutionSurface: boundary curves,
the auxiliary function J and its level curve B, smooth-fit and second-
derivative-gap measurements, the b'(t) identity and a Holder-exponent
estimator for the extracted curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .jumps import JumpOperator, build_jump_operator
from .model import JumpLaw, MarketParams, drift_mu, j_strictly_increasing_guaranteed
from .solver import SolutionSurface

DIAG_LEVEL_SKIP = 10  # levels t < 10*dt are polluted by the initial layer


class BoundaryExtractionError(RuntimeError):
    pass


class NoRootError(RuntimeError):
    """J0 (or a J level set) has no sign change: B does not exist."""


@dataclass
class BoundaryCurve:
    t: np.ndarray
    b: np.ndarray
    method: str
    dx: float                  # extraction uncertainty
    first_level: int = 0       # index of the first level with a nonempty stopping set

    def at(self, t):
        return np.interp(t, self.t, self.b)


@dataclass
class DiagnosticsReport:
    t: np.ndarray
    b: np.ndarray
    smooth_fit_residual: np.ndarray
    uxx_gap: np.ndarray
    J_at_b: np.ndarray
    B_curve: np.ndarray               # B(t) on the same levels (nan: no root)
    B0: float | None
    b0_limit_expected: float
    b0_limit_measured: float
    holder_fit: tuple                 # (alpha_hat, r2)
    bprime_t: np.ndarray
    bprime_formula: np.ndarray
    bprime_fd: np.ndarray
    bprime_discrepancy: np.ndarray
    warnings: list = field(default_factory=list)


def extract_boundary(surface: SolutionSurface, method: str = "mask_edge",
                     contact_tol: float | None = None) -> BoundaryCurve:
    """Exercise boundary b(t) from a solved surface.

    mask_edge: largest grid x in contact with the payoff.
    smoothfit_cross: sub-grid zero crossing of (centered d/dx u) + e^x.
    """
    grid = surface.grid
    x = grid.x
    logK = math.log(surface.params.K)
    tol = (contact_tol if contact_tol is not None
           else 1e-6 * surface.params.K)
    g = surface.payoff
    b = np.full(grid.nt + 1, np.nan)
    first = None

    if method not in ("mask_edge", "smoothfit_cross"):
        raise ValueError(f"unknown extraction method {method!r}")
    for k in range(grid.nt + 1):
        contact = (surface.u[k] - g) <= tol
        contact &= x <= logK + grid.dx
        if not np.any(contact):
            continue
        if first is None:
            first = k
        i = np.nonzero(contact)[0][-1]
        if method == "mask_edge":
            b[k] = min(x[i], logK)
            continue
        # smoothfit_cross: sub-grid tangency point where the continuation-side
        # quadratic's slope crosses -e^x (the smooth-fit condition). The first
        # continuation node can sit inside the numerical contact layer, so the
        # fit starts one node further out.
        j = i + 1
        if j + 2 >= len(x):
            b[k] = min(x[i], logK)
            continue
        coef = np.polyfit(x[j:j + 3] - x[i], surface.u[k, j:j + 3], 2)
        s = 0.0
        ok = True
        for _ in range(8):
            fval = 2.0 * coef[0] * s + coef[1] + math.exp(x[i] + s)
            fder = 2.0 * coef[0] + math.exp(x[i] + s)
            if fder == 0.0:
                ok = False
                break
            s -= fval / fder
        if not ok or not np.isfinite(s):
            s = 0.0
        s = min(max(s, 0.0), grid.dx)  # u(x_i) = g pins b into [x_i, x_i + dx]
        b[k] = min(x[i] + s, logK)

    if first is None:
        raise BoundaryExtractionError("stopping region empty at every level")
    return BoundaryCurve(t=grid.t, b=b, method=method, dx=grid.dx,
                         first_level=first)


def J0_eval(x: float, params: MarketParams, law: JumpLaw | None) -> float:
    """J0(x) = q e^x - r K + lam * E[(e^{x+Z} - K)^+] (closed forms)."""
    val = params.q * math.exp(x) - params.r * params.K
    if law is not None and params.lam > 0.0:
        val += params.lam * law.call_partial_expectation(x, params.K)
    return val


def solve_B0(params: MarketParams, law: JumpLaw | None, tol: float = 1e-10) -> float:
    """Root of J0, bracketed by expansion then bisection."""
    if law is not None and params.lam > 0.0:
        if not j_strictly_increasing_guaranteed(params, law):
            raise NoRootError("J0 is not guaranteed strictly increasing; "
                              "B(0) may not exist or be unique")
    elif params.q <= 0.0:
        raise NoRootError("q = 0 and no upward jumps: J0 = -rK < 0 has no root")
    lo, hi = math.log(params.K) - 1.0, math.log(params.K) + 1.0
    for _ in range(60):
        if J0_eval(lo, params, law) < 0.0 < J0_eval(hi, params, law):
            return brentq(lambda xx: J0_eval(xx, params, law), lo, hi, xtol=tol)
        lo -= (hi - lo)
        hi += (hi - lo)
    raise NoRootError("no sign change of J0 after bracket expansion "
                      "(lim J0 = -rK < 0 case)")


def _jump_op_for(surface: SolutionSurface, law, n_quad=160, tail_width=6.0):
    if law is None or surface.params.lam == 0.0:
        return None
    return build_jump_operator(surface.grid, law, surface.params.K,
                               n_quad, tail_width)


def J_eval(x, t_index: int, surface: SolutionSurface, params: MarketParams,
           law: JumpLaw | None, jump_op: JumpOperator | None = None):
    """J(x, t_k) = q e^x - rK + lam * int [u(x+z) + e^{x+z} - K] nu(dz)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    val = params.q * np.exp(x) - params.r * params.K
    if law is not None and params.lam > 0.0:
        if jump_op is None:
            jump_op = _jump_op_for(surface, law)
        val = val + params.lam * jump_op.exercise_gap_integral(
            x, surface.u[t_index])
    return val if val.size > 1 else float(val[0])


def level_curve_B(surface: SolutionSurface, params: MarketParams,
                  law: JumpLaw | None, jump_op: JumpOperator | None = None):
    """B(t_k): per-level root of x -> J(x, t_k). nan where no root in reach."""
    if jump_op is None:
        jump_op = _jump_op_for(surface, law)
    grid = surface.grid
    B = np.full(grid.nt + 1, np.nan)
    lo0 = grid.x_min
    hi0 = grid.x_max + 5.0  # J keeps increasing past the grid (u -> 0 there)
    for k in range(grid.nt + 1):
        f = lambda xx: float(np.atleast_1d(
            J_eval(xx, k, surface, params, law, jump_op))[0])
        if f(lo0) < 0.0 < f(hi0):
            B[k] = brentq(f, lo0, hi0, xtol=1e-10)
    return grid.t, B


def _first_continuation_index(x, b, dx):
    """Index of the first grid node strictly right of b."""
    i = int(np.searchsorted(x, b + 1e-12 * max(1.0, abs(b))))
    return i


def _one_sided_fit(x3, u3, at):
    """Quadratic through three nodes; returns (du/dx, d2u/dx2) at `at`."""
    coef = np.polyfit(x3 - at, u3, 2)
    return coef[1], 2.0 * coef[0]


def smooth_fit_residual(surface: SolutionSurface, curve: BoundaryCurve):
    """|d/dx u(b(t)+, t) + e^{b(t)}| from 3-point one-sided stencils."""
    return _boundary_derivatives(surface, curve)[1]


def uxx_gap(surface: SolutionSurface, curve: BoundaryCurve):
    """d2/dx2 u(b(t)+, t) + e^{b(t)} (positive by the level-curve argument)."""
    return _boundary_derivatives(surface, curve)[2]


def _boundary_derivatives(surface: SolutionSurface, curve: BoundaryCurve,
                          values: np.ndarray | None = None):
    """Per-level one-sided first/second x-derivative measurements at b(t)+.

    Returns (levels, |du/dx + e^b|, d2u/dx2 + e^b); nan at skipped levels.
    values: surface rows to differentiate (defaults to u itself).
    """
    grid = surface.grid
    x = grid.x
    rows = surface.u if values is None else values
    res = np.full(grid.nt + 1, np.nan)
    gap = np.full(grid.nt + 1, np.nan)
    for k in range(DIAG_LEVEL_SKIP, grid.nt + 1):
        b = curve.b[k]
        if not np.isfinite(b):
            continue
        i = _first_continuation_index(x, b, grid.dx)
        if i + 2 > grid.nx + 1:
            continue  # fewer than 3 continuation nodes: level skipped
        # derivative at the first continuation node (not extrapolated to b,
        # which would be circular with the tangency extraction); the O(dx)
        # offset is exactly what the residual is meant to measure
        du, d2u = _one_sided_fit(x[i:i + 3], rows[k, i:i + 3], x[i])
        res[k] = abs(du + math.exp(b))
        gap[k] = d2u + math.exp(b)
    return grid.t, res, gap


def bprime_identity(surface: SolutionSurface, curve: BoundaryCurve,
                    params: MarketParams, law: JumpLaw | None,
                    jump_op: JumpOperator | None = None,
                    den_tol: float = 1e-8):
    """b'(t) from the cross-derivative quotient vs. finite differences.

    Returns (t, b'_formula, b'_fd, |relative discrepancy|), nan at skipped
    levels. Requires constant sigma for the identity as derived (variable
    sigma is evaluated at (b(t), t)).
    """
    grid = surface.grid
    x = grid.x
    w = surface.dt_u()
    if jump_op is None:
        jump_op = _jump_op_for(surface, law)
    mu = drift_mu(params, law) if law is not None else params.r - params.q
    lam = params.lam
    r, K = params.r, params.K

    n = grid.nt + 1
    b_formula = np.full(n, np.nan)
    b_fd = np.full(n, np.nan)
    disc = np.full(n, np.nan)
    for k in range(DIAG_LEVEL_SKIP, n):
        b = curve.b[k]
        if not np.isfinite(b):
            continue
        i = _first_continuation_index(x, b, grid.dx)
        if i + 2 > grid.nx + 1:
            continue
        dwdx, _ = _one_sided_fit(x[i:i + 3], w[k, i:i + 3], b)
        sig = float(params.sigma_at(np.array([b]), grid.t[k])[0])
        fval = 0.0
        if jump_op is not None:
            fval = lam * float(jump_op.convolve_at(b, surface.u[k])[0])
        den = (mu - r - lam) * math.exp(b) + (r + lam) * K - fval
        if abs(den) < den_tol:
            raise BoundaryExtractionError(
                f"b' identity denominator ~ 0 at t={grid.t[k]:.6g}; "
                "second-derivative gap should be positive"
            )
        b_formula[k] = -0.5 * sig**2 * dwdx / den
        if DIAG_LEVEL_SKIP < k < n - 1:
            b_fd[k] = (curve.b[k + 1] - curve.b[k - 1]) / (2.0 * grid.dt)
            if b_fd[k] != 0.0:
                disc[k] = abs(b_formula[k] - b_fd[k]) / abs(b_fd[k])
    return grid.t, b_formula, b_fd, disc


HOLDER_BINS = 24


def holder_exponent(curve: BoundaryCurve, t_lo: float, t_hi: float):
    """Holder exponent estimate from the decay modulus at the window start.

    The boundary decays fastest at the left edge of the window, so the
    modulus sup |b(t1) - b(t2)| over pairs with gap g is realized by the
    pairs (t_lo, t_lo + g); measuring only those avoids the upward bias a
    max over all anchors picks up from extraction noise. Decrements below
    the 2*dx noise floor and gaps above a quarter of the window are
    discarded; the surviving (gap, decrement) samples are averaged over
    log-uniform gap bins and fitted by least squares in log-log scale.
    Returns (alpha_hat, r_squared).
    """
    sel = (curve.t >= t_lo - 1e-12) & (curve.t <= t_hi + 1e-12) & np.isfinite(curve.b)
    t = curve.t[sel]
    b = curve.b[sel]
    if len(t) < 20:
        raise ValueError("need at least 20 levels in [t_lo, t_hi]")
    gap_max = (t_hi - t_lo) / 4.0
    gap = t[1:] - t[0]
    diff = b[0] - b[1:]
    keep = (gap <= gap_max) & (diff > 2.0 * curve.dx)
    if keep.sum() < 10:
        raise ValueError("fewer than 10 usable pairs above the noise floor")
    lg = np.log(gap[keep])
    ld = np.log(diff[keep])
    edges = np.linspace(lg.min() - 1e-12, lg.max() + 1e-12, HOLDER_BINS + 1)
    X, Y = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        in_bin = (lg >= lo) & (lg < hi)
        if np.any(in_bin):
            X.append(lg[in_bin].mean())
            Y.append(ld[in_bin].mean())
    X = np.array(X)
    Y = np.array(Y)
    A = np.vstack([X, np.ones_like(X)]).T
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    fit = A @ coef
    ss_res = float(np.sum((Y - fit) ** 2))
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def diagnose(surface: SolutionSurface, params: MarketParams,
             law: JumpLaw | None, method: str = "smoothfit_cross") -> DiagnosticsReport:
    """Full regularity report for one solved surface."""
    warnings_ = []
    if law is not None and params.lam > 0.0 and \
            not j_strictly_increasing_guaranteed(params, law):
        warnings_.append("level-curve machinery not guaranteed: q = 0 and the "
                         "jump law has no upward mass")
    curve = extract_boundary(surface, method)
    jump_op = _jump_op_for(surface, law)
    t, res, gap = _boundary_derivatives(surface, curve)
    J_at_b = np.full_like(res, np.nan)
    for k in range(DIAG_LEVEL_SKIP, len(t)):
        if np.isfinite(curve.b[k]):
            J_at_b[k] = np.atleast_1d(
                J_eval(curve.b[k], k, surface, params, law, jump_op))[0]
    _, B = level_curve_B(surface, params, law, jump_op)

    from .model import check_yang_condition
    yang, _ = check_yang_condition(params, law) if law is not None and \
        params.lam > 0.0 else (params.r >= params.q, 0.0)
    logK = math.log(params.K)
    try:
        B0 = solve_B0(params, law)
    except NoRootError:
        B0 = None
    expected = logK if yang else min(logK, B0 if B0 is not None else logK)
    t_small = 5 * surface.grid.dt
    measured = float(curve.at(t_small))

    try:
        hfit = holder_exponent(curve, 0.2 * surface.grid.T, surface.grid.T)
    except ValueError as exc:
        hfit = (float("nan"), float("nan"))
        warnings_.append(f"holder fit unavailable: {exc}")
    bt, bf, bfd, bdisc = bprime_identity(surface, curve, params, law, jump_op)
    return DiagnosticsReport(
        t=t, b=curve.b, smooth_fit_residual=res, uxx_gap=gap, J_at_b=J_at_b,
        B_curve=B, B0=B0, b0_limit_expected=expected,
        b0_limit_measured=measured, holder_fit=hfit, bprime_t=bt,
        bprime_formula=bf, bprime_fd=bfd, bprime_discrepancy=bdisc,
        warnings=warnings_,
    )

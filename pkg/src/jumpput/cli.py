"""Command-line entry point.

Subcommands: solve, iterate, diagnose, volterra, mc, verify. Every
subcommand accepts --config/--out/--seed plus dotted overrides such as
`--grid.nx 200`; artifacts are deterministic CSV/JSON with the resolved
configuration embedded. Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .artifacts import write_csv, write_json
from .boundary import (BoundaryExtractionError, NoRootError, diagnose,
                       extract_boundary)
from .config import (ConfigError, ExperimentConfig, apply_overrides,
                     config_from_dict, config_to_dict, load_config, make_grid,
                     make_law, make_params)
from .fixedpoint import NonMonotoneError, iterate
from .jumps import CoverageError
from .mc import martingale_statistic, policy_value, price_european, simulate
from .model import InfiniteMomentError
from .solver import InnerIterationError, solve_pide
from .volterra import KernelError, cross_derivative_fd, solve_volterra

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (InnerIterationError, BoundaryExtractionError,
                    NonMonotoneError, KernelError, CoverageError,
                    NoRootError, InfiniteMomentError, FloatingPointError,
                    np.linalg.LinAlgError)


def _parse_overrides(extra: list) -> dict:
    """['--grid.nx', '200', ...] -> {'grid.nx': '200', ...}."""
    overrides = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"override {tok!r} is missing a value")
            value = extra[i + 1]
            i += 1
        if "." not in key:
            raise ConfigError(f"unknown option --{key}")
        overrides[key] = value
        i += 1
    return overrides


def _resolve_config(args, extra) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        cfg = config_from_dict({})
    apply_overrides(cfg, _parse_overrides(extra))
    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _artifact_config(cfg: ExperimentConfig) -> dict:
    """Resolved config embedded in artifacts; the output location is not
    part of the experiment, so identical runs stay byte-identical."""
    conf = config_to_dict(cfg)
    conf.pop("out_dir", None)
    return conf


def _setup(cfg: ExperimentConfig):
    params = make_params(cfg)
    law = make_law(cfg)
    grid = make_grid(cfg, params, law)
    return params, law, grid


# subcommand implementations ------------------------------------------------

def cmd_solve(cfg: ExperimentConfig) -> int:
    params, law, grid = _setup(cfg)
    surf = solve_pide(params, law, grid, scheme=cfg.scheme)
    curve = extract_boundary(surf, cfg.diagnostics.extraction)
    conf = _artifact_config(cfg)
    out = Path(cfg.out_dir)

    rows = ((grid.t[k], grid.x[i], surf.u[k, i], int(surf.exercised[k, i]))
            for k in range(grid.nt + 1) for i in range(grid.nx + 2))
    write_csv(out / "surface.csv", ["t", "x", "u", "exercised"], rows, conf)
    write_csv(out / "boundary.csv", ["t", "b"],
              zip(grid.t.tolist(), curve.b.tolist()), conf)
    write_json(out / "solve_summary.json", {
        "price_at_S0": surf.price(cfg.mc.S0),
        "b_at_T": float(curve.b[-1]),
        "scheme": cfg.scheme,
        "grid": {"nx": grid.nx, "nt": grid.nt,
                 "x_min": grid.x_min, "x_max": grid.x_max},
    }, conf)
    print(f"price({cfg.mc.S0:g}) = {surf.price(cfg.mc.S0):.6f}  "
          f"b(T) = {curve.b[-1]:.6f}  -> {out}")
    return EXIT_OK


def cmd_iterate(cfg: ExperimentConfig) -> int:
    params, law, grid = _setup(cfg)
    trace = iterate(params, law, grid, scheme=cfg.scheme,
                    extraction=cfg.diagnostics.extraction)
    conf = _artifact_config(cfg)
    out = Path(cfg.out_dir)
    eps = 5.0 * grid.dt
    rows = [(n + 1, trace.sup_diffs[n],
             float(trace.boundaries[n].b[-1]),
             float(trace.boundaries[n].at(eps)))
            for n in range(len(trace.surfaces))]
    write_csv(out / "iterate.csv", ["n", "sup_diff", "b_at_T", "b_at_eps"],
              rows, conf)
    write_json(out / "iterate_summary.json", {
        "converged_at": trace.converged_at,
        "iterations": len(trace.surfaces),
        "final_sup_diff": trace.sup_diffs[-1],
        "price_at_S0": trace.surfaces[-1].price(cfg.mc.S0),
    }, conf)
    print(f"converged at n = {trace.converged_at} "
          f"(final update {trace.sup_diffs[-1]:.3e})  -> {out}")
    return EXIT_OK


def cmd_diagnose(cfg: ExperimentConfig) -> int:
    params, law, grid = _setup(cfg)
    surf = solve_pide(params, law, grid, scheme=cfg.scheme)
    rep = diagnose(surf, params, law, cfg.diagnostics.extraction)
    conf = _artifact_config(cfg)
    out = Path(cfg.out_dir)

    rows = zip(rep.t.tolist(), rep.b.tolist(), rep.B_curve.tolist(),
               rep.smooth_fit_residual.tolist(), rep.uxx_gap.tolist(),
               rep.bprime_formula.tolist(), rep.bprime_fd.tolist())
    write_csv(out / "diagnose.csv",
              ["t", "b", "B", "smooth_fit_residual", "uxx_gap",
               "bprime_formula", "bprime_fd"], rows, conf)
    write_json(out / "diagnose.json", {
        "B0": rep.B0,
        "b0_limit_expected": rep.b0_limit_expected,
        "b0_limit_measured": rep.b0_limit_measured,
        "holder_alpha": rep.holder_fit[0],
        "holder_r2": rep.holder_fit[1],
        "warnings": rep.warnings,
    }, conf)
    print(f"b(0+): measured {rep.b0_limit_measured:.6f}, expected "
          f"{rep.b0_limit_expected:.6f}; holder alpha "
          f"{rep.holder_fit[0]:.4f}  -> {out}")
    return EXIT_OK


def cmd_volterra(cfg: ExperimentConfig) -> int:
    params, law, grid = _setup(cfg)
    surf = solve_pide(params, law, grid, scheme=cfg.scheme)
    curve = extract_boundary(surf, cfg.diagnostics.extraction)
    t0 = cfg.diagnostics.t0_frac * grid.T
    t, v = solve_volterra(curve, surf, t0, params, law)
    _, vfd = cross_derivative_fd(surf, curve)
    from .boundary import bprime_identity
    _, bpf, bpfd, _ = bprime_identity(surf, curve, params, law)
    # bprime_formula = -(sigma^2/2) * vfd / den, so scaling by v/vfd swaps
    # in the Volterra cross-derivative without re-deriving the denominator
    ratio = np.where(np.isfinite(vfd) & (vfd != 0.0), v / vfd, np.nan)
    bp_v = bpf * ratio
    conf = _artifact_config(cfg)
    out = Path(cfg.out_dir)
    write_csv(out / "volterra.csv",
              ["t", "v", "v_fd", "bprime_from_v", "bprime_fd"],
              zip(t.tolist(), v.tolist(), vfd.tolist(), bp_v.tolist(),
                  bpfd.tolist()), conf)
    m = np.isfinite(v) & np.isfinite(vfd) & (t > t0 + 1e-12)
    med = float(np.median(np.abs(v[m] - vfd[m]) / np.abs(vfd[m])))
    write_json(out / "volterra_summary.json", {
        "t0": t0, "median_rel_err_vs_fd": med,
        "v_positive": bool(np.all(v[m] > 0.0)),
    }, conf)
    print(f"v vs finite differences: median rel err {med:.3f} on "
          f"({t0:g}, {grid.T:g}]  -> {out}")
    return EXIT_OK


def cmd_mc(cfg: ExperimentConfig) -> int:
    params, law, grid = _setup(cfg)
    n_steps = cfg.mc.n_steps or max(16, int(round(252 * params.T)))
    batch = simulate(params, law, cfg.mc.S0, cfg.mc.n_paths, n_steps,
                     cfg.seed)
    euro, euro_se = price_european(batch, params.K, params.r)
    mart, mart_se = martingale_statistic(batch)
    surf = solve_pide(params, law, grid, scheme=cfg.scheme)
    curve = extract_boundary(surf, cfg.diagnostics.extraction)
    pol, pol_se = policy_value(params, law, cfg.mc.S0, curve,
                               cfg.mc.n_paths, cfg.seed + 1, n_steps)
    conf = _artifact_config(cfg)
    out = Path(cfg.out_dir)
    write_json(out / "mc_summary.json", {
        "n_paths": cfg.mc.n_paths, "n_steps": n_steps,
        "european": {"mean": euro, "se": euro_se},
        "martingale_statistic": {"mean": mart, "se": mart_se},
        "policy": {"mean": pol, "se": pol_se},
        "pide_price": surf.price(cfg.mc.S0),
        "mean_jumps_per_path": float(batch.jump_counts.mean()),
    }, conf)
    print(f"european {euro:.4f} +- {euro_se:.4f}; policy {pol:.4f} +- "
          f"{pol_se:.4f}; pide {surf.price(cfg.mc.S0):.4f}  -> {out}")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, threads: int) -> int:
    from .verify import VerifySuite
    suite = VerifySuite(seed=cfg.seed, threads=threads)
    results = suite.run()
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{r.index:2d}] {r.name:<{width}}  {mark}  {r.detail}")
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} checks passed")
    write_json(Path(cfg.out_dir) / "verify_report.json", {
        "results": [{"index": r.index, "name": r.name, "passed": r.passed,
                     "detail": r.detail} for r in results],
        "all_passed": n_pass == len(results),
    }, _artifact_config(cfg))
    return EXIT_OK if n_pass == len(results) else 1


# determinism probe (shared with the verification suite) --------------------

def run_probe_artifacts(out_dir: str | Path, seed: int = 0):
    """Small solve/diagnose/volterra/mc runs whose artifacts must be
    byte-identical across repeated invocations."""
    cfg = config_from_dict({
        "market": {"r": 0.05, "q": 0.0, "lam": 0.3, "K": 100.0, "T": 1.0,
                   "sigma": 0.2},
        "jump": {"kind": "merton", "m": -0.1, "s": 0.2},
        "grid": {"nx": 64, "nt": 64},
        "mc": {"n_paths": 20000, "n_steps": 64},
        "out_dir": str(out_dir),
        "seed": seed,
    })
    cmd_solve(cfg)
    cmd_diagnose(cfg)
    cmd_volterra(cfg)
    cmd_mc(cfg)


# argument parsing ----------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jumpput",
        description="American put pricing under jump diffusions with "
                    "free-boundary regularity diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
            ("solve", "solve the obstacle problem, extract the boundary"),
            ("iterate", "run the monotone approximating scheme"),
            ("diagnose", "full regularity report for one solve"),
            ("volterra", "boundary-trace Volterra cross-check"),
            ("mc", "Monte Carlo pricing and policy lower bound"),
            ("verify", "run the full claim-verification suite")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--out", default=None, help="artifact directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = _resolve_config(args, extra)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "iterate":
            return cmd_iterate(cfg)
        if args.command == "diagnose":
            return cmd_diagnose(cfg)
        if args.command == "volterra":
            return cmd_volterra(cfg)
        if args.command == "mc":
            return cmd_mc(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.threads)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # domain violations surface as ValueError from the model layer
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())

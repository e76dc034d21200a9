"""Experiment configuration: a strict YAML-backed dataclass tree.

Unknown keys are rejected with path-qualified messages; dotted-path
overrides (grid.nx=200) come from the CLI.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .grids import Grid, default_grid
from .model import DiscreteJumps, JumpLaw, KouJumps, MarketParams, MertonJumps


class ConfigError(ValueError):
    pass


@dataclass
class MarketConfig:
    r: float = 0.05
    q: float = 0.0
    lam: float = 0.0
    K: float = 100.0
    T: float = 1.0
    sigma: float = 0.2


@dataclass
class JumpConfig:
    kind: str = "none"          # none | merton | kou | discrete
    m: float = 0.0              # merton mean
    s: float = 0.1              # merton std
    p: float = 0.5              # kou up probability
    eta1: float = 10.0
    eta2: float = 5.0
    points: list = field(default_factory=list)   # discrete [[z, w], ...]


@dataclass
class GridConfig:
    nx: int = 400
    nt: int = 400
    x_min: float | None = None
    x_max: float | None = None


@dataclass
class MCConfig:
    n_paths: int = 100000
    n_steps: int = 0            # 0: 252 steps per year
    S0: float = 100.0


@dataclass
class DiagnosticsConfig:
    extraction: str = "smoothfit_cross"
    t0_frac: float = 0.2        # Volterra / Holder window start, fraction of T


@dataclass
class ExperimentConfig:
    market: MarketConfig = field(default_factory=MarketConfig)
    jump: JumpConfig = field(default_factory=JumpConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    mc: MCConfig = field(default_factory=MCConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    scheme: str = "psor"
    out_dir: str = "out"
    seed: int = 0


_SECTIONS = {
    "market": MarketConfig,
    "jump": JumpConfig,
    "grid": GridConfig,
    "mc": MCConfig,
    "diagnostics": DiagnosticsConfig,
}


def _coerce(value, target, path: str):
    if target is None or value is None:
        return value
    if isinstance(target, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{path}: expected boolean, got {value!r}")
    if isinstance(target, int) and not isinstance(target, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        iv = int(float(value))
        if float(iv) != float(value):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        return iv
    if isinstance(target, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected number, got {value!r}")
    if isinstance(target, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    if isinstance(target, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected list, got {value!r}")
        return value
    return value


def _fill_section(obj, data: dict, path: str):
    names = {f.name for f in dataclasses.fields(obj)}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{path}.{key}: unknown key")
        current = getattr(obj, key)
        setattr(obj, key, _coerce(value, current, f"{path}.{key}"))
    return obj


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping")
    cfg = ExperimentConfig()
    top = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key, value in data.items():
        if key not in top:
            raise ConfigError(f"{key}: unknown key")
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a mapping")
            _fill_section(getattr(cfg, key), value, key)
        else:
            setattr(cfg, key, _coerce(value, getattr(cfg, key), key))
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: {exc}")
    return config_from_dict(data)


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Dotted-path overrides, e.g. {'grid.nx': '200'}."""
    for dotted, raw in overrides.items():
        parts = dotted.split(".")
        obj = cfg
        for part in parts[:-1]:
            if not hasattr(obj, part) or not dataclasses.is_dataclass(
                    getattr(obj, part)):
                raise ConfigError(f"{dotted}: unknown section {part!r}")
            obj = getattr(obj, part)
        leaf = parts[-1]
        if not hasattr(obj, leaf):
            raise ConfigError(f"{dotted}: unknown key")
        current = getattr(obj, leaf)
        if isinstance(raw, str) and current is not None \
                and not isinstance(current, str):
            try:
                raw = yaml.safe_load(raw)
            except yaml.YAMLError:
                raise ConfigError(f"{dotted}: cannot parse {raw!r}")
        setattr(obj, leaf, _coerce(raw, current, dotted))
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    if cfg.jump.kind not in ("none", "merton", "kou", "discrete"):
        raise ConfigError(f"jump.kind: unknown law {cfg.jump.kind!r}")
    if cfg.scheme not in ("psor", "penalty"):
        raise ConfigError(f"scheme: must be psor or penalty, got {cfg.scheme!r}")
    if cfg.diagnostics.extraction not in ("mask_edge", "smoothfit_cross"):
        raise ConfigError("diagnostics.extraction: must be mask_edge or "
                          "smoothfit_cross")
    if cfg.market.lam > 0.0 and cfg.jump.kind == "none":
        raise ConfigError("market.lam > 0 requires a jump law")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def make_params(cfg: ExperimentConfig) -> MarketParams:
    m = cfg.market
    return MarketParams(r=m.r, q=m.q, lam=m.lam, K=m.K, T=m.T, sigma=m.sigma)


def make_law(cfg: ExperimentConfig) -> JumpLaw | None:
    j = cfg.jump
    if j.kind == "none" or cfg.market.lam == 0.0:
        return None
    if j.kind == "merton":
        return MertonJumps(m=j.m, s=j.s)
    if j.kind == "kou":
        return KouJumps(p=j.p, eta1=j.eta1, eta2=j.eta2)
    if j.kind == "discrete":
        if not j.points:
            raise ConfigError("jump.points: discrete law needs points")
        return DiscreteJumps(points=tuple((float(z), float(w))
                                          for z, w in j.points))
    raise ConfigError(f"jump.kind: unknown law {j.kind!r}")


def make_grid(cfg: ExperimentConfig, params: MarketParams,
              law: JumpLaw | None) -> Grid:
    g = cfg.grid
    return default_grid(params, law, nx=g.nx, nt=g.nt,
                        x_min=g.x_min, x_max=g.x_max)

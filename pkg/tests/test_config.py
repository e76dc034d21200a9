import pytest

from jumpput.config import (ConfigError, apply_overrides, config_from_dict,
                            config_to_dict, load_config, make_grid, make_law,
                            make_params)
from jumpput.model import DiscreteJumps, KouJumps, MertonJumps


def test_defaults_round_trip():
    cfg = config_from_dict({})
    d = config_to_dict(cfg)
    assert d["market"]["K"] == 100.0
    assert config_to_dict(config_from_dict(d)) == d


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"marquet": {}})
    with pytest.raises(ConfigError, match="market.rr"):
        config_from_dict({"market": {"rr": 0.05}})


def test_type_coercion():
    cfg = config_from_dict({"grid": {"nx": "200"}, "market": {"r": "0.03"}})
    assert cfg.grid.nx == 200 and isinstance(cfg.grid.nx, int)
    assert cfg.market.r == 0.03
    with pytest.raises(ConfigError):
        config_from_dict({"grid": {"nx": 200.5}})
    with pytest.raises(ConfigError):
        config_from_dict({"scheme": 7})


def test_overrides():
    cfg = config_from_dict({})
    apply_overrides(cfg, {"grid.nx": "128", "market.lam": "0.3",
                          "jump.kind": "merton", "seed": "5"})
    assert cfg.grid.nx == 128
    assert cfg.market.lam == 0.3
    assert cfg.jump.kind == "merton"
    assert cfg.seed == 5
    with pytest.raises(ConfigError):
        apply_overrides(cfg, {"grid.nz": "1"})
    with pytest.raises(ConfigError):
        apply_overrides(cfg, {"nosuch.key": "1"})


def test_validation_rules():
    with pytest.raises(ConfigError, match="jump.kind"):
        config_from_dict({"jump": {"kind": "levy"}})
    with pytest.raises(ConfigError, match="scheme"):
        config_from_dict({"scheme": "simplex"})
    with pytest.raises(ConfigError, match="requires a jump law"):
        config_from_dict({"market": {"lam": 0.3}})


def test_make_law_kinds():
    assert make_law(config_from_dict({})) is None
    cfg = config_from_dict({"market": {"lam": 0.3},
                            "jump": {"kind": "merton", "m": -0.1, "s": 0.2}})
    assert make_law(cfg) == MertonJumps(m=-0.1, s=0.2)
    cfg = config_from_dict({"market": {"lam": 0.3},
                            "jump": {"kind": "kou", "p": 0.4,
                                     "eta1": 10.0, "eta2": 5.0}})
    assert make_law(cfg) == KouJumps(p=0.4, eta1=10.0, eta2=5.0)
    cfg = config_from_dict({"market": {"lam": 0.3},
                            "jump": {"kind": "discrete",
                                     "points": [[-0.2, 0.5], [0.1, 0.5]]}})
    assert make_law(cfg) == DiscreteJumps(points=((-0.2, 0.5), (0.1, 0.5)))
    with pytest.raises(ConfigError, match="points"):
        make_law(config_from_dict({"market": {"lam": 0.3},
                                   "jump": {"kind": "discrete"}}))


def test_make_grid_and_params():
    cfg = config_from_dict({"grid": {"nx": 64, "nt": 32,
                                     "x_min": 3.0, "x_max": 6.0}})
    params = make_params(cfg)
    grid = make_grid(cfg, params, None)
    assert grid.nx == 64 and grid.nt == 32
    assert grid.x_min == 3.0 and grid.x_max == 6.0
    assert grid.T == pytest.approx(params.T)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.yaml")


def test_load_config_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("market:\n  r: 0.03\ngrid:\n  nx: 96\n")
    cfg = load_config(p)
    assert cfg.market.r == 0.03 and cfg.grid.nx == 96
    bad = tmp_path / "bad.yaml"
    bad.write_text("market: [::\n")
    with pytest.raises(ConfigError):
        load_config(bad)

from pathlib import Path

import pytest

from nlch import config as cfgmod
from nlch.errors import ConfigParse, InvalidParameter, ResolutionGuard

ROOT = Path(__file__).resolve().parents[1]
MIN = {"grid": {"n": 64}, "kernel": {"eps": 0.1}}


def test_default_config_loads():
    spec = cfgmod.load(ROOT / "configs" / "default.toml")
    cfg = cfgmod.build(spec)
    assert cfg.grid.n == 64 and cfg.model.kind == "nonlocal_deg"
    assert cfg.initial.cos == (0.3, 0.1)


def test_defaults_filled():
    spec = cfgmod.resolve(MIN)
    assert spec["model"]["kind"] == "nonlocal" and spec["grid"]["dim"] == 1
    assert spec["time"]["dt_max"] is None


@pytest.mark.parametrize("raw", [
    {"grid": {"n": 64}, "kernel": {"eps": 0.1}, "extra": {}},
    {"grid": {"n": 64, "m": 3}, "kernel": {"eps": 0.1}},
    {"grid": {}, "kernel": {"eps": 0.1}},
    {"grid": {"n": "64"}, "kernel": {"eps": 0.1}},
    {"grid": {"n": 64.0}, "kernel": {"eps": 0.1}},
    {"grid": {"n": 64}, "kernel": {"eps": 0.1}, "initial": {"cos": [0.1, "x"]}},
    {"grid": {"n": 64}, "kernel": {"eps": 0.1}, "output": {"binary": 1}},
    {"grid": 3, "kernel": {"eps": 0.1}},
])
def test_resolve_errors(raw):
    with pytest.raises(ConfigParse):
        cfgmod.resolve(raw)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigParse):
        cfgmod.load(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid\nn = 3")
    with pytest.raises(ConfigParse):
        cfgmod.load(bad)


def test_relative_initial_path(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[grid]\nn = 64\n[kernel]\neps = 0.1\n[initial]\nkind = "file"\npath = "u0.dat"\n')
    assert cfgmod.load(p)["initial"]["path"] == str((tmp_path / "u0.dat").resolve())


def test_model_kind_selection():
    spec = cfgmod.resolve(MIN)
    assert cfgmod.model_kind(spec).kind == "nonlocal_deg"
    assert cfgmod.model_kind(spec, delta=0.1).kind == "nonlocal_reg"
    assert cfgmod.model_kind(spec, kind="local").kind == "local_deg"
    with pytest.raises(ConfigParse):
        cfgmod.model_kind(spec, kind="local", delta=0.1)
    with pytest.raises(ConfigParse):
        cfgmod.model_kind(spec, kind="quantum")
    with pytest.raises(ConfigParse):
        cfgmod.model_kind(spec, delta=-0.1)
    routed = cfgmod.resolve(dict(MIN, model={"route_via_reg": True}))
    mk = cfgmod.model_kind(routed)
    assert mk.kind == "nonlocal_reg" and mk.delta == 0.1


def test_build_guards():
    with pytest.raises(ResolutionGuard):
        cfgmod.build(cfgmod.resolve({"grid": {"n": 16}, "kernel": {"eps": 0.1}}))
    with pytest.raises(InvalidParameter):
        cfgmod.build(cfgmod.resolve(dict(MIN, potential={"potential": "power", "gamma": 2.0})))
    with pytest.raises(InvalidParameter):
        cfgmod.build(cfgmod.resolve(dict(MIN, model={"scheme": "rk4"})))


def test_build_overrides():
    spec = cfgmod.resolve(MIN)
    cfg = cfgmod.build(spec, eps=0.05, delta=0.1)
    assert cfg.eps == 0.05 and cfg.model.kind == "nonlocal_reg" and cfg.delta == 0.1

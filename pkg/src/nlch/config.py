"""TOML run configuration: schema, defaults and conversion to SimConfig.

Sections and keys (all optional except ``grid.n`` and ``kernel.eps``)::

    [grid]      dim = 1, n
    [model]     kind = "nonlocal" | "local", delta = 0.0,
                scheme = "explicit" | "stabilized", route_via_reg = false
    [kernel]    profile = "poly_bump" | "smooth_bump", eps
    [potential] potential = "double_well" | "power", gamma
    [time]      t_end, dt0, dt_min, dt_max, output_every
    [output]    snapshots = true, binary = false
    [initial]   kind = "modes" | "bump" | "file", mean, cos, sin, noise, seed,
                center, width, mass, path

``delta = 0`` selects the degenerate mobility max(u, 0); ``delta > 0`` the
truncated mobility T_delta (nonlocal only).  With ``route_via_reg`` a
degenerate nonlocal run is carried out with T_delta at delta = eps.
Unknown sections or keys are errors.
"""

from __future__ import annotations

import copy
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigParse
from .grid import Grid
from .kernel import build_kernel
from .potential import make_potential
from .solver import InitialSpec, ModelKind, SimConfig

_REQUIRED = object()

SCHEMA = {
    "grid": {"dim": 1, "n": _REQUIRED},
    "model": {"kind": "nonlocal", "delta": 0.0, "scheme": "explicit", "route_via_reg": False},
    "kernel": {"profile": "poly_bump", "eps": _REQUIRED},
    "potential": {"potential": "double_well", "gamma": None},
    "time": {"t_end": 0.01, "dt0": 1.0e-4, "dt_min": 1.0e-14, "dt_max": None, "output_every": 0.001},
    "output": {"snapshots": True, "binary": False},
    "initial": {
        "kind": "modes",
        "mean": 1.0,
        "cos": [],
        "sin": [],
        "noise": 0.0,
        "seed": 0,
        "center": [0.5, 0.5],
        "width": 0.1,
        "mass": 1.0,
        "path": "",
    },
}

_TYPES = {
    ("grid", "dim"): int,
    ("grid", "n"): int,
    ("model", "kind"): str,
    ("model", "delta"): float,
    ("model", "scheme"): str,
    ("model", "route_via_reg"): bool,
    ("kernel", "profile"): str,
    ("kernel", "eps"): float,
    ("potential", "potential"): str,
    ("potential", "gamma"): float,
    ("time", "t_end"): float,
    ("time", "dt0"): float,
    ("time", "dt_min"): float,
    ("time", "dt_max"): float,
    ("time", "output_every"): float,
    ("output", "snapshots"): bool,
    ("output", "binary"): bool,
    ("initial", "kind"): str,
    ("initial", "mean"): float,
    ("initial", "cos"): list,
    ("initial", "sin"): list,
    ("initial", "noise"): float,
    ("initial", "seed"): int,
    ("initial", "center"): list,
    ("initial", "width"): float,
    ("initial", "mass"): float,
    ("initial", "path"): str,
}


def _coerce(section, key, value):
    want = _TYPES[(section, key)]
    if value is None:
        return None
    if want is bool:
        ok = isinstance(value, bool)
    elif want is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif want is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif want is list:
        ok = isinstance(value, list) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        )
        value = [float(v) for v in value] if ok else value
    else:
        ok = isinstance(value, want)
    if not ok:
        raise ConfigParse(f"[{section}] {key} must be of type {want.__name__}, got {value!r}")
    return value


def resolve(raw: dict, base_dir: Path | None = None) -> dict:
    """Validate keys against the schema and fill defaults; returns a plain dict."""
    if not isinstance(raw, dict):
        raise ConfigParse("configuration must be a table")
    for section in raw:
        if section not in SCHEMA:
            raise ConfigParse(f"unknown section [{section}]")
        if not isinstance(raw[section], dict):
            raise ConfigParse(f"[{section}] must be a table")
    out = {}
    for section, defaults in SCHEMA.items():
        given = raw.get(section, {})
        for key in given:
            if key not in defaults:
                raise ConfigParse(f"unknown key {key!r} in [{section}]")
        sec = {}
        for key, default in defaults.items():
            if key in given:
                sec[key] = _coerce(section, key, given[key])
            elif default is _REQUIRED:
                raise ConfigParse(f"missing required key {key!r} in [{section}]")
            else:
                sec[key] = copy.deepcopy(default)
        out[section] = sec
    path = out["initial"]["path"]
    if path and base_dir is not None and not Path(path).is_absolute():
        out["initial"]["path"] = str((base_dir / path).resolve())
    return out


def load(path) -> dict:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParse(f"malformed config {path}: {exc}") from exc
    return resolve(raw, base_dir=path.parent)


def model_kind(spec: dict, kind: str | None = None, delta: float | None = None, eps: float | None = None):
    m = spec["model"]
    kind = m["kind"] if kind is None else kind
    delta = m["delta"] if delta is None else delta
    if kind == "local":
        if delta != 0.0:
            raise ConfigParse("the local model takes delta = 0")
        return ModelKind("local_deg")
    if kind != "nonlocal":
        raise ConfigParse(f"[model] kind must be 'nonlocal' or 'local', got {kind!r}")
    if delta > 0.0:
        return ModelKind("nonlocal_reg", delta)
    if delta < 0.0:
        raise ConfigParse(f"delta must be >= 0, got {delta}")
    if m["route_via_reg"]:
        eps = spec["kernel"]["eps"] if eps is None else eps
        return ModelKind("nonlocal_reg", eps)
    return ModelKind("nonlocal_deg")


def build(spec: dict, eps: float | None = None, delta: float | None = None, kind: str | None = None) -> SimConfig:
    """SimConfig from a resolved spec, with optional eps/delta/kind overrides."""
    g = spec["grid"]
    grid = Grid(g["dim"], g["n"])
    eps = spec["kernel"]["eps"] if eps is None else eps
    kernel = build_kernel(spec["kernel"]["profile"], eps, grid)
    pot = make_potential(spec["potential"]["potential"], spec["potential"]["gamma"])
    t = spec["time"]
    ini = spec["initial"]
    initial = InitialSpec(
        kind=ini["kind"],
        mean=ini["mean"],
        cos=tuple(ini["cos"]),
        sin=tuple(ini["sin"]),
        noise=ini["noise"],
        center=tuple(ini["center"]),
        width=ini["width"],
        mass=ini["mass"],
        path=ini["path"],
    )
    return SimConfig(
        grid=grid,
        model=model_kind(spec, kind, delta, eps),
        potential=pot,
        kernel=kernel,
        t_end=t["t_end"],
        dt0=t["dt0"],
        dt_min=t["dt_min"],
        output_every=t["output_every"],
        seed=ini["seed"],
        initial=initial,
        scheme=spec["model"]["scheme"],
        dt_max=t["dt_max"],
    )

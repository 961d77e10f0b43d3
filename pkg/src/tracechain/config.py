"""JSON configuration: validation and construction of scenario objects.

One document drives every command.  Sections::

    scale          {"kind": "identity" | "piecewise_linear" | "tabulated"
                    | "fat_cantor", ...}
    speed          {"density": {"breakpoints": [...], "values": [...]},
                    "atoms": [[x, w], ...]}
    partition      {"kind": "uniform" | "explicit" | "svc_endpoints", ...}
    test_functions [{"kind": "cosine" | "polynomial" | "indicator"
                     | "piecewise_linear" | "s_adapted", ...}, ...]
    lambdas        [positive floats]
    resolutions    [strictly increasing ints]
    reference      {"kind": "closed_form", "modes": 64}
                   | {"kind": "fine_grid", "n_ref": 4096}
    simulation     {"horizon", "replicas", "seed", "initial",
                    "sample_paths"}
    capacity       {"window": [a, b], "horizons": [...], "replicas": int}
    outputs        {"timestamp": bool, "plots": bool}

Validation errors carry the JSON path of the offending field; parse errors
carry the line and column.
"""

from __future__ import annotations

import hashlib
import json

from .errors import ConfigError
from .scale_speed import (
    CosineMode,
    IndicatorFunction,
    PiecewiseLinearFunction,
    PolynomialFunction,
    SAdaptedFunction,
    ScaleFunction,
    SpeedMeasure,
    build_fat_cantor_scale,
    DEFAULT_REMOVALS,
)
from .trace_chain import build_partition

DEFAULT_SPEED = {"density": {"breakpoints": [0.0, 1.0], "values": [1.0]}, "atoms": []}
DEFAULT_SIMULATION = {"horizon": 1.0, "replicas": 1000, "seed": 20260809,
                      "initial": "stationary", "sample_paths": 3}
DEFAULT_CAPACITY = {"window": [0.45, 0.55], "horizons": [0.25, 1.0],
                    "replicas": 20000}
DEFAULT_OUTPUTS = {"timestamp": True, "plots": True}


def _fail(path, message):
    raise ConfigError(path, message)


def _get(section, key, path, kind=None, required=True, default=None):
    if key not in section:
        if required:
            _fail(f"{path}.{key}", "missing required field")
        return default
    value = section[key]
    if kind is not None and not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        _fail(f"{path}.{key}", f"expected {names}, got {type(value).__name__}")
    return value


def _number_list(section, key, path, required=True, default=None):
    vals = _get(section, key, path, kind=list, required=required, default=default)
    if vals is None:
        return None
    out = []
    for i, v in enumerate(vals):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            _fail(f"{path}.{key}[{i}]", "expected a number")
        out.append(float(v))
    return out


def _pair_list(section, key, path):
    vals = _get(section, key, path, kind=list)
    out = []
    for i, pair in enumerate(vals):
        if not isinstance(pair, list) or len(pair) != 2:
            _fail(f"{path}.{key}[{i}]", "expected a [x, y] pair")
        out.append([float(pair[0]), float(pair[1])])
    return out


class Config:
    """Validated configuration document."""

    def __init__(self, raw):
        if not isinstance(raw, dict):
            _fail("config", "top level must be a JSON object")
        self.raw = raw
        self._scale = None

    # -- section accessors ---------------------------------------------------

    def require(self, *sections):
        for name in sections:
            if name not in self.raw:
                _fail(f"config.{name}", "missing required section")

    def build_scale(self):
        if self._scale is not None:
            return self._scale
        sec = _get(self.raw, "scale", "config", kind=dict)
        kind = _get(sec, "kind", "config.scale", kind=str)
        if kind == "identity":
            scale = ScaleFunction.identity()
        elif kind in ("piecewise_linear", "tabulated"):
            pts = _pair_list(sec, "breakpoints", "config.scale")
            ctor = getattr(ScaleFunction, kind)
            scale = ctor(pts)
        elif kind == "fat_cantor":
            depth = _get(sec, "depth", "config.scale", kind=int)
            removals = _number_list(sec, "removals", "config.scale",
                                    required=False,
                                    default=list(DEFAULT_REMOVALS))
            scale = build_fat_cantor_scale(depth, removals)
        else:
            _fail("config.scale.kind", f"unknown scale kind {kind!r}")
        self._scale = scale
        return scale

    def build_speed(self):
        sec = self.raw.get("speed", DEFAULT_SPEED)
        if not isinstance(sec, dict):
            _fail("config.speed", "expected an object")
        dens = _get(sec, "density", "config.speed", kind=dict)
        bps = _number_list(dens, "breakpoints", "config.speed.density")
        vals = _number_list(dens, "values", "config.speed.density")
        atoms = sec.get("atoms", [])
        if not isinstance(atoms, list):
            _fail("config.speed.atoms", "expected a list of [x, weight] pairs")
        pairs = []
        for i, pair in enumerate(atoms):
            if not isinstance(pair, list) or len(pair) != 2:
                _fail(f"config.speed.atoms[{i}]", "expected a [x, weight] pair")
            pairs.append((float(pair[0]), float(pair[1])))
        return SpeedMeasure.piecewise(bps, vals, pairs)

    def build_partition(self):
        sec = _get(self.raw, "partition", "config", kind=dict)
        kind = _get(sec, "kind", "config.partition", kind=str)
        if kind == "uniform":
            return build_partition("uniform", n=_get(sec, "n", "config.partition", kind=int))
        if kind == "explicit":
            return build_partition("explicit",
                                   points=_number_list(sec, "points", "config.partition"))
        if kind == "svc_endpoints":
            removals = _number_list(sec, "removals", "config.partition",
                                    required=False, default=list(DEFAULT_REMOVALS))
            return build_partition("svc_endpoints",
                                   depth=_get(sec, "depth", "config.partition", kind=int),
                                   removals=removals)
        _fail("config.partition.kind", f"unknown partition kind {kind!r}")

    def build_test_functions(self):
        items = _get(self.raw, "test_functions", "config", kind=list)
        out = []
        for i, item in enumerate(items):
            path = f"config.test_functions[{i}]"
            if not isinstance(item, dict):
                _fail(path, "expected an object")
            kind = _get(item, "kind", path, kind=str)
            if kind == "cosine":
                out.append(CosineMode(_get(item, "mode", path, kind=int)))
            elif kind == "polynomial":
                out.append(PolynomialFunction(_number_list(item, "coefficients", path)))
            elif kind == "indicator":
                iv = _number_list(item, "interval", path)
                if len(iv) != 2:
                    _fail(f"{path}.interval", "expected [a, b]")
                out.append(IndicatorFunction(iv[0], iv[1]))
            elif kind == "piecewise_linear":
                out.append(PiecewiseLinearFunction(_pair_list(item, "breakpoints", path)))
            elif kind == "s_adapted":
                out.append(SAdaptedFunction(_pair_list(item, "breakpoints", path),
                                            self.build_scale()))
            else:
                _fail(f"{path}.kind", f"unknown test function kind {kind!r}")
        return out

    def lambdas(self):
        vals = _number_list(self.raw, "lambdas", "config")
        if not vals or any(v <= 0 for v in vals):
            _fail("config.lambdas", "expected a nonempty list of positive numbers")
        return vals

    def resolutions(self):
        vals = _get(self.raw, "resolutions", "config", kind=list)
        out = []
        for i, v in enumerate(vals):
            if not isinstance(v, int) or isinstance(v, bool) or v < 2:
                _fail(f"config.resolutions[{i}]", "expected an integer >= 2")
            out.append(v)
        if any(b <= a for a, b in zip(out, out[1:])):
            _fail("config.resolutions", "must be strictly increasing")
        return out

    def reference_spec(self):
        sec = _get(self.raw, "reference", "config", kind=dict)
        kind = _get(sec, "kind", "config.reference", kind=str)
        if kind == "closed_form":
            return {"kind": kind, "modes": _get(sec, "modes", "config.reference",
                                                kind=int, required=False, default=64)}
        if kind == "fine_grid":
            return {"kind": kind, "n_ref": _get(sec, "n_ref", "config.reference",
                                                kind=int, required=False, default=4096)}
        _fail("config.reference.kind", f"unknown reference kind {kind!r}")

    def simulation(self):
        sec = {**DEFAULT_SIMULATION, **self.raw.get("simulation", {})}
        horizon = sec["horizon"]
        if not isinstance(horizon, (int, float)) or horizon <= 0:
            _fail("config.simulation.horizon", "expected a positive number")
        for key in ("replicas", "seed", "sample_paths"):
            if not isinstance(sec[key], int) or isinstance(sec[key], bool):
                _fail(f"config.simulation.{key}", "expected an integer")
        init = sec["initial"]
        if not (init == "stationary" or isinstance(init, int)):
            _fail("config.simulation.initial",
                  'expected "stationary" or a state index')
        return sec

    def capacity(self):
        sec = {**DEFAULT_CAPACITY, **self.raw.get("capacity", {})}
        window = sec["window"]
        if (not isinstance(window, list) or len(window) != 2
                or not all(isinstance(v, (int, float)) for v in window)):
            _fail("config.capacity.window", "expected [a, b]")
        return sec

    def outputs(self):
        return {**DEFAULT_OUTPUTS, **self.raw.get("outputs", {})}


def load_config(path):
    """Read and validate a configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return Config(raw)


def config_sha256(raw):
    """Hash of the canonical JSON form; embedded in every report."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()

"""Experiment configuration: one strictly validated JSON document."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .domains import Domain, domain_from_config
from .families import (AnisotropicDiag2, MatrixList, PointMass, ScalarVolInterval, ScenarioFamily,
                       SigmaGrid, family_controls)
from .paths import TimeGrid

EXPERIMENTS = ("simulate", "exit-stats", "check-conditions", "exit-identity", "moment-bound",
               "qc-probe", "counterexample", "partition-approx")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_DOMAIN = {
    "type": "object",
    "required": ["type"],
    "oneOf": [
        _obj({"type": {"const": "half_space"}, "normal": _vec, "offset": _num}, ["type", "normal"]),
        _obj({"type": {"const": "ball"}, "center": _vec, "radius": _pos}, ["type", "center", "radius"]),
        _obj({"type": {"const": "ball_complement"}, "center": _vec, "radius": _pos}, ["type", "center", "radius"]),
        _obj({"type": {"const": "box"}, "lo": _vec, "hi": _vec}, ["type", "lo", "hi"]),
        _obj({"type": {"const": "interval"}, "a": _num, "b": _num}, ["type", "a", "b"]),
        _obj({"type": {"const": "lower_ray"}, "a": _num}, ["type"]),
        _obj({"type": {"const": "strip2d"}}, ["type"]),
        _obj({"type": {"const": "cone_test"}}, ["type"]),
        _obj({"type": {"const": "intersection"},
              "members": {"type": "array", "items": {"$ref": "#/$defs/domain"}, "minItems": 1}},
             ["type", "members"]),
    ],
}

_CONTROL = {
    "type": "object",
    "required": ["type"],
    "oneOf": [
        _obj({"type": {"const": "scalar_vol_interval"}, "sigma_lo": {"type": "number", "minimum": 0},
              "sigma_hi": _pos, "grid": {"type": "integer", "minimum": 1}}, ["type", "sigma_lo", "sigma_hi"]),
        _obj({"type": {"const": "sigma_grid"},
              "sigmas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}},
             ["type", "sigmas"]),
        _obj({"type": {"const": "matrix_list"},
              "matrices": {"type": "array", "minItems": 1,
                           "items": {"type": "array", "items": _vec, "minItems": 1}}},
             ["type", "matrices"]),
        _obj({"type": {"const": "anisotropic_diag2"},
              "alphas": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1}},
             ["type", "alphas"]),
        _obj({"type": {"const": "point_mass"},
              "xs": {"type": "array", "items": {"type": "number", "minimum": -1, "maximum": 1}, "minItems": 1}},
             ["type", "xs"]),
    ],
}

_FAMILY = _obj({
    "kind": {"enum": ["gbm", "pointmass"]},
    "control_set": _CONTROL,
    "schedule": _obj({
        "mode": {"enum": ["constant_only", "one_switch", "random_switch"]},
        "n_switch": {"type": "integer", "minimum": 1},
        "count": {"type": "integer", "minimum": 0},
    }, ["mode"]),
    "x0": _vec,
}, ["kind", "control_set"])

_GRID = _obj({
    "horizon": _pos,
    "steps": {"type": "integer", "minimum": 1},
    "dt": _pos,
    "dt_levels": {"type": "array", "items": _pos, "minItems": 2},
}, ["horizon"])

_PARAMS = {
    "simulate": _obj({"export": {"enum": ["ndjson", "none"]}}),
    "exit-stats": _obj({"export": {"enum": ["csv", "none"]}}),
    "check-conditions": _obj({"lambda": _pos, "epsilon": _pos, "n_check": {"type": "integer", "minimum": 1}}),
    "exit-identity": _obj({"lambda": _pos, "epsilon": _pos, "n_check": {"type": "integer", "minimum": 1},
                           "d_max": _pos}),
    "moment-bound": _obj({"lambda": _num, "epsilon": _pos, "component": {"type": "integer", "minimum": 0},
                          "t_big": _pos, "n_check": {"type": "integer", "minimum": 1}}),
    "qc-probe": _obj({"functional": {"enum": ["exit_open", "exit_closed", "endpoint"]},
                      "t": _pos, "eps": _pos,
                      "levels": {"type": "array", "items": _pos},
                      "deltas": {"type": "array", "items": _pos}}),
    "counterexample": _obj({"which": {"enum": ["pointmass", "degenerate_gbm", "anisotropic_2d"]},
                            "dt": _pos, "rho_max": _pos, "near_steps": {"type": "integer", "minimum": 1},
                            "near_alpha": {"type": "number", "minimum": 0, "maximum": 1},
                            "near_radius": _pos, "sigmas": {"type": "array", "items": {"type": "number", "minimum": 0}},
                            "alphas": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}}},
                           ["which"]),
    "partition-approx": _obj({"levels": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 20},
                                         "minItems": 1},
                              "taus": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
                              "n_random_taus": {"type": "integer", "minimum": 0}}),
}

# sections each experiment needs beyond the common keys
_NEEDS = {
    "simulate": ["family", "grid", "n_paths"],
    "exit-stats": ["family", "domain", "grid", "n_paths", "clamp"],
    "check-conditions": ["family", "domain", "grid"],
    "exit-identity": ["family", "domain", "grid", "n_paths", "clamp"],
    "moment-bound": ["family", "domain", "grid", "n_paths"],
    "qc-probe": ["family", "domain", "grid", "n_paths"],
    "counterexample": ["params"],
    "partition-approx": [],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"domain": _DOMAIN},
    **_obj({
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "n_paths": {"type": "integer", "minimum": 1},
        "clamp": _pos,
        "output_dir": {"type": "string"},
        "family": _FAMILY,
        "domain": {"$ref": "#/$defs/domain"},
        "grid": _GRID,
        "params": {"type": "object"},
    }, ["experiment", "seed"]),
    "allOf": [
        {"if": {"properties": {"experiment": {"const": name}}, "required": ["experiment"]},
         "then": {"required": _NEEDS[name], "properties": {"params": _PARAMS[name]}}}
        for name in EXPERIMENTS
    ],
}


class ConfigError(ValueError):
    """Validation failure; ``errors`` holds (json_pointer, message) pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p or '/'}: {m}" for p, m in self.errors))


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def validate(cfg: dict) -> dict:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        raise ConfigError((_pointer(e.absolute_path), _leaf_message(e)) for e in errors)
    grid = cfg.get("grid", {})
    n_specs = sum(k in grid for k in ("steps", "dt", "dt_levels"))
    if "grid" in cfg and n_specs != 1:
        raise ConfigError([("/grid", "give exactly one of steps, dt, dt_levels")])
    if cfg["experiment"] == "exit-identity" and "dt_levels" not in grid:
        raise ConfigError([("/grid/dt_levels", "exit-identity needs dt_levels")])
    if cfg["experiment"] != "exit-identity" and "dt_levels" in grid:
        raise ConfigError([("/grid/dt_levels", "only exit-identity takes several grid levels")])
    if cfg["experiment"] == "exit-stats" and cfg["clamp"] > grid["horizon"]:
        raise ConfigError([("/clamp", "clamp must not exceed the grid horizon")])
    return cfg


def _leaf_message(err) -> str:
    # oneOf failures are more useful when reported through the best-matching branch
    if err.validator == "oneOf" and err.context:
        best = jsonschema.exceptions.best_match(err.context)
        where = _pointer(best.relative_path)
        return f"{best.message}" + (f" (at {where})" if where else "")
    return err.message


def load(path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"invalid JSON: {exc}")]) from exc
    if not isinstance(cfg, dict):
        raise ConfigError([("", "config must be a JSON object")])
    return validate(cfg), raw


def build_grid(cfg: dict) -> TimeGrid:
    g = cfg["grid"]
    if "steps" in g:
        return TimeGrid(g["horizon"], g["steps"])
    if "dt" in g:
        return TimeGrid.from_dt(g["horizon"], g["dt"])
    return TimeGrid.from_dt(g["horizon"], max(g["dt_levels"]))


def build_domain(cfg: dict) -> Domain:
    return domain_from_config(cfg["domain"])


def build_control_set(cs: dict):
    kind = cs["type"]
    if kind == "scalar_vol_interval":
        return ScalarVolInterval(cs["sigma_lo"], cs["sigma_hi"], cs.get("grid", 3))
    if kind == "sigma_grid":
        return SigmaGrid(tuple(cs["sigmas"]))
    if kind == "matrix_list":
        return MatrixList(tuple(np.asarray(m, dtype=float) for m in cs["matrices"]))
    if kind == "anisotropic_diag2":
        return AnisotropicDiag2(tuple(cs["alphas"]))
    return PointMass(tuple(cs["xs"]))


def build_family(cfg: dict, grid: TimeGrid) -> ScenarioFamily:
    f = cfg["family"]
    cs = build_control_set(f["control_set"])
    sched = f.get("schedule", {"mode": "constant_only"})
    laws = family_controls(cs, sched["mode"], steps=grid.steps, n_switch=sched.get("n_switch", 4),
                           count=sched.get("count", 0), seed=cfg["seed"])
    x0 = f.get("x0", [0.0] * cs.dim)
    if f["kind"] == "pointmass" and not isinstance(cs, PointMass):
        raise ConfigError([("/family/control_set/type", "pointmass families need a point_mass control set")])
    if f["kind"] == "gbm" and isinstance(cs, PointMass):
        raise ConfigError([("/family/kind", "point_mass control sets need kind pointmass")])
    return ScenarioFamily(f["kind"], cs, laws, x0)

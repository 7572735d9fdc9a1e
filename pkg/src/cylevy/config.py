"""JSON configuration schema and resolution for the command line tool."""
from __future__ import annotations

import copy
import hashlib
import json

import jsonschema

__all__ = ["CONFIG_SCHEMA", "ConfigError", "validate_config", "resolve_config", "config_sha256"]

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_VEC = {"type": "array", "items": _NUM}

_MEASURE = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["stable", "tempered", "cp", "table"]},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
        "lambda": _POS,
        "atoms": {"type": "array", "items": {"type": "array", "items": _NUM,
                                             "minItems": 2, "maxItems": 2}},
        "knots": {"type": "array", "items": {"type": "array", "items": _NUM,
                                             "minItems": 2, "maxItems": 2}},
        "zero_exponent": _NUM,
        "tail_exponent": _NUM,
        "zero": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_SPECTRUM = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["laplacian", "power", "log", "explicit"]},
        "d": {"type": "integer", "minimum": 1},
        "c": _POS,
        "p": _NUM,
        "gammas": {"type": "array", "items": _POS, "minItems": 1},
    },
    "additionalProperties": False,
}

_BETA = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["power", "geometric", "explicit"]},
        "c": _POS,
        "p": _NUM,
        "r": _POS,
        "values": {"type": "array", "items": _POS, "minItems": 1},
    },
    "additionalProperties": False,
}

_BALL = {
    "type": "object",
    "required": ["center", "radius"],
    "properties": {"center": _VEC, "radius": _POS},
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["measure"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "model": {
            "type": "object",
            "properties": {"spectrum": _SPECTRUM, "beta": _BETA},
            "additionalProperties": False,
        },
        "measure": _MEASURE,
        "eps": _POS,
        "gaussian": {"type": "boolean"},
        "check": {
            "type": "object",
            "properties": {"n_max": {"type": "integer", "minimum": 16}, "tol": _POS, "t0": _POS},
            "additionalProperties": False,
        },
        "simulate": {
            "type": "object",
            "properties": {
                "t": _NONNEG,
                "M": {"type": "integer", "minimum": 100},
                "x0": _VEC,
                "N_grid": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "invariant": {
            "type": "object",
            "properties": {
                "N_modes": {"type": "integer", "minimum": 1},
                "M": {"type": "integer", "minimum": 1},
                "x0": _VEC,
                "times": {"type": "array", "items": _NONNEG, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "irreducibility": {
            "type": "object",
            "properties": {
                "t": _NONNEG,
                "N_modes": {"type": "integer", "minimum": 1},
                "M": {"type": "integer", "minimum": 1},
                "x0": _VEC,
                "ball": _BALL,
            },
            "additionalProperties": False,
        },
        "heat": {
            "type": "object",
            "properties": {
                "d": {"type": "integer", "minimum": 1, "maximum": 3},
                "N_modes": {"type": "integer", "minimum": 1},
                "M": {"type": "integer", "minimum": 0},
                "x0": _VEC,
                "times": {"type": "array", "items": _NONNEG, "minItems": 1},
                "grid_n": {"type": "integer", "minimum": 2},
                "n_max": {"type": "integer", "minimum": 16},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_DEFAULTS = {
    "seed": 0,
    "model": {"spectrum": {"type": "laplacian", "d": 1}, "beta": {"type": "power", "c": 1.0, "p": 0.0}},
    "eps": 1e-2,
    "gaussian": False,
    "check": {"n_max": 1000, "tol": 1e-6, "t0": 1.0},
    "simulate": {"t": 1.0, "M": 1000, "x0": [], "N_grid": [16, 32, 64, 128, 256]},
    "invariant": {"N_modes": 4, "M": 10000, "x0": [], "times": [0.5, 1.0, 2.0, 4.0, 8.0]},
    "irreducibility": {"t": 1.0, "N_modes": 64, "M": 100000, "x0": []},
    "heat": {"d": 1, "N_modes": 64, "M": 1000, "x0": [1.0], "times": [0.0, 0.1, 0.5, 1.0],
             "grid_n": 65, "n_max": 1000},
}


class ConfigError(ValueError):
    pass


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(cfg: dict, seed=None) -> dict:
    """Validate ``cfg`` and fill in defaults; ``seed`` overrides the file's seed."""
    validate_config(cfg)
    out = _merge(_DEFAULTS, cfg)
    if "model" in cfg and "spectrum" in cfg["model"]:
        out["model"]["spectrum"] = copy.deepcopy(cfg["model"]["spectrum"])
    if "model" in cfg and "beta" in cfg["model"]:
        out["model"]["beta"] = copy.deepcopy(cfg["model"]["beta"])
    if seed is not None:
        out["seed"] = int(seed)
    validate_config(out)
    return out


def config_sha256(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()

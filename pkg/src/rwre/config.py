"""Experiment configuration: JSON schema validation and per-command defaults.

A config is ``{"seed": int, "env": {...}, "params": {...}, ...}``.  Unknown
keys are rejected at every level that has a fixed schema; ``seed`` is
mandatory.  ``canonical`` gives the byte string that is hashed into run
manifests.
"""
from __future__ import annotations

import copy
import hashlib
import json

import jsonschema

from .errors import ConfigError

COMMANDS = ("check-env", "simulate", "invariant", "covariance", "maxprinciple", "contact-diagnostics",
            "counterexample", "ctime-simulate", "zrp-env", "moment-check", "n-sweep")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer", "minimum": 0}
_pint = {"type": "integer", "minimum": 1}
_vec = {"type": "array", "items": {"type": "integer"}}
_matrix = {"type": "array", "items": {"type": "array", "items": _num}}

ENV_SCHEMA = {
    "type": "object",
    "properties": {
        "generator": {"type": "string"},
        "d": _pint,
        "U": {"type": "array", "items": _vec, "minItems": 1},
        "params": {"type": "object"},
        "seed": {"type": "integer"},
    },
    "required": ["generator", "U"],
    "additionalProperties": False,
}

CT_ENV_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["constant", "iid", "modulated"]},
        "d": _pint,
        "rates": {"type": "array", "items": _num},
        "low": _pos, "high": _pos, "dt": {"type": ["number", "null"]},
        "law": {"enum": ["uniform", "pareto"]}, "shape": _pos,
        "amplitude": _num, "frequency": _num,
    },
    "required": ["kind"],
    "additionalProperties": False,
}

G_SCHEMA = {
    "type": "object",
    "properties": {"kind": {"enum": ["constant", "table", "linear"]}, "rate": _pos,
                   "values": {"type": "array", "items": _pos, "minItems": 1}},
    "required": ["kind"],
    "additionalProperties": False,
}

U_SCHEMA = {
    "type": "object",
    "properties": {"kind": {"const": "affine"}, "base": _pos, "self": _num, "axis": _num, "cap": _int},
    "additionalProperties": False,
}

PARAMS = {
    "check-env": {"radius": _int, "times": _pint, "steps": _pint},
    "simulate": {"horizon": _int, "replicas": _pint, "start": _vec, "record": {"type": "boolean"}},
    "invariant": {"N": _pint, "tol": _pos, "max_iter": _pint},
    "covariance": {"M": _pint, "n": _pint, "tolerance": _pos, "expected": _matrix},
    "maxprinciple": {"instances": _int, "R_max": _pos, "T_max": _pint, "grid": {"type": "boolean"},
                     "grid_random": _int},
    "contact-diagnostics": {"instances": _pint, "R_max": _pos, "T_max": _pint, "samples": _pint},
    "counterexample": {"M": _pint, "n": _pint, "tolerance": _pos},
    "ctime-simulate": {"ct_env": CT_ENV_SCHEMA, "horizon": _pos, "replicas": _pint, "slowed": {"type": "boolean"},
                       "M": _pint, "tolerance": _pos},
    "zrp-env": {"L": _pint, "d": _pint, "g": G_SCHEMA, "alpha": _pos, "u": U_SCHEMA, "horizon": _pos,
                "walkers": _int, "samples": _pint, "band": _pos},
    "moment-check": {"sampler": {"type": "object"}, "M": _pint},
    "n-sweep": {"N": {"type": "array", "items": _pint, "minItems": 1}, "tol": _pos},
}

UNIFORM_ENV = {"generator": "constant", "d": 2, "U": [[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]],
               "params": {"weights": [0.2] * 5, "strict": True}, "seed": 0}
IID_ENV = {"generator": "iid_balanced", "d": 2, "U": [[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]],
           "params": {"floor": 0.02, "concentration": 1.0}, "seed": 0}

DEFAULTS = {
    "check-env": {"env": IID_ENV, "params": {"radius": 5, "times": 5, "steps": 1}},
    "simulate": {"env": IID_ENV, "params": {"horizon": 100, "replicas": 10, "record": True}},
    "invariant": {"env": UNIFORM_ENV, "params": {"N": 4, "tol": 1e-12, "max_iter": 100000}},
    "covariance": {"env": IID_ENV, "params": {"M": 20000, "n": 200, "tolerance": 0.02}},
    "maxprinciple": {"params": {"instances": 1000, "R_max": 10.0, "T_max": 30, "grid": False, "grid_random": 200}},
    "contact-diagnostics": {"params": {"instances": 20, "R_max": 6.0, "T_max": 12, "samples": 50}},
    "counterexample": {"params": {"M": 200000, "n": 2000, "tolerance": 0.01}},
    "ctime-simulate": {"params": {"ct_env": {"kind": "constant", "d": 2, "rates": [1.0, 1.0, 1.0, 1.0]},
                                  "horizon": 10.0, "replicas": 5, "slowed": True, "M": 20000,
                                  "tolerance": 0.05}},
    "zrp-env": {"params": {"L": 32, "d": 2, "g": {"kind": "constant", "rate": 1.0}, "alpha": 0.5,
                           "u": {"kind": "affine", "base": 1.0, "self": 0.5, "axis": 0.25, "cap": 4},
                           "horizon": 1000.0, "walkers": 100, "samples": 100000, "band": 0.02}},
    "moment-check": {"params": {"sampler": {"kind": "constant", "d": 2}, "M": 100000}},
    "n-sweep": {"env": IID_ENV, "params": {"N": [2, 4, 6, 8], "tol": 1e-12}},
}


def schema_for(command):
    if command not in PARAMS:
        raise ConfigError(f"unknown command {command!r}")
    return {
        "type": "object",
        "properties": {
            "command": {"const": command},
            "seed": {"type": "integer", "minimum": 0, "maximum": 2**63 - 1},
            "env": ENV_SCHEMA,
            "params": {"type": "object", "properties": PARAMS[command], "additionalProperties": False},
            "out": {"type": "string"},
            "threads": _pint,
        },
        "required": ["seed"],
        "additionalProperties": False,
    }


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "env":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load(command, raw=None, seed=None):
    """Validate ``raw`` (dict, JSON text or ``None``) and fill defaults.

    ``seed`` overrides the config's seed; one of the two must be present.
    """
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None
    raw = {} if raw is None else dict(raw)
    if seed is not None:
        raw["seed"] = int(seed)
    try:
        jsonschema.validate(raw, schema_for(command))
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {e.message}") from None
    cfg = _merge(DEFAULTS[command], raw)
    cfg["command"] = command
    cfg.pop("out", None)
    cfg.pop("threads", None)
    return cfg


def canonical(cfg):
    """Canonical JSON bytes: sorted keys, no whitespace, ASCII."""
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False).encode()


def config_hash(cfg):
    return hashlib.sha256(canonical(cfg)).hexdigest()

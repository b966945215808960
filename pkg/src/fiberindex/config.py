"""Experiment configuration: YAML documents validated against a versioned JSON schema."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import yaml

from .constants import TOLERANCES

__all__ = ["SCHEMA_VERSION", "SCHEMA", "ConfigError", "ExperimentConfig", "load_config", "default_config"]

SCHEMA_VERSION = 1

_TABLE = {"type": "array", "items": {"type": "object"}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "mode"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "mode": {"enum": ["pair", "oracle", "family", "check"]},
        "seed": {"type": "integer", "minimum": 0},
        "symbol": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "windings": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                "plus": _TABLE,
                "minus": _TABLE,
                "name": {"type": "string"},
            },
        },
        "corpus": {"enum": ["shift", "none"]},
        "connection": {
            "type": "object",
            "additionalProperties": False,
            "required": ["base_rank"],
            "properties": {
                "base_rank": {"type": "integer", "minimum": 0, "maximum": 2},
                "kind": {"enum": ["flat"]},
            },
        },
        "cycle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "point": {"type": "array", "items": {"type": "number"}},
                "torus2": {"type": "boolean"},
            },
        },
        "families": {"type": "array", "items": {"enum": ["A", "B"]}},
        "truncation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "J": {"type": "integer", "minimum": 1, "maximum": 12},
                "N": {"type": "integer", "minimum": 8},
                "N_check": {"type": ["integer", "null"], "minimum": 8},
                "grids": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 1},
            },
        },
        "check": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "suite": {"enum": ["zeta", "fedosov", "xcomplex", "all"]},
                "trials": {"type": "integer", "minimum": 0},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in TOLERANCES},
        },
        "tol_scale": {"type": "number", "exclusiveMinimum": 0},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
    },
}

DEFAULTS = {
    "version": SCHEMA_VERSION,
    "seed": 0,
    "corpus": "none",
    "symbol": {"windings": [1, 0]},
    "connection": {"base_rank": 0, "kind": "flat"},
    "families": ["A", "B"],
    "truncation": {"J": 4, "N": 128, "N_check": 256, "grids": [24, 48]},
    "check": {"suite": "all", "trials": 20},
    "tolerances": {},
    "tol_scale": 1.0,
    "output": {"dir": "fiberindex-out"},
}

_MODE_DEFAULTS = {
    "family": {"connection": {"base_rank": 2}, "truncation": {"N": 64}},
}


class ConfigError(ValueError):
    """Schema or consistency violation; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    mode: str
    data: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def tol_scale(self) -> float:
        return float(self.data["tol_scale"])

    @property
    def truncation(self) -> dict:
        return self.data["truncation"]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)


def _field_path(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path = ".".join([p for p in [path] + extra[:1] if p])
    elif err.validator == "required":
        missing = [r for r in err.validator_value if r not in err.instance]
        path = ".".join([p for p in [path] + missing[:1] if p])
    return path or "<root>"


def validate(doc: dict) -> ExperimentConfig:
    """Validate a raw document, fill defaults and check cross-field consistency."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(_field_path(e), e.message)
    mode = doc["mode"]
    data = _merge(_merge(DEFAULTS, _MODE_DEFAULTS.get(mode, {})), doc)
    if "cycle" not in data:
        # a cycle is one choice, so its default is not merged into a given one
        data["cycle"] = {"torus2": True} if mode == "family" else {"point": []}
    b = data["connection"]["base_rank"]
    cyc = data["cycle"]
    if "point" in cyc and cyc.get("torus2"):
        raise ConfigError("cycle", "give either point or torus2, not both")
    if cyc.get("torus2"):
        if b != 2:
            raise ConfigError("cycle.torus2", f"the T^2 cycle needs base_rank 2, got {b}")
    else:
        pt = cyc.get("point", [])
        if len(pt) != b:
            raise ConfigError("cycle.point", f"needs {b} coordinates for base_rank {b}, got {len(pt)}")
    sym = data["symbol"]
    if ("plus" in sym) != ("minus" in sym):
        raise ConfigError("symbol", "plus and minus tables go together")
    if mode in ("pair", "oracle") and not cyc.get("torus2") and b != 0:
        raise ConfigError("connection.base_rank", "point-cycle runs take fiber-only symbols (base_rank 0)")
    if mode in ("pair", "oracle", "family") and cyc.get("torus2") and not data["families"]:
        raise ConfigError("families", "a T^2 pairing run needs at least one family")
    return ExperimentConfig(mode, data)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from exc
    return validate(doc)


def default_config(mode: str, **over) -> ExperimentConfig:
    return validate(_merge({"version": SCHEMA_VERSION, "mode": mode}, over))

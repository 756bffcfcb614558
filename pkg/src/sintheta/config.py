"""JSON experiment configs: schema, defaults and precedence.

Precedence is command-line flags > config file > ``SINTHETA_OUT`` environment
variable (output directory only) > built-in defaults.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema

SUBCOMMANDS = ("verify", "bounds", "tightness", "scaling", "calibrate", "svt", "pca")
ENV_OUT = "SINTHETA_OUT"
DEFAULT_SEED = 20240101

_number = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_spectrum = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "m", "r"],
    "properties": {
        "n": _pos_int,
        "m": _pos_int,
        "r": _pos_int,
        "top_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "tail_mode": {"enum": ["zero", "geometric", "constant"]},
        "gap_target": {"type": "number", "minimum": 0},
        "tail_level": {"type": "number", "minimum": 0},
        "tail_ratio": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
}
_noise = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["gaussian_iid", "zero"]},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "relative": {"type": "number", "exclusiveMinimum": 0},
    },
}
_row = {
    "type": "object",
    "additionalProperties": False,
    "required": ["spectrum", "noise"],
    "properties": {
        "spectrum": _spectrum,
        "noise": _noise,
        "incoherence": {"enum": ["haar", "incoherent", "spiked_coordinate"]},
        "mu": {"type": "number", "minimum": 1},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["subcommand"],
    "properties": {
        "subcommand": {"enum": list(SUBCOMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "out": {"type": "string"},
        "trials": _pos_int,
        "workers": _pos_int,
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "record_timing": {"type": "boolean"},
        "inputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "A": {"type": "string"},
                "dA": {"type": "string"},
                "At": {"type": "string"},
                "r": _pos_int,
            },
        },
        "grid": {"type": "array", "items": _row},
        "tightness": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n": _pos_int, "m": _pos_int, "r": _pos_int, "sigma": {"type": "number", "minimum": 0}},
        },
        "scaling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "r": _pos_int,
                "mu": {"type": "number", "minimum": 1},
                "sigma_frac": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "n_grid": {"type": "array", "items": _pos_int, "minItems": 1},
                "incoherence": {"enum": ["haar", "incoherent", "spiked_coordinate"]},
                "tail_mode": {"enum": ["zero", "geometric", "constant"]},
            },
        },
        "calibrate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "bound_id": {"type": "string"},
                "n": _pos_int,
                "m": _pos_int,
                "r": _pos_int,
                "target": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "sigma_frac": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "tail_mode": {"enum": ["zero", "geometric", "constant"]},
                "grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            },
        },
    },
}


class ConfigError(ValueError):
    """Config failed schema validation or could not be read."""


@dataclass
class CliConfig:
    subcommand: str
    seed: int = DEFAULT_SEED
    out: str = "results"
    trials: int | None = None
    workers: int = 1
    tol: float = 1e-9
    record_timing: bool = False
    inputs: dict = field(default_factory=dict)
    grid: list | None = None
    tightness: dict = field(default_factory=dict)
    scaling: dict = field(default_factory=dict)
    calibrate: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _field_path(err):
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def validate(data):
    """Raise ConfigError listing every schema violation by field path."""
    validator = jsonschema.Draft7Validator(SCHEMA)
    errs = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errs:
        lines = [f"{_field_path(e)}: {e.message}" for e in errs]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))


def load_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc


def parse_config(path=None, flags=None, env=None):
    """Merge defaults, environment, file and flags into a validated CliConfig.

    ``flags`` holds explicitly given command-line values only (``None`` entries
    are ignored).
    """
    env = os.environ if env is None else env
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    data = {}
    if ENV_OUT in env:
        data["out"] = env[ENV_OUT]
    if path is not None:
        data.update(load_file(path))
    for key in ("subcommand", "seed", "out", "trials", "workers", "tol", "record_timing"):
        if key in flags:
            data[key] = flags[key]
    inputs = dict(data.get("inputs", {}))
    for key in ("A", "dA", "At", "r"):
        if flags.get(key) is not None:
            inputs[key] = flags[key]
    if inputs:
        data["inputs"] = inputs
    validate(data)
    return CliConfig(**data)


def write_echo(cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "config_echo.json"
    path.write_text(cfg.to_json() + "\n")
    return path

"""Run configuration: YAML (or JSON) files validated against a schema.

Defaults live in ``DEFAULTS``; a file overrides them key by key and the
command line overrides the file.  Unknown keys are rejected.
"""

from __future__ import annotations

import copy
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .sweep import PRESETS, Scenario, preset
from .tracing import MODES, ConfigurationError, normalize_mode

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_grid = {
    "oneOf": [
        {"type": "array", "items": _num, "minItems": 1},
        {"type": "object", "additionalProperties": False, "required": ["start", "stop", "step"],
         "properties": {"start": _num, "stop": _num, "step": _pos}},
    ]
}
_mode = {"type": "string", "enum": [*MODES, "exact-numerical", "normal-approximation", "normal"]}
_scenario = {
    "type": "object",
    "additionalProperties": False,
    "required": ["epsilon_inv", "gamma_inv"],
    "properties": {
        "id": {"type": "string"},
        "epsilon_inv": _pos, "gamma_inv": _pos, "R0": _pos, "beta": _pos,
        "sigma_L": _pos, "sigma_C": _pos, "sigma_T": _nonneg, "mode": _mode,
    },
    "oneOf": [{"required": ["R0"], "not": {"required": ["beta"]}},
              {"required": ["beta"], "not": {"required": ["R0"]}}],
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": _scenario,
        "alpha": {"type": "number", "minimum": 0, "maximum": 1},
        "mu_T": _nonneg,
        "mode": _mode,
        "threads": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**32 - 1},
        "step": _pos,
        "sweep": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "presets": {"type": "array", "items": {"enum": list(PRESETS)}},
                "scenarios": {"type": "array", "items": _scenario},
                "delay_grid": _grid, "alpha_grid": _grid,
                "tol": _pos, "grid": {"type": "boolean"}, "alerts": {"type": "boolean"},
            },
        },
        "simulate": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "seed_exposed": {"type": "integer", "minimum": 0},
                "t_end": _pos, "dt": _pos, "thin": {"type": "integer", "minimum": 1},
                "stochastic": {"type": "boolean"},
                "runs": {"type": "integer", "minimum": 1},
                "sample_dt": _pos,
            },
        },
        "validate": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "draws": {"type": "integer", "minimum": 1},
                "stochastic": {"type": "boolean"},
                "fault": {"type": ["string", "null"], "enum": ["k0_sign", None]},
            },
        },
    },
}

DEFAULTS = {
    "scenario": {"id": "baseline", "epsilon_inv": 3.0, "gamma_inv": 2.0, "R0": 2.0,
                 "sigma_L": 0.5, "sigma_C": 0.5, "sigma_T": 0.5},
    "alpha": 0.0,
    "mu_T": 0.0,
    "mode": "normal-approx",
    "threads": 1,
    "seed": 0,
    "step": 0.005,
    "sweep": {"presets": [], "scenarios": [], "delay_grid": {"start": 0.0, "stop": 6.0, "step": 0.05},
              "alpha_grid": {"start": 0.0, "stop": 1.0, "step": 0.005}, "tol": 1e-4,
              "grid": True, "alerts": True},
    "simulate": {"N": 100000, "seed_exposed": 100, "t_end": 200.0, "dt": 0.01, "thin": 10,
                 "stochastic": False, "runs": 1, "sample_dt": 1.0},
    "validate": {"draws": 10000, "stochastic": True, "fault": None},
}


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config {where}: {exc.message}") from None


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "scenario":
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load(path: str | Path | None) -> dict:
    """Defaults merged with the file at ``path`` (YAML or JSON), validated."""
    user = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            user = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config {path} is not valid YAML/JSON: {exc}".replace("\n", " ")) from None
        if not isinstance(user, dict):
            raise ConfigurationError(f"config {path} must be a mapping")
        validate(user)
    cfg = merge(DEFAULTS, user)
    validate(cfg)
    return cfg


def grid_values(spec) -> np.ndarray:
    """Explicit list, or an inclusive ``start:stop:step`` range."""
    if isinstance(spec, dict):
        start, stop, step = spec["start"], spec["stop"], spec["step"]
        if stop < start:
            raise ConfigurationError(f"grid stop {stop} is below start {start}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(n), 12)
    return np.asarray(spec, dtype=float)


def scenario_from(d: dict, mode: str, step: float) -> Scenario:
    d = dict(d)
    d.setdefault("id", "scenario")
    d["mode"] = normalize_mode(d.get("mode", mode))
    return Scenario(step=step, **d)


def sweep_scenarios(cfg: dict) -> dict[str, list[Scenario]]:
    """Scenario groups to sweep: one per preset plus one for explicit scenarios."""
    mode, step = normalize_mode(cfg["mode"]), cfg["step"]
    sigma_T = cfg["scenario"].get("sigma_T", 0.5)
    groups = {name: [replace_step(s, step) for s in preset(name, mode, sigma_T)]
              for name in cfg["sweep"]["presets"]}
    custom = [scenario_from(d, mode, step) for d in cfg["sweep"]["scenarios"]]
    if custom:
        groups["custom"] = custom
    if not groups:
        groups["custom"] = [scenario_from(cfg["scenario"], mode, step)]
    return groups


def replace_step(s: Scenario, step: float) -> Scenario:
    return replace(s, step=step, beta=None)


def flatten(cfg: dict, prefix: str = "") -> dict:
    """``a.b=value`` pairs in sorted order, for provenance headers."""
    out = {}
    for k in sorted(cfg):
        v = cfg[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out

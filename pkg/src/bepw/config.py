"""JSON run configuration with strict key checking."""
from __future__ import annotations

import json
from pathlib import Path

from .core import BepwError


class ConfigError(BepwError):
    """Malformed or unknown configuration content."""


_SCHEMA = {
    "law": {"kappa", "gamma"},
    "endstates": {"rho_minus", "rho_plus"},
    "grid": {"dims", "points", "extent", "lengths"},
    "perturbation": {"shape", "amplitude", "width", "center", "species_sign"},
    "shift": {"type", "amplitude", "width"},
    "run": {"cfl", "t_end", "snapshot_stride", "max_steps"},
    "fit": {"window"},
    "green": {"mu", "eps", "tolerance"},
}


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError(f"configuration root must be an object, got {type(cfg).__name__}")
    unknown = set(cfg) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown configuration sections: {sorted(unknown)}")
    for section, keys in cfg.items():
        if not isinstance(keys, dict):
            raise ConfigError(f"section {section!r} must be an object")
        bad = set(keys) - _SCHEMA[section]
        if bad:
            raise ConfigError(f"unknown keys in section {section!r}: {sorted(bad)}")
    return cfg


def load_config(path) -> dict:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(cfg)

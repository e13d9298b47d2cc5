from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict

import yaml

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[1] / "cfg" / "configs.yaml"
ROOT_KEY = "deletion_channel"
OUTPUT_FORMATS = ("table", "csv", "json")

logger = logging.getLogger(__name__)


class ConfigError(RuntimeError):
    pass


@dataclass(frozen=True)
class Settings:
    verbosity: str = "WARNING"
    m1: float = 1.0 / math.sqrt(2.0)
    mc_samples: int = 100_000
    seed: int = 7
    format: str = "table"
    workers: int = 1
    chunk_size: int = 16_384
    sweep_start: float = 0.01
    sweep_stop: float = 0.99
    sweep_step: float = 0.01


def load_raw_config(config_path: Path | None = None) -> Dict[str, Any]:
    path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
    if not path.exists():
        if config_path is None or path == DEFAULT_CONFIG_PATH:
            logger.debug("No config at %s, using built-in defaults", path)
            return {ROOT_KEY: {}}
        raise ConfigError(f"Config file not found: {path}")

    with path.open("r", encoding="utf-8") as handle:
        try:
            data = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"Invalid YAML in {path}: {exc}") from exc
    if not isinstance(data, dict) or ROOT_KEY not in data:
        raise ConfigError(f"Missing '{ROOT_KEY}' root key in configuration")
    return data


def get_config_section(config: Dict[str, Any], *keys: str) -> Dict[str, Any]:
    node = config
    for key in keys:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"Missing config section: {'/'.join(keys)}")
        node = node[key]
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(f"Config section is not a dict: {'/'.join(keys)}")
    return node


def _optional_section(config: Dict[str, Any], *keys: str) -> Dict[str, Any]:
    try:
        return get_config_section(config, *keys)
    except ConfigError:
        return {}


def _coerce(name: str, value: Any, kind: type) -> Any:
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{name}' must be an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"'{name}' must be a finite number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"'{name}' must be a string, got {value!r}")
    return value


def settings_from_config(config: Dict[str, Any]) -> Settings:
    root = get_config_section(config, ROOT_KEY)
    flat: Dict[str, Any] = {}
    if "verbosity" in root:
        flat["verbosity"] = root["verbosity"]
    flat.update(_optional_section(root, "defaults"))
    for key, value in _optional_section(root, "sweep").items():
        flat[f"sweep_{key}"] = value

    known = {f.name: f.type for f in fields(Settings)}
    unknown = sorted(set(flat) - set(known))
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")

    defaults = Settings()
    values = {}
    for name in known:
        if name not in flat:
            continue
        kind = type(getattr(defaults, name))
        values[name] = _coerce(name, flat[name], kind)
    settings = Settings(**values)

    if settings.format not in OUTPUT_FORMATS:
        raise ConfigError(f"'format' must be one of {', '.join(OUTPUT_FORMATS)}")
    if logging.getLevelName(settings.verbosity.upper()) not in range(0, 60):
        raise ConfigError(f"Unknown verbosity level '{settings.verbosity}'")
    if settings.workers < 1 or settings.chunk_size < 1:
        raise ConfigError("'workers' and 'chunk_size' must be positive")
    if settings.mc_samples < 0 or settings.seed < 0:
        raise ConfigError("'mc_samples' and 'seed' must be non-negative")
    if not 0.0 <= settings.m1 <= 1.0:
        raise ConfigError("'m1' must lie in [0, 1]")
    return settings


def load_settings(config_path: Path | None = None) -> Settings:
    return settings_from_config(load_raw_config(config_path))

"""
Configuration resolution for the command-line tool.

Precedence: command-line flags > JSON config file > built-in defaults.
A config file is a flat JSON object whose keys are RunConfig field names;
a run manifest is accepted too, in which case its "config" block is used.
"""
import dataclasses
import json
import logging
import os
import typing
from typing import Any, Dict, Mapping, Optional

from src.models.model_params import ModelError
from src.models.run_config import RunConfig

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "LZSPEC_OUTPUT_DIR"

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


class ConfigError(Exception):
    """Raised for invalid flags, config files or parameter values."""
    pass


def _field_type(name: str) -> type:
    hint = typing.get_type_hints(RunConfig)[name]
    args = [a for a in typing.get_args(hint) if a is not type(None)]
    return args[0] if args else hint


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    kind = _field_type(name)
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError(f"expected true/false, got {value!r}")
            return value
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"expected an integer, got {value!r}")
            return int(value)
        return kind(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for {name}: {e}")


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a config file.

    Args:
        path: JSON config file or run manifest

    Returns:
        Key/value pairs

    Raises:
        ConfigError: If the file cannot be read or has unknown keys
    """
    try:
        with open(path, "r") as handle:
            document = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")

    if not isinstance(document, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    if isinstance(document.get("config"), dict):
        logger.info(f"Using the config block of manifest {path}")
        document = document["config"]

    unknown = sorted(set(document) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    return dict(document)


def resolve_config(
    flags: Mapping[str, Any],
    config_path: Optional[str] = None
) -> RunConfig:
    """
    Merge defaults, config file and flags into a validated RunConfig.

    Args:
        flags: Flag values; None means "not given"
        config_path: Optional config file

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: On unknown keys or invalid values
    """
    values: Dict[str, Any] = {}
    if config_path:
        values.update(load_config_file(config_path))

    for name, value in flags.items():
        if name not in _FIELDS:
            raise ConfigError(f"Unknown option: {name}")
        if value is not None:
            values[name] = value

    coerced = {name: _coerce(name, value) for name, value in values.items()}
    try:
        config = RunConfig(**coerced)
        config.validate()
    except (ModelError, ValueError, TypeError) as e:
        raise ConfigError(str(e))
    return config


def default_output_path(subcommand: str, extension: str) -> str:
    """Output path inside $LZSPEC_OUTPUT_DIR (or the working directory)."""
    directory = os.environ.get(OUTPUT_DIR_ENV, ".")
    return os.path.join(directory, f"{subcommand}.{extension}")

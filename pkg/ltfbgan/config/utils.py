from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any

import jinja2
import structlog
import yaml

from ltfbgan.config.JinjaEnvVar import JinjaEnvVar

logger = structlog.getLogger(__name__)

ENV_PREFIX = "LTFBGAN_"

LOG_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}


def parse_bool(value: str | bool) -> bool:
    if isinstance(value, bool):
        return value
    return value.strip().lower() in ("true", "1", "yes", "on")


def parse_optional_int(value: str | int | None) -> int | None:
    """'none', 'off', 'inf' and the empty string all mean "not set"."""
    if value is None or isinstance(value, int):
        return value
    if value.strip().lower() in ("", "none", "off", "inf", "never"):
        return None
    return int(value)


def parse_optional_float(value: str | float | None) -> float | None:
    if value is None or isinstance(value, float | int):
        return value
    if value.strip().lower() in ("", "none"):
        return None
    return float(value)


def parse_int_list(value: str | list | tuple) -> tuple[int, ...]:
    if isinstance(value, list | tuple):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in str(value).replace(" ", "").split(",") if v)


def parse_str_list(value: str | list | tuple) -> tuple[str, ...]:
    if isinstance(value, list | tuple):
        return tuple(str(v) for v in value)
    return tuple(v for v in str(value).replace(" ", "").split(",") if v)


def parse_log_level(value: str | int) -> int:
    if isinstance(value, int):
        return value
    level = LOG_LEVELS.get(value.upper())
    if level is None:
        raise ValueError(f"Invalid log level: {value}. Valid values are: {', '.join(LOG_LEVELS)}")
    return level


# Converters for every config key that can be set from the environment.
ENV_CONVERTERS = {
    "config_folder": str,
    "config_file_name": str,
    "out_dir": Path,
    "data_dir": Path,
    "seed": int,
    "threads": int,
    "log_level": parse_log_level,
    "n_samples": int,
    "samples_per_file": int,
    "sampling_seed": int,
    "noise_level": float,
    "jitter": float,
    "image_size": int,
    "image_views": int,
    "image_channels": int,
    "latent_dim": int,
    "mode": str,
    "trainers": parse_optional_int,
    "shards": int,
    "batch_size": int,
    "lr": float,
    "lr_jitter": float,
    "interval": parse_optional_int,
    "steps": int,
    "data_store": str,
    "memory_budget_mb": parse_optional_float,
    "prefetch_depth": int,
    "pretrain_steps": int,
    "validation_fraction": float,
    "tournament_fraction": float,
    "eval_interval": parse_optional_int,
    "reset_discriminator": parse_bool,
    "verify_replicas": parse_bool,
    "max_skipped_steps": int,
    "dtype": str,
    "adversarial_weight": float,
    "cycle_weight": float,
    "record_steps": parse_bool,
    "save_model": parse_bool,
    "generate_if_missing": parse_bool,
    "epochs": int,
    "modes": parse_str_list,
    "seeds": parse_int_list,
    "trainer_counts": parse_int_list,
}


def get_ltfbgan_config_from_env() -> dict:
    """
    Read LTFBGAN_* environment variables.

    Booleans accept true/false, 1/0, yes/no, on/off (case-insensitive); log
    levels accept DEBUG/INFO/WARNING/ERROR/CRITICAL; lists are comma separated.
    """
    env_config = {}
    for param_name, convert in ENV_CONVERTERS.items():
        env_var = ENV_PREFIX + param_name.upper()
        value = os.getenv(env_var)
        if value is None or value == "":
            continue
        try:
            env_config[param_name] = convert(value)
        except ValueError as e:
            raise ValueError(f"Invalid value in {env_var} environment variable: {e}") from e
    return env_config


def validate_file_path(file_path: Path | str | None) -> Path | None:
    if file_path is None:
        return None
    file_path = Path(file_path).expanduser()
    if not file_path.is_file():
        raise ValueError(f"invalid file path: {str(file_path)}")
    return file_path


def validate_directory(path: Path | str | None) -> Path | None:
    if path is None:
        return None
    path = Path(path).expanduser()
    if not path.is_dir():
        raise ValueError(f"Path is not valid directory: {str(path)}")
    return path


def load_yaml_config(config_file_path: Path | None) -> dict[str, Any]:
    """
    Load the YAML config file after rendering it through jinja, which gives
    it access to environment variables. A missing file is not an error.
    """
    if config_file_path is None or not config_file_path.is_file():
        if config_file_path is not None:
            logger.debug("Config file not found", config_file_path=str(config_file_path))
        return {}

    with config_file_path.open() as config_file:
        config_template = jinja2.Template(
            config_file.read(),
            undefined=jinja2.StrictUndefined,
            extensions=[JinjaEnvVar],
        )
        config = yaml.load(config_template.render(), Loader=yaml.SafeLoader)

    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise ValueError(f"Config file {config_file_path} must contain a mapping, got {type(config).__name__}")
    logger.info("Using config file", config_file_path=str(config_file_path))
    return config

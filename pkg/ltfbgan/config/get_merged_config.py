import dataclasses
import sys
from pathlib import Path

import structlog

from ltfbgan.config.BenchDatastoreConfig import BenchDatastoreConfig
from ltfbgan.config.CompareConfig import CompareConfig
from ltfbgan.config.GenerateDataConfig import GenerateDataConfig
from ltfbgan.config.parse_cli_args import DEFAULT_CONFIG_FILE_NAME, parse_cli_args
from ltfbgan.config.TrainConfig import TrainConfig
from ltfbgan.config.utils import get_ltfbgan_config_from_env, load_yaml_config, parse_log_level, validate_directory

logger = structlog.getLogger(__name__)

CONFIG_CLASSES = {
    "generate-data": GenerateDataConfig,
    "train": TrainConfig,
    "bench-datastore": BenchDatastoreConfig,
    "compare": CompareConfig,
}


def _normalize_keys(raw: dict) -> dict:
    # convert kebabs to snakes
    kwargs = {k.replace("-", "_"): v for (k, v) in raw.items()}
    if "out" in kwargs:
        kwargs["out_dir"] = kwargs.pop("out")
    if isinstance(kwargs.get("log_level"), str):
        kwargs["log_level"] = parse_log_level(kwargs["log_level"])
    return {k: v for k, v in kwargs.items() if v is not None}


def get_yaml_config_kwargs(config_file_path: Path | None) -> dict:
    return _normalize_keys(load_yaml_config(config_file_path))


def get_merged_config(
    logger: structlog.BoundLogger,
    args: list[str] | None = None,
) -> GenerateDataConfig | TrainConfig | BenchDatastoreConfig | CompareConfig:
    """Resolve the configuration with precedence CLI > ENV > YAML > defaults."""
    cli_kwargs = parse_cli_args(sys.argv[1:] if args is None else args)
    logger.debug("cli_kwargs", **cli_kwargs)

    # Get environment variable configuration (P2)
    env_kwargs = get_ltfbgan_config_from_env()
    logger.debug("env_kwargs", **env_kwargs)

    config_folder = validate_directory(
        path=cli_kwargs.pop("config_folder", None) or env_kwargs.pop("config_folder", None) or "."
    )
    env_kwargs.pop("config_folder", None)
    config_file_name = (
        cli_kwargs.pop("config_file_name", None) or env_kwargs.pop("config_file_name", None) or DEFAULT_CONFIG_FILE_NAME
    )
    env_kwargs.pop("config_file_name", None)
    config_file_path = Path(config_folder) / config_file_name

    # Get YAML configuration (P3)
    yaml_kwargs = get_yaml_config_kwargs(config_file_path=config_file_path)
    logger.debug("yaml_kwargs", **yaml_kwargs)

    subcommand = cli_kwargs.pop("subcommand")
    config_class = CONFIG_CLASSES.get(subcommand)
    if config_class is None:
        raise Exception(f"unhandled subcommand: {subcommand}")
    # Environment variables are shared by all subcommands; keep the ones this one understands.
    field_names = {field.name for field in dataclasses.fields(config_class)}
    env_kwargs = {k: v for k, v in env_kwargs.items() if k in field_names}

    # Sections keyed by subcommand override the shared top level of the file.
    section = yaml_kwargs.pop(subcommand.replace("-", "_"), None) or {}
    for other in CONFIG_CLASSES:
        yaml_kwargs.pop(other.replace("-", "_"), None)
    if not isinstance(section, dict):
        raise ValueError(f"Config file section {subcommand!r} must be a mapping")
    yaml_kwargs.update(_normalize_keys(section))

    kwargs = {
        "config_file_path": config_file_path if config_file_path.is_file() else None,
        **yaml_kwargs,  # P3: YAML
        **env_kwargs,  # P2: ENV
        **cli_kwargs,  # P1: CLI (highest)
    }
    logger.debug("final kwargs", **kwargs)

    return config_class.factory(**kwargs)

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from abc import ABC
from enum import Enum
from pathlib import Path
from typing import ClassVar, Literal, TypeVar

import structlog
import yaml

from ltfbgan.ConfigValidationError import ConfigValidationError

logger = structlog.getLogger(__name__)
T = TypeVar("T", bound="BaseConfig")

Subcommand = Literal["generate-data", "train", "bench-datastore", "compare"]


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple | list):
        return [_plain(v) for v in value]
    return value


@dataclasses.dataclass(frozen=True)
class BaseConfig(ABC):
    subcommand: Subcommand
    config_file_path: Path | None = None
    out_dir: Path = Path("runs/latest")
    seed: int = 0
    threads: int = 1
    log_level: int = logging.INFO

    # Locations and execution resources; they do not change what a run computes.
    NON_RUN_FIELDS: ClassVar[frozenset[str]] = frozenset(
        {"config_file_path", "out_dir", "data_dir", "threads", "log_level"}
    )
    PATH_FIELDS: ClassVar[frozenset[str]] = frozenset({"out_dir", "data_dir"})

    @classmethod
    def factory(
        cls: type[T],
        subcommand: Subcommand,
        config_file_path: Path | None = None,
        log_level: int = logging.INFO,
        **kwargs,
    ) -> T:
        field_names = {field.name for field in dataclasses.fields(cls)}

        unknown_keys = set(kwargs) - field_names
        if unknown_keys:
            unknown_keys_str = ", ".join(sorted(unknown_keys))
            logger.warning(f"Unknown configuration keys found and will be ignored: {unknown_keys_str}")
            kwargs = {k: v for k, v in kwargs.items() if k in field_names}

        for name, value in list(kwargs.items()):
            if name in cls.PATH_FIELDS and value is not None:
                kwargs[name] = Path(value).expanduser()
            elif isinstance(value, list):
                kwargs[name] = tuple(value)

        return cls(
            subcommand=subcommand,
            config_file_path=config_file_path,
            log_level=log_level,
            **kwargs,
        )

    def __post_init__(self):
        problems = self.validate()
        if problems:
            raise ConfigValidationError(type(self).__name__, problems)

    def validate(self) -> dict[str, str]:
        problems = {}
        if not isinstance(self.seed, int) or self.seed < 0:
            problems["seed"] = f"must be a non-negative integer, got {self.seed!r}"
        if not isinstance(self.threads, int) or self.threads < 1:
            problems["threads"] = f"must be >= 1, got {self.threads!r}"
        return problems

    def as_dict(self) -> dict:
        return {field.name: _plain(getattr(self, field.name)) for field in dataclasses.fields(self)}

    def run_fields(self) -> dict:
        return {k: v for k, v in self.as_dict().items() if k not in self.NON_RUN_FIELDS}

    def config_hash(self) -> str:
        canonical = json.dumps(self.run_fields(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha224(canonical.encode("utf-8")).hexdigest()

    def as_yaml_dict(self) -> dict:
        """The resolved configuration as it would be written in a config file."""
        out = {}
        for key, value in self.as_dict().items():
            if key == "config_file_path":
                continue
            if key == "log_level":
                value = logging.getLevelName(value)
            out[key.replace("_", "-")] = value
        return out

    def log_details(self):
        logger.info("Using configuration", subcommand=self.subcommand, config_hash=self.config_hash())
        if self.config_file_path:
            logger.info("Using config file", config_file_path=str(self.config_file_path))
        logger.info("Using output directory", out_dir=str(self.out_dir))
        logger.debug("Resolved configuration", **self.as_dict())

    def save(self, out_dir: Path, file_name: str = "config.yml") -> Path:
        """Write the resolved configuration and its hash next to a run's outputs."""
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / file_name
        document = {**self.as_yaml_dict(), "config-hash": self.config_hash()}
        path.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
        return path

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Literal

import structlog

from ltfbgan.config.BaseConfig import BaseConfig
from ltfbgan.datastore.DataStore import StoreMode

logger = structlog.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class BenchDatastoreConfig(BaseConfig):
    subcommand: Literal["bench-datastore"] = "bench-datastore"
    out_dir: Path = Path("runs/bench-datastore")
    data_dir: Path = Path("data")
    modes: tuple[str, ...] = tuple(m.value for m in StoreMode)
    epochs: int = 3
    shards: int = 4
    batch_size: int = 128
    lr: float = 0.001
    memory_budget_mb: float | None = None
    prefetch_depth: int = 1
    # Run the training computation on every minibatch (False measures ingestion only).
    train_model: bool = True

    @classmethod
    def factory(cls, **kwargs):
        kwargs.pop("subcommand", None)
        return super().factory(subcommand="bench-datastore", **kwargs)

    def validate(self) -> dict[str, str]:
        problems = super().validate()
        valid = {m.value for m in StoreMode}
        if not self.modes or any(m not in valid for m in self.modes):
            problems["modes"] = f"must be a non-empty subset of none, dynamic, preload, got {self.modes}"
        for name in ("epochs", "shards", "batch_size"):
            if getattr(self, name) < 1:
                problems[name] = f"must be >= 1, got {getattr(self, name)}"
        if self.prefetch_depth < 0:
            problems["prefetch_depth"] = f"must be >= 0, got {self.prefetch_depth}"
        if self.memory_budget_mb is not None and self.memory_budget_mb < 0:
            problems["memory_budget_mb"] = f"must be >= 0, got {self.memory_budget_mb}"
        if not self.lr > 0:
            problems["lr"] = f"must be > 0, got {self.lr}"
        return problems

    @property
    def memory_budget_bytes(self) -> int | None:
        if self.memory_budget_mb is None:
            return None
        return int(self.memory_budget_mb * 1024 * 1024)

    def log_details(self):
        super().log_details()
        logger.info("Benchmarking data store", modes=list(self.modes), epochs=self.epochs, data_dir=str(self.data_dir))

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import ClassVar, Literal

import structlog

from ltfbgan.config.BaseConfig import BaseConfig
from ltfbgan.config.utils import parse_optional_int
from ltfbgan.datastore.DataStore import StoreMode
from ltfbgan.nn.adam import AdamHyper
from ltfbgan.surrogate.CycleGanModel import LossWeights

logger = structlog.getLogger(__name__)

TRAIN_MODES = ("single", "ltfb", "k-independent")
DTYPES = ("float32", "float64")


@dataclasses.dataclass(frozen=True)
class TrainConfig(BaseConfig):
    subcommand: Literal["train", "compare"] = "train"
    data_dir: Path = Path("data")
    mode: str = "ltfb"
    # None: 1 for mode single, 2 otherwise.
    trainers: int | None = None
    shards: int = 4
    batch_size: int = 128
    lr: float = 0.001
    lr_jitter: float = 0.0
    # Steps between tournament rounds; None disables rounds.
    interval: int | None = 10
    steps: int = 200
    data_store: str = StoreMode.DYNAMIC.value
    memory_budget_mb: float | None = None
    prefetch_depth: int = 1
    pretrain_steps: int = 2000
    validation_fraction: float = 0.05
    tournament_fraction: float = 0.05
    # Steps between validation evaluations; None evaluates at rounds and at the end.
    eval_interval: int | None = None
    reset_discriminator: bool = False
    verify_replicas: bool = False
    max_skipped_steps: int = 10
    dtype: str = "float32"
    adversarial_weight: float = 0.01
    cycle_weight: float = 1.0
    record_steps: bool = True
    save_model: bool = True
    generate_if_missing: bool = True
    n_samples: int = 4000
    samples_per_file: int = 1000

    SUBCOMMAND: ClassVar[str] = "train"

    @classmethod
    def factory(cls, **kwargs):
        kwargs.pop("subcommand", None)
        for name in ("interval", "eval_interval", "trainers"):
            if isinstance(kwargs.get(name), str):
                kwargs[name] = parse_optional_int(kwargs[name])
        return super().factory(subcommand=cls.SUBCOMMAND, **kwargs)

    def validate(self) -> dict[str, str]:
        problems = super().validate()
        if self.mode not in TRAIN_MODES:
            problems["mode"] = f"must be one of {', '.join(TRAIN_MODES)}, got {self.mode!r}"
        if self.data_store not in {m.value for m in StoreMode}:
            problems["data_store"] = f"must be one of none, dynamic, preload, got {self.data_store!r}"
        if self.trainers is not None and self.trainers < 1:
            problems["trainers"] = f"must be >= 1, got {self.trainers}"
        elif self.mode == "single" and self.trainers not in (None, 1):
            problems["trainers"] = f"mode single trains exactly one trainer, got {self.trainers}"
        for name in ("shards", "batch_size", "n_samples", "samples_per_file"):
            if getattr(self, name) < 1:
                problems[name] = f"must be >= 1, got {getattr(self, name)}"
        for name in ("steps", "pretrain_steps", "prefetch_depth", "max_skipped_steps"):
            if getattr(self, name) < 0:
                problems[name] = f"must be >= 0, got {getattr(self, name)}"
        for name in ("interval", "eval_interval"):
            if getattr(self, name) is not None and getattr(self, name) < 1:
                problems[name] = f"must be >= 1 or unset, got {getattr(self, name)}"
        if not self.lr > 0:
            problems["lr"] = f"must be > 0, got {self.lr}"
        if not 0 <= self.lr_jitter < 1:
            problems["lr_jitter"] = f"must be in [0, 1), got {self.lr_jitter}"
        if not 0 <= self.validation_fraction < 1:
            problems["validation_fraction"] = f"must be in [0, 1), got {self.validation_fraction}"
        if not 0 < self.tournament_fraction < 1:
            problems["tournament_fraction"] = f"must be in (0, 1), got {self.tournament_fraction}"
        if self.memory_budget_mb is not None and self.memory_budget_mb < 0:
            problems["memory_budget_mb"] = f"must be >= 0, got {self.memory_budget_mb}"
        if self.dtype not in DTYPES:
            problems["dtype"] = f"must be one of {', '.join(DTYPES)}, got {self.dtype!r}"
        if self.adversarial_weight < 0 or self.cycle_weight < 0:
            problems["loss weights"] = "adversarial_weight and cycle_weight must be >= 0"
        return problems

    @property
    def k_trainers(self) -> int:
        if self.trainers is not None:
            return self.trainers
        return 1 if self.mode == "single" else 2

    @property
    def store_mode(self) -> StoreMode:
        return StoreMode(self.data_store)

    @property
    def memory_budget_bytes(self) -> int | None:
        if self.memory_budget_mb is None:
            return None
        return int(self.memory_budget_mb * 1024 * 1024)

    @property
    def hyper(self) -> AdamHyper:
        return AdamHyper(lr=self.lr)

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(adversarial=self.adversarial_weight, cycle=self.cycle_weight)

    @property
    def tournament_enabled(self) -> bool:
        return self.mode == "ltfb" and self.interval is not None

    def log_details(self):
        super().log_details()
        logger.info(
            "Training setup",
            mode=self.mode,
            trainers=self.k_trainers,
            shards=self.shards,
            batch_size=self.batch_size,
            steps=self.steps,
            interval=self.interval,
            data_store=self.data_store,
            data_dir=str(self.data_dir),
        )

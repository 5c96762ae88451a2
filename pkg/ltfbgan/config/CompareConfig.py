from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import ClassVar, Literal

import structlog

from ltfbgan.config.TrainConfig import TrainConfig

logger = structlog.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class CompareConfig(TrainConfig):
    """Paired LTFB / K-independent runs over several seeds and trainer counts."""

    subcommand: Literal["compare"] = "compare"
    out_dir: Path = Path("runs/compare")
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    trainer_counts: tuple[int, ...] = (2, 4)
    record_steps: bool = False
    save_model: bool = False

    SUBCOMMAND: ClassVar[str] = "compare"

    def validate(self) -> dict[str, str]:
        problems = super().validate()
        if not self.seeds or any(s < 0 for s in self.seeds):
            problems["seeds"] = f"must be a non-empty list of non-negative integers, got {self.seeds}"
        if not self.trainer_counts or any(k < 1 for k in self.trainer_counts):
            problems["trainer_counts"] = f"must be a non-empty list of integers >= 1, got {self.trainer_counts}"
        if self.interval is None:
            problems["interval"] = "a comparison needs tournament rounds"
        return problems

    def log_details(self):
        super().log_details()
        logger.info("Comparing LTFB with K-independent", seeds=list(self.seeds), trainer_counts=list(self.trainer_counts))

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Literal

import structlog

from ltfbgan.config.BaseConfig import BaseConfig
from ltfbgan.surrogate.ModalityDims import ModalityDims
from ltfbgan.synthdata.generator import GeneratorSpec

logger = structlog.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class GenerateDataConfig(BaseConfig):
    subcommand: Literal["generate-data"] = "generate-data"
    out_dir: Path = Path("data")
    n_samples: int = 4000
    samples_per_file: int = 1000
    sampling_seed: int = 0
    noise_level: float = 0.0
    jitter: float = 0.5
    image_size: int = 16
    image_views: int = 3
    image_channels: int = 4
    latent_dim: int = 20

    @classmethod
    def factory(cls, **kwargs):
        kwargs.pop("subcommand", None)
        return super().factory(subcommand="generate-data", **kwargs)

    def validate(self) -> dict[str, str]:
        problems = super().validate()
        for name in ("n_samples", "samples_per_file", "image_size", "image_views", "image_channels", "latent_dim"):
            if getattr(self, name) < 1:
                problems[name] = f"must be >= 1, got {getattr(self, name)}"
        if self.sampling_seed < 0:
            problems["sampling_seed"] = f"must be >= 0, got {self.sampling_seed}"
        if self.noise_level < 0:
            problems["noise_level"] = f"must be >= 0, got {self.noise_level}"
        if not 0 <= self.jitter <= 1:
            problems["jitter"] = f"must be in [0, 1], got {self.jitter}"
        return problems

    @property
    def dims(self) -> ModalityDims:
        return ModalityDims(
            latent_dim=self.latent_dim,
            image_views=self.image_views,
            image_channels=self.image_channels,
            image_h=self.image_size,
            image_w=self.image_size,
        )

    @property
    def generator_spec(self) -> GeneratorSpec:
        return GeneratorSpec(dims=self.dims, noise_level=self.noise_level, seed=self.seed, jitter=self.jitter)

    def log_details(self):
        super().log_details()
        logger.info(
            "Generating dataset",
            n_samples=self.n_samples,
            samples_per_file=self.samples_per_file,
            dims=self.dims.to_dict(),
        )

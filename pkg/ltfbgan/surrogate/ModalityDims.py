from __future__ import annotations

import dataclasses

from ltfbgan.ContractError import ContractError


@dataclasses.dataclass(frozen=True)
class ModalityDims:
    input_dim: int = 5
    latent_dim: int = 20
    scalar_dim: int = 15
    image_views: int = 3
    image_channels: int = 4
    image_h: int = 16
    image_w: int = 16

    def __post_init__(self):
        bad = [f.name for f in dataclasses.fields(self) if int(getattr(self, f.name)) < 1]
        if bad:
            raise ContractError("ModalityDims", f"dimensions must be >= 1: {', '.join(bad)}")

    @property
    def image_shape(self) -> tuple[int, int, int, int]:
        return (self.image_views, self.image_channels, self.image_h, self.image_w)

    @property
    def image_size(self) -> int:
        return self.image_views * self.image_channels * self.image_h * self.image_w

    @property
    def output_dim(self) -> int:
        return self.scalar_dim + self.image_size

    @property
    def record_floats(self) -> int:
        """Number of 32-bit reals in one serialized sample."""
        return self.input_dim + self.output_dim

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, f.name) for f in dataclasses.fields(self))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def full_resolution(cls) -> ModalityDims:
        return cls(image_h=64, image_w=64)

"""
Analytic stand-in for a semi-analytic implosion simulator.

A 5-vector of inputs in [0, 1] maps to 15 scalars (a seeded linear
combination of nonlinear basis functions) and a views x channels stack of
anisotropic Gaussian images. params[0] is the drive: it sets amplitude and
width nonlinearly. params[1..4] are the shape: they set eccentricity and
orientation, and the midpoint 0.5 gives a circular blob.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from collections.abc import Iterator

import numpy as np
import structlog

from ltfbgan.ContractError import ContractError, DimensionError
from ltfbgan.surrogate.ModalityDims import ModalityDims

logger = structlog.getLogger(__name__)

N_BASIS = 34


@dataclasses.dataclass(frozen=True)
class SampleRecord:
    input_params: np.ndarray
    scalars: np.ndarray
    images: np.ndarray

    def output_vector(self) -> np.ndarray:
        return np.concatenate([self.scalars, self.images.ravel()])

    def to_row(self) -> np.ndarray:
        return np.concatenate([self.input_params, self.scalars, self.images.ravel()]).astype(np.float32)

    @classmethod
    def from_row(cls, dims: ModalityDims, row: np.ndarray) -> SampleRecord:
        if row.size != dims.record_floats:
            raise DimensionError("SampleRecord.from_row", "record", dims.record_floats, row.size)
        a = dims.input_dim
        b = a + dims.scalar_dim
        return cls(
            input_params=row[:a].copy(),
            scalars=row[a:b].copy(),
            images=row[b:].reshape(dims.image_shape).copy(),
        )

    def equals(self, other: SampleRecord) -> bool:
        return bool(
            np.array_equal(self.input_params, other.input_params)
            and np.array_equal(self.scalars, other.scalars)
            and np.array_equal(self.images, other.images)
        )


@dataclasses.dataclass(frozen=True)
class GeneratorSpec:
    dims: ModalityDims = dataclasses.field(default_factory=ModalityDims)
    noise_level: float = 0.0
    seed: int = 0
    jitter: float = 0.5

    def __post_init__(self):
        if self.dims.input_dim != 5:
            raise ContractError("GeneratorSpec", f"the analytic generator needs input_dim == 5, got {self.dims.input_dim}")
        if self.dims.image_h != self.dims.image_w:
            raise ContractError("GeneratorSpec", "images must be square")
        if self.noise_level < 0 or not 0 <= self.jitter <= 1:
            raise ContractError("GeneratorSpec", "noise_level must be >= 0 and jitter in [0, 1]")

    @functools.cached_property
    def scalar_coefficients(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, 1.0, size=(self.dims.scalar_dim, N_BASIS)) / math.sqrt(N_BASIS)

    @functools.cached_property
    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        size = self.dims.image_w
        axis = (np.arange(size) - (size - 1) / 2) / (size / 2)
        rows, cols = np.meshgrid(axis, axis, indexing="ij")
        return cols, rows


def _basis(p: np.ndarray) -> np.ndarray:
    pairs = [p[i] * p[j] for i in range(5) for j in range(i + 1, 5)]
    return np.concatenate(
        [
            [1.0],
            p,
            p**2,
            pairs,
            np.sin(np.pi * p),
            np.cos(2 * np.pi * p),
            [np.tanh(6.0 * (p[0] - 0.5)), np.exp(1.5 * p[0]) - 1.0, p[0] ** 3],
        ]
    )


def _images(spec: GeneratorSpec, p: np.ndarray) -> np.ndarray:
    dims = spec.dims
    u, v = spec.grid
    drive = p[0]
    amplitude = 0.3 + 1.2 * drive**2
    width = 0.25 + 0.35 * math.sqrt(drive)
    elongation = 1.0 + 4.0 * (p[1] - 0.5) ** 2 + 2.0 * abs(p[2] - 0.5)
    orientation = math.pi * p[3] + 0.5 * math.pi * p[4]

    images = np.empty(dims.image_shape, dtype=np.float64)
    for view in range(dims.image_views):
        theta = orientation + view * math.pi / 3
        a = u * math.cos(theta) + v * math.sin(theta)
        b = -u * math.sin(theta) + v * math.cos(theta)
        for channel in range(dims.image_channels):
            sigma = width * (1.0 + 0.15 * channel)
            major = sigma * math.sqrt(elongation)
            minor = sigma / math.sqrt(elongation)
            peak = amplitude / (1.0 + 0.25 * channel)
            images[view, channel] = peak * np.exp(-0.5 * ((a / major) ** 2 + (b / minor) ** 2))
    return images


def synth_sample(spec: GeneratorSpec, params: np.ndarray) -> SampleRecord:
    p = np.asarray(params, dtype=np.float64)
    if p.shape != (spec.dims.input_dim,):
        raise DimensionError("synth_sample", "params", spec.dims.input_dim, tuple(p.shape))
    if not np.isfinite(p).all() or (p < 0).any() or (p > 1).any():
        raise ContractError("synth_sample", f"params must lie in [0, 1]^5, got {p.tolist()}")

    scalars = spec.scalar_coefficients @ _basis(p)
    images = _images(spec, p)

    if spec.noise_level > 0:
        # Noise is a pure function of (spec seed, params).
        rng = np.random.default_rng([spec.seed, *np.frombuffer(p.tobytes(), dtype=np.uint32).tolist()])
        scalars = scalars + rng.normal(0.0, spec.noise_level, size=scalars.shape)
        images = np.maximum(images + rng.normal(0.0, spec.noise_level, size=images.shape), 0.0)

    return SampleRecord(
        input_params=p.astype(np.float32),
        scalars=scalars.astype(np.float32),
        images=images.astype(np.float32),
    )


def sweep_params(n: int, sampling_seed: int, jitter: float = 0.5, input_dim: int = 5) -> np.ndarray:
    """
    Lexicographic grid sweep over [0, 1]^input_dim with seeded jitter.

    Sample i takes the base-g digits of i (most significant digit -> params[0])
    as cell indices; each coordinate is its cell centre shifted by
    U(-jitter/2, jitter/2) cells.
    """
    if n < 1:
        raise ContractError("generate_dataset", f"n must be >= 1, got {n}")
    levels = 1
    while levels**input_dim < n:
        levels += 1

    index = np.arange(n)
    digits = np.empty((n, input_dim), dtype=np.int64)
    for axis in reversed(range(input_dim)):
        digits[:, axis] = index % levels
        index = index // levels

    rng = np.random.default_rng(sampling_seed)
    offsets = rng.uniform(-jitter / 2, jitter / 2, size=(n, input_dim))
    return np.clip((digits + 0.5 + offsets) / levels, 0.0, 1.0)


def iter_dataset(spec: GeneratorSpec, n: int, sampling_seed: int) -> Iterator[SampleRecord]:
    for params in sweep_params(n, sampling_seed, spec.jitter, spec.dims.input_dim):
        yield synth_sample(spec, params)


def generate_dataset(spec: GeneratorSpec, n: int, sampling_seed: int) -> list[SampleRecord]:
    """Samples in sweep order, deliberately not shuffled."""
    records = list(iter_dataset(spec, n, sampling_seed))
    logger.debug("Generated dataset", n=n, sampling_seed=sampling_seed)
    return records


def stack_records(records: list[SampleRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Stack records into (inputs B x input_dim, outputs B x output_dim) float32 arrays."""
    if not records:
        raise ContractError("stack_records", "no records")
    x = np.stack([r.input_params for r in records]).astype(np.float32, copy=False)
    y = np.stack([r.output_vector() for r in records]).astype(np.float32, copy=False)
    return x, y

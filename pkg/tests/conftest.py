from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ltfbgan.datastore.BundleFile import BundleCatalog, write_bundles
from ltfbgan.nn.adam import AdamHyper
from ltfbgan.surrogate.CycleGanModel import CycleGanModel, SurrogateArch
from ltfbgan.surrogate.ModalityDims import ModalityDims
from ltfbgan.synthdata.generator import GeneratorSpec, iter_dataset

# Small enough that a few hundred training steps finish in well under a second.
TINY_DIMS = ModalityDims(latent_dim=4, scalar_dim=3, image_views=1, image_channels=1, image_h=4, image_w=4)
TINY_ARCH = SurrogateArch(
    encoder_hidden=(8,),
    decoder_hidden=(8,),
    forward_hidden=(8,),
    inverse_hidden=(8,),
    discriminator_hidden=(8,),
)
WIDE_ARCH = SurrogateArch(
    encoder_hidden=(8,),
    decoder_hidden=(8,),
    forward_hidden=(8,),
    inverse_hidden=(8,),
    discriminator_hidden=(8,),
    dtype="float64",
)


def tiny_model(seed: int = 0, arch: SurrogateArch = TINY_ARCH, lr: float = 0.001) -> CycleGanModel:
    model = CycleGanModel.create(TINY_DIMS, arch, seed=seed, hyper=AdamHyper(lr=lr))
    model.freeze_autoencoder()
    return model


def tiny_batch(n: int = 8, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, size=(n, TINY_DIMS.input_dim)).astype(np.float32)
    y = rng.normal(0, 1, size=(n, TINY_DIMS.output_dim)).astype(np.float32)
    return x, y


def write_tiny_bundles(out_dir: Path, n_samples: int, samples_per_file: int, sampling_seed: int = 0) -> BundleCatalog:
    write_bundles(
        iter_dataset(GeneratorSpec(dims=TINY_DIMS), n_samples, sampling_seed),
        samples_per_file,
        out_dir,
        TINY_DIMS,
    )
    return BundleCatalog.load(out_dir)


@pytest.fixture
def make_catalog(tmp_path):
    def make(n_samples: int = 200, samples_per_file: int = 50, name: str = "data") -> BundleCatalog:
        return write_tiny_bundles(tmp_path / name, n_samples, samples_per_file)

    return make

from __future__ import annotations

from pathlib import Path

import structlog

from ltfbgan.config.GenerateDataConfig import GenerateDataConfig
from ltfbgan.config.TrainConfig import TrainConfig
from ltfbgan.datastore.BundleFile import INDEX_FILE_NAME, BundleCatalog, write_bundles
from ltfbgan.synthdata.generator import iter_dataset

logger = structlog.getLogger(__name__)


def generate_data(config: GenerateDataConfig) -> list[Path]:
    """Write the synthetic dataset, in sweep order, as bundle files plus their index."""
    paths = write_bundles(
        iter_dataset(config.generator_spec, config.n_samples, config.sampling_seed),
        samples_per_file=config.samples_per_file,
        out_dir=config.out_dir,
        dims=config.dims,
    )
    config.save(config.out_dir, file_name="generate-config.yml")
    logger.info("Dataset ready", files=len(paths), samples=config.n_samples, out_dir=str(config.out_dir))
    return paths


def ensure_dataset(config: TrainConfig) -> BundleCatalog:
    if not (config.data_dir / INDEX_FILE_NAME).is_file() and config.generate_if_missing:
        logger.warning("No dataset found, generating one", data_dir=str(config.data_dir), n_samples=config.n_samples)
        generate_data(
            GenerateDataConfig.factory(
                out_dir=config.data_dir,
                n_samples=config.n_samples,
                samples_per_file=config.samples_per_file,
                log_level=config.log_level,
            )
        )
    return BundleCatalog.load(config.data_dir)

from __future__ import annotations

import argparse
import logging
from enum import Enum
from pathlib import Path

import structlog

from ltfbgan.config.utils import parse_int_list, parse_str_list
from ltfbgan.surrogate.ModalityDims import ModalityDims

logger = structlog.getLogger(__name__)

SUBCOMMANDS = ("generate-data", "train", "bench-datastore", "compare")
DEFAULT_CONFIG_FILE_NAME = "ltfbgan-config.yml"


class EnumAction(argparse.Action):
    """
    Argparse action for handling Enums
    """

    def __init__(self, **kwargs):
        enum_type = kwargs.pop("type", None)

        if enum_type is None:
            raise ValueError("type must be assigned an Enum when using EnumAction")
        if not issubclass(enum_type, Enum):
            raise TypeError("type must be an Enum when using EnumAction")

        kwargs.setdefault("choices", tuple(e.name for e in enum_type))

        super().__init__(**kwargs)

        self._enum = enum_type

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, self._enum[values])


class LogLevel(Enum):
    CRITICAL = logging.CRITICAL
    ERROR = logging.ERROR
    WARNING = logging.WARNING
    INFO = logging.INFO
    DEBUG = logging.DEBUG


def _add_data_store_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--data-store",
        type=str,
        choices=("none", "dynamic", "preload"),
        dest="data_store",
        help="Data store population mode: none (read every sample from its file), dynamic (cache on first use) "
        "or preload (read every file once before training). Can also be set via LTFBGAN_DATA_STORE.",
    )
    parser.add_argument(
        "--memory-budget-mb",
        type=float,
        dest="memory_budget_mb",
        help="Per-trainer data store capacity in MiB (default: unlimited).",
    )
    parser.add_argument(
        "--prefetch-depth",
        type=int,
        dest="prefetch_depth",
        help="Minibatches shuffled ahead of consumption on a background thread (default 1; needs --threads > 1).",
    )


def _add_training_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-dir", type=str, dest="data_dir", help="Directory holding bundles.json and bundles.")
    parser.add_argument(
        "--mode",
        type=str,
        choices=("single", "ltfb", "k-independent"),
        help="Orchestration: one trainer, LTFB tournament, or K independent trainers with best-of-K selection.",
    )
    parser.add_argument("--trainers", type=int, dest="trainers", help="Number of trainers K.")
    parser.add_argument("--shards", type=int, help="Data-parallel workers per trainer (default 4).")
    parser.add_argument("--batch-size", type=int, dest="batch_size", help="Minibatch size B (default 128).")
    parser.add_argument("--lr", type=float, help="Adam learning rate (default 0.001).")
    parser.add_argument(
        "--lr-jitter",
        type=float,
        dest="lr_jitter",
        help="Scale each trainer's learning rate by a seeded factor in [1 - j, 1 + j] (default 0).",
    )
    parser.add_argument(
        "--interval",
        type=str,
        help="Minibatch steps between tournament rounds; 'none' disables rounds (default 10).",
    )
    parser.add_argument("--steps", type=int, help="Step budget per trainer (default 200).")
    parser.add_argument(
        "--pretrain-steps", type=int, dest="pretrain_steps", help="Autoencoder pre-training steps (default 2000)."
    )
    parser.add_argument(
        "--eval-interval",
        type=str,
        dest="eval_interval",
        help="Steps between validation evaluations (default: at every round and at the end).",
    )
    parser.add_argument(
        "--reset-discriminator",
        action="store_const",
        const=True,
        default=None,
        dest="reset_discriminator",
        help="Re-initialize a trainer's discriminator when it adopts an incoming generator.",
    )
    parser.add_argument(
        "--verify-replicas",
        action="store_const",
        const=True,
        default=None,
        dest="verify_replicas",
        help="Check that all shard replicas are bit-identical after every update.",
    )
    parser.add_argument("--dtype", type=str, choices=("float32", "float64"), help="Model precision.")
    _add_data_store_arguments(parser)


def parse_cli_args(args) -> dict:
    parser = argparse.ArgumentParser(
        prog="ltfbgan",
        description="Train CycleGAN surrogates with tournament-coupled trainers and a distributed data store.",
        formatter_class=argparse.RawTextHelpFormatter,
    )

    parent_parser = argparse.ArgumentParser(add_help=False)
    parent_parser.add_argument(
        "--config",
        type=str,
        dest="config",
        help="Path of a YAML config file (shorthand for --config-folder and --config-file-name).",
    )
    parent_parser.add_argument(
        "--config-folder",
        type=str,
        dest="config_folder",
        help="The folder to look in for the ltfbgan-config.yml file (the default is the current working directory). "
        "Can also be set via LTFBGAN_CONFIG_FOLDER environment variable.",
    )
    parent_parser.add_argument(
        "--config-file-name",
        type=str,
        dest="config_file_name",
        help="The config YAML file name. Must be in the directory supplied as the config-folder "
        f"(Default: {DEFAULT_CONFIG_FILE_NAME}). Can also be set via LTFBGAN_CONFIG_FILE_NAME environment variable.",
    )
    parent_parser.add_argument("--seed", type=int, help="Run seed (default 0).")
    parent_parser.add_argument(
        "--threads",
        type=int,
        help="Worker thread bound; 1 (the default) is the deterministic single-threaded mode.",
    )
    parent_parser.add_argument("--out", type=str, dest="out_dir", help="Output directory.")
    parent_parser.add_argument(
        "-L",
        "--log-level",
        type=LogLevel,
        action=EnumAction,
        dest="log_level",
        help="Set the log level. Defaults to INFO. Can also be set via LTFBGAN_LOG_LEVEL environment variable.",
    )

    subcommands = parser.add_subparsers(dest="subcommand", required=True)

    parser_generate = subcommands.add_parser(
        "generate-data",
        description="Generate a synthetic dataset in parameter-sweep order and write it as bundle files.",
        parents=[parent_parser],
    )
    parser_generate.add_argument("--n", type=int, dest="n_samples", help="Number of samples (default 4000).")
    parser_generate.add_argument(
        "--samples-per-file", type=int, dest="samples_per_file", help="Samples per bundle file (default 1000)."
    )
    parser_generate.add_argument("--sampling-seed", type=int, dest="sampling_seed", help="Sweep jitter seed.")
    parser_generate.add_argument("--noise-level", type=float, dest="noise_level", help="Observation noise (default 0).")
    parser_generate.add_argument("--image-size", type=int, dest="image_size", help="Image height and width (default 16).")
    parser_generate.add_argument(
        "--full-resolution",
        action="store_const",
        const=ModalityDims.full_resolution().image_w,
        dest="image_size",
        help="Use 64x64 images.",
    )

    parser_train = subcommands.add_parser(
        "train",
        description="Train with one trainer, an LTFB tournament, or K independent trainers.",
        parents=[parent_parser],
    )
    _add_training_arguments(parser_train)

    parser_bench = subcommands.add_parser(
        "bench-datastore",
        description="Time initial and steady-state epochs for the data store modes and report file accesses.",
        parents=[parent_parser],
    )
    parser_bench.add_argument("--data-dir", type=str, dest="data_dir", help="Directory holding the bundles.")
    parser_bench.add_argument(
        "--modes", type=parse_str_list, help="Comma separated data store modes (default none,dynamic,preload)."
    )
    parser_bench.add_argument("--epochs", type=int, help="Epochs per mode (default 3).")
    parser_bench.add_argument("--shards", type=int, help="Data-parallel workers (default 4).")
    parser_bench.add_argument("--batch-size", type=int, dest="batch_size", help="Minibatch size B (default 128).")
    parser_bench.add_argument(
        "--no-train",
        action="store_const",
        const=False,
        default=None,
        dest="train_model",
        help="Only move data, skip the model computation.",
    )
    _add_data_store_arguments(parser_bench)

    parser_compare = subcommands.add_parser(
        "compare",
        description="Paired LTFB and K-independent runs over several seeds and trainer counts.",
        parents=[parent_parser],
    )
    _add_training_arguments(parser_compare)
    parser_compare.add_argument("--seeds", type=parse_int_list, help="Comma separated run seeds (default 0,1,2,3,4).")
    parser_compare.add_argument(
        "--trainer-counts", type=parse_int_list, dest="trainer_counts", help="Comma separated K values (default 2,4)."
    )

    parsed_kwargs = parser.parse_args(args).__dict__

    if isinstance(parsed_kwargs.get("log_level"), Enum):
        parsed_kwargs["log_level"] = parsed_kwargs["log_level"].value

    config = parsed_kwargs.pop("config", None)
    if config is not None:
        config_path = Path(config)
        parsed_kwargs["config_folder"] = str(config_path.parent)
        parsed_kwargs["config_file_name"] = config_path.name

    return {k: v for k, v in parsed_kwargs.items() if v is not None}

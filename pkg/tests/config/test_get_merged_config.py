import logging
import os
from pathlib import Path
from unittest import mock

import pytest
import structlog

from ltfbgan.config.BenchDatastoreConfig import BenchDatastoreConfig
from ltfbgan.ConfigValidationError import ConfigValidationError
from ltfbgan.config.get_merged_config import get_merged_config, get_yaml_config_kwargs
from ltfbgan.config.TrainConfig import TrainConfig

assets_path = Path(__file__).parent
logger = structlog.getLogger(__name__)


def merged(args: list[str], env: dict[str, str] | None = None):
    with mock.patch.dict(os.environ, env or {}, clear=True):
        return get_merged_config(logger=logger, args=args)


def test_yaml_kwargs_are_snake_cased():
    kwargs = get_yaml_config_kwargs(assets_path / "ltfbgan-config.yml")
    assert kwargs["batch_size"] == 64
    assert kwargs["data_store"] == "preload"
    assert kwargs["out_dir"] == "runs/from-yaml"
    assert kwargs["log_level"] == logging.DEBUG
    assert kwargs["train"]["steps"] == 300


def test_missing_yaml_file_gives_no_kwargs(tmp_path):
    assert get_yaml_config_kwargs(tmp_path / "absent.yml") == {}
    assert get_yaml_config_kwargs(None) == {}


def test_defaults_without_any_source(tmp_path):
    config = merged(["train", "--config-folder", str(tmp_path)])
    assert isinstance(config, TrainConfig)
    assert config == TrainConfig(subcommand="train")


def test_yaml_top_level_and_subcommand_section():
    config = merged(["train", "--config-folder", str(assets_path)])
    assert config.config_file_path == assets_path / "ltfbgan-config.yml"
    assert config.seed == 3
    assert config.batch_size == 64
    assert config.log_level == logging.DEBUG
    # train section overrides the shared top level
    assert config.steps == 300
    assert config.trainers == 4
    assert config.out_dir == Path("runs/train-from-yaml")


def test_sections_of_other_subcommands_are_ignored():
    config = merged(["bench-datastore", "--config-folder", str(assets_path)])
    assert isinstance(config, BenchDatastoreConfig)
    assert config.epochs == 5
    assert config.modes == ("dynamic", "preload")
    assert config.out_dir == Path("runs/from-yaml")


def test_env_overrides_yaml():
    config = merged(
        ["train", "--config-folder", str(assets_path)],
        {"LTFBGAN_BATCH_SIZE": "32", "LTFBGAN_INTERVAL": "none", "LTFBGAN_VERIFY_REPLICAS": "yes"},
    )
    assert config.batch_size == 32
    assert config.interval is None
    assert config.verify_replicas is True
    assert config.shards == 2


def test_cli_overrides_env_and_yaml():
    config = merged(
        ["train", "--config-folder", str(assets_path), "--batch-size", "16", "--interval", "5", "-L", "WARNING"],
        {"LTFBGAN_BATCH_SIZE": "32"},
    )
    assert config.batch_size == 16
    assert config.interval == 5
    assert config.log_level == logging.WARNING


def test_config_shorthand_and_env_file_name(tmp_path):
    (tmp_path / "other.yml").write_text("steps: 42\n")
    assert merged(["train", "--config", str(tmp_path / "other.yml")]).steps == 42
    config = merged(
        ["train"], {"LTFBGAN_CONFIG_FOLDER": str(tmp_path), "LTFBGAN_CONFIG_FILE_NAME": "other.yml"}
    )
    assert config.steps == 42


def test_env_keys_of_other_subcommands_are_dropped(tmp_path):
    config = merged(["generate-data", "--config-folder", str(tmp_path)], {"LTFBGAN_STEPS": "7"})
    assert not hasattr(config, "steps")


def test_yaml_is_rendered_with_env_vars(tmp_path):
    (tmp_path / "ltfbgan-config.yml").write_text(
        "steps: {{ env_var('LTFBGAN_TEST_STEPS', '11') }}\nseed: {{ env_var('LTFBGAN_TEST_SEED') }}\n"
    )
    config = merged(["train", "--config-folder", str(tmp_path)], {"LTFBGAN_TEST_SEED": "5"})
    assert config.steps == 11
    assert config.seed == 5


def test_invalid_config_folder(tmp_path):
    with pytest.raises(ValueError) as e_info:
        merged(["train", "--config-folder", str(tmp_path / "missing")])
    assert "Path is not valid directory" in str(e_info.value)


def test_invalid_env_value():
    with pytest.raises(ValueError, match="LTFBGAN_SHARDS"):
        merged(["train"], {"LTFBGAN_SHARDS": "four"})


def test_invalid_merged_value(tmp_path):
    with pytest.raises(ConfigValidationError) as e_info:
        merged(["train", "--config-folder", str(tmp_path), "--shards", "0"])
    assert "shards" in e_info.value.problems


def test_non_mapping_section(tmp_path):
    (tmp_path / "ltfbgan-config.yml").write_text("train: 3\n")
    with pytest.raises(ValueError, match="mapping"):
        merged(["train", "--config-folder", str(tmp_path)])


def test_yaml_kwargs_from_a_fake_filesystem(fs):
    fs.create_file("/configs/ltfbgan-config.yml", contents="batch-size: 8\nlog-level: ERROR\nout: /runs/a\n")
    kwargs = get_yaml_config_kwargs(Path("/configs/ltfbgan-config.yml"))
    assert kwargs == {"batch_size": 8, "log_level": logging.ERROR, "out_dir": "/runs/a"}

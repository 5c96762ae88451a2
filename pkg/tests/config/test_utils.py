from __future__ import annotations

import logging
import os
from pathlib import Path
from unittest import mock

import pytest

from ltfbgan.config.utils import (
    get_ltfbgan_config_from_env,
    load_yaml_config,
    parse_bool,
    parse_int_list,
    parse_log_level,
    parse_optional_float,
    parse_optional_int,
    parse_str_list,
    validate_directory,
    validate_file_path,
)


@pytest.mark.parametrize(
    "value, expected",
    [
        pytest.param("true", True, id="true"),
        pytest.param("YES", True, id="upper case"),
        pytest.param(" on ", True, id="padded"),
        pytest.param("1", True, id="one"),
        pytest.param("false", False, id="false"),
        pytest.param("0", False, id="zero"),
        pytest.param("anything", False, id="anything else"),
        pytest.param(True, True, id="already a bool"),
    ],
)
def test_parse_bool(value, expected):
    assert parse_bool(value) is expected


@pytest.mark.parametrize(
    "value, expected",
    [
        pytest.param("10", 10, id="number"),
        pytest.param(7, 7, id="already an int"),
        pytest.param("none", None, id="none"),
        pytest.param("Off", None, id="off"),
        pytest.param("inf", None, id="inf"),
        pytest.param("", None, id="empty"),
        pytest.param(None, None, id="unset"),
    ],
)
def test_parse_optional_int(value, expected):
    assert parse_optional_int(value) == expected


def test_parse_optional_int_rejects_garbage():
    with pytest.raises(ValueError):
        parse_optional_int("ten")


def test_parse_optional_float():
    assert parse_optional_float("2.5") == 2.5
    assert parse_optional_float("none") is None
    assert parse_optional_float(3) == 3


def test_parse_lists():
    assert parse_int_list("0, 1,2") == (0, 1, 2)
    assert parse_int_list([3, "4"]) == (3, 4)
    assert parse_str_list("none,preload,") == ("none", "preload")
    assert parse_str_list(["dynamic"]) == ("dynamic",)


def test_parse_log_level():
    assert parse_log_level("debug") == logging.DEBUG
    assert parse_log_level(logging.ERROR) == logging.ERROR
    with pytest.raises(ValueError, match="Invalid log level"):
        parse_log_level("LOUD")


@mock.patch.dict(
    os.environ,
    {
        "LTFBGAN_SEED": "4",
        "LTFBGAN_LR": "0.02",
        "LTFBGAN_OUT_DIR": "some/out",
        "LTFBGAN_LOG_LEVEL": "warning",
        "LTFBGAN_SEEDS": "1,2",
        "LTFBGAN_MEMORY_BUDGET_MB": "none",
        "LTFBGAN_STEPS": "",
        "UNRELATED": "x",
    },
    clear=True,
)
def test_config_from_env():
    assert get_ltfbgan_config_from_env() == {
        "seed": 4,
        "lr": 0.02,
        "out_dir": Path("some/out"),
        "log_level": logging.WARNING,
        "seeds": (1, 2),
        "memory_budget_mb": None,
    }


@mock.patch.dict(os.environ, {"LTFBGAN_TRAINERS": "two"}, clear=True)
def test_config_from_env_names_the_bad_variable():
    with pytest.raises(ValueError, match="LTFBGAN_TRAINERS"):
        get_ltfbgan_config_from_env()


def test_validate_paths(tmp_path):
    (tmp_path / "a.yml").write_text("")
    assert validate_file_path(tmp_path / "a.yml") == tmp_path / "a.yml"
    assert validate_directory(str(tmp_path)) == tmp_path
    assert validate_file_path(None) is None
    assert validate_directory(None) is None
    with pytest.raises(ValueError, match="invalid file path"):
        validate_file_path(tmp_path / "b.yml")
    with pytest.raises(ValueError, match="not valid directory"):
        validate_directory(tmp_path / "a.yml")


def test_load_yaml_config(tmp_path):
    (tmp_path / "empty.yml").write_text("")
    (tmp_path / "list.yml").write_text("- 1\n- 2\n")
    assert load_yaml_config(tmp_path / "empty.yml") == {}
    assert load_yaml_config(tmp_path / "missing.yml") == {}
    with pytest.raises(ValueError, match="must contain a mapping"):
        load_yaml_config(tmp_path / "list.yml")


@mock.patch.dict(os.environ, {}, clear=True)
def test_load_yaml_config_with_unset_env_var(tmp_path):
    (tmp_path / "c.yml").write_text("seed: {{ env_var('LTFBGAN_TEST_UNSET') }}\n")
    with pytest.raises(ValueError, match="LTFBGAN_TEST_UNSET"):
        load_yaml_config(tmp_path / "c.yml")

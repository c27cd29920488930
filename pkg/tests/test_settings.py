from __future__ import annotations

from pathlib import Path

import pytest
from pydantic import ValidationError

from src.errors import ConfigError, IoError
from src.settings import (
    PipelineConfig,
    build_config,
    config_lines,
    parse_config_text,
    read_config_file,
    write_config_echo,
)


def test_parse_config_text() -> None:
    values = parse_config_text(["# run", "manifest = data/manifest.txt", "", "glcm-levels=16  # finer", "k=4"])
    assert values == {"manifest": "data/manifest.txt", "glcm_levels": "16", "k": "4"}
    with pytest.raises(ConfigError):
        parse_config_text(["just words"])


def test_defaults_and_lists() -> None:
    config = build_config({"manifest": "m.txt", "augment_grid": "1, 2.5", "glcm_offset": "0,1"})
    assert config.k == 8
    assert config.kind == "nb"
    assert config.threshold == "avg"
    assert config.augment_grid == (1.0, 2.5)
    assert config.glcm_offset == (0, 1)
    assert config.root == Path(".")
    assert len(config.transform_set()) == 4


def test_overrides_win_over_file_values() -> None:
    config = build_config({"manifest": "m.txt", "k": "8", "kind": "tan"}, {"k": "3", "kind": None})
    assert config.k == 3
    assert config.kind == "tan"


@pytest.mark.parametrize(
    "values",
    [
        {"manifest": "m.txt", "colour": "blue"},
        {"manifest": "m.txt", "train_fraction": "1.5"},
        {"manifest": "m.txt", "glcm_levels": "1"},
        {"manifest": "m.txt", "kind": "svm"},
        {"manifest": "m.txt", "threshold": "high"},
        {"manifest": "m.txt", "augment_grid": "4"},
        {"manifest": "m.txt", "tangent_transforms": "translate-x", "tangent_steps": "9"},
        {"k": "3"},
    ],
)
def test_invalid_configurations(values: dict) -> None:
    with pytest.raises(ConfigError):
        build_config(values)


def test_echo_reproduces_config(tmp_path: Path) -> None:
    config = build_config(
        {
            "manifest": str(tmp_path / "m.txt"),
            "tangent_enabled": "true",
            "tangent_transforms": "translate-x,scale",
            "tangent_steps": "1,0.05",
            "kind": "all",
            "threshold": "0.25",
            "structure_source": "1",
        }
    )
    echo = write_config_echo(config, tmp_path / "config.echo")
    lines = echo.read_text().splitlines()
    assert lines == sorted(lines)
    assert "dataset_root=" in lines
    assert build_config(read_config_file(echo)) == config
    assert config_lines(config) == lines


def test_missing_config_file(tmp_path: Path) -> None:
    with pytest.raises(IoError):
        read_config_file(tmp_path / "run.cfg")


def test_config_is_frozen() -> None:
    config = PipelineConfig(manifest=Path("m.txt"))
    with pytest.raises(ValidationError):
        config.k = 2  # type: ignore[misc]

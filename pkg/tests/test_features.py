from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.data_loader import GrayImage
from src.errors import FormatError, OffsetError, TooSmall
from src.features import (
    DESCRIPTOR_NAMES,
    FEATURE_COLUMNS,
    N_BLOCKS,
    GlcmConfig,
    block_descriptor,
    describe_dataset,
    describe_image,
    glcm,
    grid_blocks,
    read_features,
    write_features,
)

CROSS = np.array([[0, 255], [255, 0]])


@pytest.mark.parametrize(
    ("width", "height", "widths", "heights"),
    [
        (9, 9, (3, 3, 3), (3, 3, 3)),
        (10, 11, (3, 3, 4), (3, 3, 5)),
        (92, 112, (30, 30, 32), (37, 37, 38)),
    ],
)
def test_grid_cut_rule(width: int, height: int, widths: tuple, heights: tuple) -> None:
    grid = grid_blocks(GrayImage(np.zeros((height, width))))
    assert grid.column_widths == widths
    assert grid.row_heights == heights
    assert len(grid.regions) == N_BLOCKS


def test_grid_rejects_small_images() -> None:
    with pytest.raises(TooSmall):
        grid_blocks(GrayImage(np.zeros((5, 9))))


def test_constant_block_glcm() -> None:
    result = glcm(np.full((4, 4), 200), levels=8)
    assert result.matrix[6, 6] == 1.0
    assert np.count_nonzero(result.matrix) == 1


def test_cross_block_glcm() -> None:
    p = glcm(CROSS, levels=2, offset=(1, 0)).matrix
    np.testing.assert_array_equal(p, [[0.0, 0.5], [0.5, 0.0]])


def test_glcm_offsets() -> None:
    with pytest.raises(OffsetError):
        glcm(np.zeros((3, 3)), offset=(5, 0))
    with pytest.raises(OffsetError):
        glcm(np.zeros((3, 3)), offset=(0, 0))
    vertical = glcm(np.array([[0, 0], [255, 255]]), levels=2, offset=(0, 1)).matrix
    np.testing.assert_array_equal(vertical, [[0.0, 0.5], [0.5, 0.0]])


def test_constant_block_descriptor() -> None:
    d = block_descriptor(np.full((3, 3), 5))
    assert (d.mean, d.std, d.energy, d.entropy, d.contrast, d.homogeneity) == (5.0, 0.0, 1.0, 0.0, 0.0, 1.0)


def test_cross_block_descriptor() -> None:
    d = block_descriptor(CROSS, GlcmConfig(levels=2, offset=(1, 0)))
    assert d.energy == pytest.approx(0.5, abs=1e-12)
    assert d.entropy == pytest.approx(math.log(2.0), abs=1e-12)
    assert d.contrast == pytest.approx(1.0, abs=1e-12)
    assert d.homogeneity == pytest.approx(0.5, abs=1e-12)
    assert d.mean == 127.5
    assert d.std == 127.5


def test_entropy_ignores_level_permutation_but_contrast_does_not() -> None:
    cfg = GlcmConfig(levels=4, offset=(1, 0))
    original = block_descriptor(np.tile([0, 64, 192], (3, 1)), cfg)
    permuted = block_descriptor(np.tile([0, 192, 64], (3, 1)), cfg)
    assert permuted.entropy == pytest.approx(original.entropy, abs=1e-12)
    assert original.contrast == pytest.approx(2.5)
    assert permuted.contrast == pytest.approx(6.5)


def test_descriptor_bounds(rng: np.random.Generator) -> None:
    image = GrayImage(rng.integers(0, 256, size=(30, 27)))
    levels = GlcmConfig().levels
    for d in describe_image(image):
        assert 0 <= d.mean <= 255
        assert 0 <= d.std <= 127.5
        assert 1 / levels**2 <= d.energy <= 1
        assert 0 <= d.entropy <= 2 * math.log(levels)
        assert 0 <= d.contrast <= (levels - 1) ** 2
        assert 0 <= d.homogeneity <= 1


def test_describe_image_locality() -> None:
    assert len(set(describe_image(GrayImage(np.full((9, 9), 80))))) == 1

    pixels = np.zeros((9, 9))
    pixels[3:6, 3:6] = 200
    means = [d.mean for d in describe_image(GrayImage(pixels))]
    assert [i for i, m in enumerate(means) if m > 0] == [4]


def test_feature_csv(tmp_path: Path) -> None:
    images = [GrayImage(np.full((9, 9), 10)), GrayImage(np.tile(np.arange(9) * 20, (9, 1)))]
    frame = describe_dataset(images, ["a.pgm", "b.pgm"])
    assert list(frame.columns) == list(FEATURE_COLUMNS)
    assert len(frame) == 2 * N_BLOCKS

    loaded = read_features(write_features(frame, tmp_path / "features.csv"))
    np.testing.assert_array_equal(loaded[list(DESCRIPTOR_NAMES)].to_numpy(), frame[list(DESCRIPTOR_NAMES)].to_numpy())


def test_feature_csv_validation(tmp_path: Path) -> None:
    path = tmp_path / "bad.csv"
    pd.DataFrame({"image": ["a"], "block": [0], "mean": [1.0]}).to_csv(path, index=False)
    with pytest.raises(FormatError):
        read_features(path)

    frame = describe_dataset([GrayImage(np.zeros((9, 9)))], ["a.pgm"]).iloc[:5]
    with pytest.raises(FormatError):
        read_features(write_features(frame, tmp_path / "short.csv"))

"""Block decomposition and texture descriptors for face images.

An image is cut into a 3x3 grid. Every block is summarised by six numbers:
the mean and population standard deviation of its raw intensities, and the
energy, entropy, contrast and homogeneity of its symmetric gray-level
co-occurrence matrix (GLCM). Values are reported in their raw physical units;
standardization happens in :mod:`src.quantizer`.
"""

from __future__ import annotations

import logging
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.stats import entropy as shannon_entropy
from skimage.feature import graycoprops

from src.data_loader import GrayImage
from src.errors import FormatError, IoError, OffsetError, TooSmall

logger = logging.getLogger(__name__)

GRID_SIDE = 3
N_BLOCKS = GRID_SIDE * GRID_SIDE
MIN_BLOCK_SIDE = 2

DEFAULT_LEVELS = 8
DEFAULT_OFFSET = (1, 0)

DESCRIPTOR_NAMES = ("mean", "std", "energy", "entropy", "contrast", "homogeneity")
FEATURE_COLUMNS = ("image", "block", *DESCRIPTOR_NAMES)


@dataclass(frozen=True)
class GlcmConfig:
    """Gray-level count and ``(dx, dy)`` pixel offset used for every block."""

    levels: int = DEFAULT_LEVELS
    offset: tuple[int, int] = DEFAULT_OFFSET


@dataclass(frozen=True)
class BlockGrid:
    """Nine ``(row_slice, col_slice)`` regions in row-major order."""

    regions: tuple[tuple[slice, slice], ...]

    def blocks(self, image: GrayImage) -> list[np.ndarray]:
        return [image.pixels[rows, cols] for rows, cols in self.regions]

    @property
    def column_widths(self) -> tuple[int, ...]:
        return tuple(cols.stop - cols.start for _, cols in self.regions[:GRID_SIDE])

    @property
    def row_heights(self) -> tuple[int, ...]:
        return tuple(rows.stop - rows.start for rows, _ in self.regions[::GRID_SIDE])


@dataclass(frozen=True)
class Glcm:
    """Normalized symmetric co-occurrence matrix ``p(i, j)`` over ``levels`` bins."""

    levels: int
    matrix: np.ndarray


@dataclass(frozen=True)
class BlockFeatureVector:
    mean: float
    std: float
    energy: float
    entropy: float
    contrast: float
    homogeneity: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


def _cuts(length: int) -> list[int]:
    step = length // GRID_SIDE
    return [0, step, 2 * step, length]


def grid_blocks(image: GrayImage) -> BlockGrid:
    """Cut ``image`` into a 3x3 grid; the last row and column absorb the remainder.

    Raises:
        TooSmall: If a block would have fewer than 2 rows or columns.
    """

    if image.width < GRID_SIDE * MIN_BLOCK_SIDE or image.height < GRID_SIDE * MIN_BLOCK_SIDE:
        raise TooSmall(f"image {image.width}x{image.height} is too small for a 3x3 grid of 2x2 blocks")
    rows, cols = _cuts(image.height), _cuts(image.width)
    regions = tuple(
        (slice(rows[r], rows[r + 1]), slice(cols[c], cols[c + 1])) for r in range(GRID_SIDE) for c in range(GRID_SIDE)
    )
    return BlockGrid(regions)


def glcm(block: np.ndarray, levels: int = DEFAULT_LEVELS, offset: tuple[int, int] = DEFAULT_OFFSET) -> Glcm:
    """Symmetric, normalized co-occurrence matrix of ``block`` at pixel offset ``(dx, dy)``.

    Intensities are binned to ``floor(v * levels / 256)``; each pixel pair
    ``(p, p + offset)`` inside the block counts once in each direction.
    """

    if levels < 2:
        raise OffsetError(f"GLCM needs at least 2 gray levels, got {levels}")
    block = np.asarray(block, dtype=np.int64)
    height, width = block.shape
    dx, dy = offset
    if (dx, dy) == (0, 0) or abs(dx) >= width or abs(dy) >= height:
        raise OffsetError(f"offset {offset} does not fit in a {width}x{height} block")

    binned = block * levels // 256
    src = binned[max(0, -dy) : height - max(0, dy), max(0, -dx) : width - max(0, dx)]
    dst = binned[max(0, dy) : height + min(0, dy), max(0, dx) : width + min(0, dx)]
    counts = np.bincount((src * levels + dst).ravel(), minlength=levels * levels).reshape(levels, levels)
    symmetric = (counts + counts.T).astype(float)
    return Glcm(levels, symmetric / symmetric.sum())


def block_descriptor(block: np.ndarray, cfg: GlcmConfig = GlcmConfig()) -> BlockFeatureVector:
    """Six-element texture descriptor of one block."""

    values = np.asarray(block, dtype=float)
    if values.shape[0] < MIN_BLOCK_SIDE or values.shape[1] < MIN_BLOCK_SIDE:
        raise TooSmall(f"block {values.shape} is smaller than 2x2")

    p = glcm(values.astype(np.int64), cfg.levels, cfg.offset).matrix
    props = p[:, :, np.newaxis, np.newaxis]
    return BlockFeatureVector(
        mean=float(values.mean()),
        std=float(values.std()),
        energy=float(graycoprops(props, "ASM")[0, 0]),
        entropy=float(shannon_entropy(p.ravel())),
        contrast=float(graycoprops(props, "contrast")[0, 0]),
        homogeneity=float(graycoprops(props, "homogeneity")[0, 0]),
    )


def describe_image(image: GrayImage, cfg: GlcmConfig = GlcmConfig()) -> list[BlockFeatureVector]:
    """Descriptors of the nine grid blocks in row-major order."""

    return [block_descriptor(block, cfg) for block in grid_blocks(image).blocks(image)]


def describe_dataset(images: Sequence[GrayImage], names: Sequence[str], cfg: GlcmConfig = GlcmConfig()) -> pd.DataFrame:
    """Feature table with one row per block, in the on-disk CSV layout."""

    rows = []
    for name, image in zip(names, images):
        for block, vector in enumerate(describe_image(image, cfg)):
            rows.append((name, block, *astuple(vector)))
    logger.info("Described %d images (%d blocks)", len(images), len(rows))
    return pd.DataFrame(rows, columns=list(FEATURE_COLUMNS))


def write_features(frame: pd.DataFrame, path: Path | str) -> Path:
    """Persist a feature table as CSV.

    Args:
        frame: Table from :func:`describe_dataset`.
        path: Destination file; parent directories are created.

    Returns:
        The written path. Floats use 17 significant digits so that
        :func:`read_features` restores them exactly.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def read_features(path: Path | str) -> pd.DataFrame:
    """Load a feature CSV and check its columns and per-image block counts."""

    path = Path(path)
    if not path.exists():
        raise IoError(f"feature file not found: {path}")
    frame = pd.read_csv(path, dtype={"image": str})
    missing = set(FEATURE_COLUMNS) - set(frame.columns)
    if missing:
        raise FormatError(f"{path} is missing columns: {', '.join(sorted(missing))}")
    per_image = frame.groupby("image", sort=False)["block"].count()
    if (per_image != N_BLOCKS).any():
        bad = per_image[per_image != N_BLOCKS].index.tolist()
        raise FormatError(f"{path}: images without exactly {N_BLOCKS} blocks: {bad[:5]}")
    return frame[list(FEATURE_COLUMNS)]


def descriptor_matrix(frame: pd.DataFrame) -> np.ndarray:
    """``(rows, 6)`` float matrix of the descriptor columns."""

    return frame[list(DESCRIPTOR_NAMES)].to_numpy(dtype=float)


__all__ = [
    "BlockFeatureVector",
    "BlockGrid",
    "DESCRIPTOR_NAMES",
    "FEATURE_COLUMNS",
    "Glcm",
    "GlcmConfig",
    "N_BLOCKS",
    "block_descriptor",
    "describe_dataset",
    "describe_image",
    "descriptor_matrix",
    "glcm",
    "grid_blocks",
    "read_features",
    "write_features",
]

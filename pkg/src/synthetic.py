"""Synthetic data for pipeline checks: separable block-texture faces and BN samples."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from src.bayesnet import BnModel
from src.data_loader import DatasetManifest, GrayImage, save_image, write_manifest
from src.features import N_BLOCKS, grid_blocks

logger = logging.getLogger(__name__)

# Texture kinds painted into grid blocks.
DARK, BRIGHT, CHECKER, STRIPES = range(4)


def _paint(block: np.ndarray, texture: int) -> None:
    rows, cols = np.indices(block.shape)
    if texture == DARK:
        block[...] = 40
    elif texture == BRIGHT:
        block[...] = 200
    elif texture == CHECKER:
        block[...] = np.where((rows + cols) % 2 == 0, 0, 255)
    else:
        block[...] = np.where(rows % 2 == 0, 60, 190)


def class_template(class_id: int) -> tuple[int, ...]:
    """Texture of each block for one class: a checker block whose position encodes the class."""

    textures = [DARK] * N_BLOCKS
    textures[N_BLOCKS - 1] = BRIGHT
    textures[(class_id + 4) % (N_BLOCKS - 1)] = STRIPES
    textures[class_id % (N_BLOCKS - 1)] = CHECKER
    return tuple(textures)


def synthetic_face(class_id: int, size: int = 24) -> GrayImage:
    """A ``size x size`` image whose blocks follow :func:`class_template`."""

    canvas = np.zeros((size, size), dtype=np.int64)
    grid = grid_blocks(GrayImage(canvas))
    for (rows, cols), texture in zip(grid.regions, class_template(class_id)):
        _paint(canvas[rows, cols], texture)
    return GrayImage(canvas)


def write_synthetic_dataset(root: Path | str, class_count: int = 5, per_class: int = 10, size: int = 24) -> Path:
    """Write a separable PGM dataset under ``root`` and return its manifest path.

    Images of one class are identical, so every class maps to a single
    distinct label vector once the blocks are quantized with ``k = 4``.
    """

    if not 1 <= class_count <= N_BLOCKS - 1:
        raise ValueError(f"class_count must lie in [1, {N_BLOCKS - 1}] to keep templates distinct")
    root = Path(root)
    entries = []
    for class_id in range(class_count):
        image = synthetic_face(class_id, size)
        for index in range(per_class):
            relative = f"s{class_id + 1}/{index + 1}.pgm"
            save_image(image, root / relative)
            entries.append((relative, class_id))
    manifest = DatasetManifest(tuple(entries), class_count, (size, size), root)
    path = write_manifest(manifest, root / "manifest.txt")
    logger.info("Wrote %d synthetic images for %d classes under %s", len(entries), class_count, root)
    return path


def sample_instances(model: BnModel, n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Ancestral samples ``(labels, classes)`` from a single-structure model."""

    rng = np.random.default_rng(seed)
    space = model.space
    classes = rng.choice(space.class_count, size=n, p=model.class_prior)
    labels = np.zeros((n, space.n), dtype=np.int64)

    order = []
    pending = list(range(space.n))
    while pending:
        for attr in list(pending):
            parent = model.structure.parents[attr]
            if parent is None or parent in order:
                order.append(attr)
                pending.remove(attr)

    for attr in order:
        cpt, parent = model.cpts[attr], model.structure.parents[attr]
        probs = cpt[:, classes].T if parent is None else cpt[:, labels[:, parent], classes].T
        draws = rng.random(n)[:, np.newaxis]
        labels[:, attr] = np.minimum((np.cumsum(probs, axis=1) < draws).sum(axis=1), cpt.shape[0] - 1)
    return labels, classes


__all__ = ["class_template", "sample_instances", "synthetic_face", "write_synthetic_dataset"]

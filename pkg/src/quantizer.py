"""K-means vector quantization of block descriptors into discrete labels.

One codebook is shared by all nine block positions. Descriptors are z-scored
with statistics learned on the training blocks (zero-variance features keep a
scale of 1), seeded with k-means++ and refined by Lloyd iterations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus
from sklearn.preprocessing import StandardScaler

from src.errors import ConfigError, DataError, FormatError, IoError, LengthError
from src.features import DESCRIPTOR_NAMES, N_BLOCKS, BlockFeatureVector, descriptor_matrix

logger = logging.getLogger(__name__)

DEFAULT_K = 8
DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-6

LABEL_COLUMNS = tuple(f"f{i + 1}" for i in range(N_BLOCKS))

LabelVector = tuple[int, ...]


@dataclass(frozen=True)
class Codebook:
    """Centroids in standardized descriptor space plus the standardization itself."""

    centroids: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    zero_variance: tuple[bool, ...]
    inertia_history: tuple[float, ...] = ()

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    def standardize(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(np.asarray(points, dtype=float)) - self.mean) / self.scale


class CodebookDocument(BaseModel):
    """On-disk form of a :class:`Codebook`."""

    format_version: Literal[1] = 1
    k: int
    features: list[str]
    mean: list[float]
    scale: list[float]
    zero_variance: list[bool]
    centroids: list[list[float]]
    inertia_history: list[float]


def _nearest(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point (lowest index on ties) and the squared distance to it."""

    d2 = cdist(points, centroids, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(points)), labels]


def kmeans_fit(
    descriptors: np.ndarray | Sequence[Sequence[float]],
    k: int = DEFAULT_K,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> Codebook:
    """Fit a ``k``-centroid codebook to raw 6-dimensional descriptors.

    Lloyd iterations stop once no centroid moves by ``tol`` or more, or after
    ``max_iter`` rounds. A cluster that empties is reseeded with the point
    farthest from its current centroid. The inertia after every assignment
    step is kept in ``inertia_history``.

    Args:
        descriptors: One raw descriptor per row, typically nine rows per image.
        k: Number of centroids.
        seed: Seed for the k-means++ initialization.
        max_iter: Upper bound on Lloyd iterations, at least 1.
        tol: Largest centroid shift (standardized units) that counts as converged.

    Returns:
        Codebook: Centroids in standardized space plus the standardization.

    Raises:
        ConfigError: If ``max_iter < 1`` or ``tol`` is negative.
        DataError: If ``k < 1`` or there are fewer distinct points than ``k``.
    """

    if max_iter < 1:
        raise ConfigError(f"max_iter must be at least 1, got {max_iter}")
    if tol < 0:
        raise ConfigError(f"tol must be non-negative, got {tol}")
    points = np.asarray(descriptors, dtype=float)
    if points.ndim != 2:
        raise DataError(f"descriptors must form a 2-D array, got shape {points.shape}")
    if k < 1:
        raise DataError(f"k must be at least 1, got {k}")
    if len(points) < k:
        raise DataError(f"{len(points)} descriptors cannot form {k} clusters")

    scaler = StandardScaler().fit(points)
    data = scaler.transform(points)
    if len(np.unique(data, axis=0)) < k:
        raise DataError(f"only {len(np.unique(data, axis=0))} distinct descriptors for {k} clusters")

    centroids, _ = kmeans_plusplus(data, n_clusters=k, random_state=seed)
    history: list[float] = []
    iteration = 0
    for iteration in range(1, max_iter + 1):
        labels, d2 = _nearest(data, centroids)
        history.append(float(d2.sum()))

        updated = np.empty_like(centroids)
        sizes = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(sizes == 0):
            # the farthest point from its own centroid becomes a singleton cluster
            movable = sizes[labels] > 1
            far = int(np.argmax(np.where(movable, d2, -1.0)))
            sizes[labels[far]] -= 1
            sizes[j] = 1
            labels[far] = j
            d2[far] = 0.0
        for j in range(k):
            updated[j] = data[labels == j].mean(axis=0)

        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        logger.debug("k-means iteration %d: inertia %.6g, shift %.3g", iteration, history[-1], shift)
        if shift < tol:
            break

    _, d2 = _nearest(data, centroids)
    history.append(float(d2.sum()))
    if len(np.unique(centroids, axis=0)) < k:
        logger.warning("k-means produced coincident centroids for k=%d", k)
    logger.info("k-means k=%d converged after %d iterations, inertia %.6g", k, iteration, history[-1])

    return Codebook(
        centroids=centroids,
        mean=scaler.mean_.copy(),
        scale=scaler.scale_.copy(),
        zero_variance=tuple(bool(v == 0) for v in scaler.var_),
        inertia_history=tuple(history),
    )


def assign(cb: Codebook, descriptor: np.ndarray | Sequence[float] | BlockFeatureVector) -> int:
    """Label of the nearest centroid to a raw descriptor; ties go to the lowest index."""

    if isinstance(descriptor, BlockFeatureVector):
        descriptor = descriptor.as_array()
    labels, _ = _nearest(cb.standardize(descriptor), cb.centroids)
    return int(labels[0])


def assign_many(cb: Codebook, descriptors: np.ndarray) -> np.ndarray:
    """Vectorized :func:`assign`.

    Args:
        cb: Fitted codebook.
        descriptors: ``(rows, 6)`` raw descriptor matrix.

    Returns:
        Integer label per row.
    """

    labels, _ = _nearest(cb.standardize(descriptors), cb.centroids)
    return labels


def labelize(cb: Codebook, descriptors: Sequence[BlockFeatureVector] | np.ndarray) -> LabelVector:
    """Map the nine block descriptors of one image to its label vector."""

    rows = [d.as_array() if isinstance(d, BlockFeatureVector) else np.asarray(d, dtype=float) for d in descriptors]
    if len(rows) != N_BLOCKS:
        raise LengthError(f"expected {N_BLOCKS} block descriptors, got {len(rows)}")
    return tuple(int(v) for v in assign_many(cb, np.vstack(rows)))


def labelize_frame(cb: Codebook, features: pd.DataFrame) -> pd.DataFrame:
    """Label vectors for every image of a feature table.

    Args:
        cb: Fitted codebook.
        features: Feature table in the ``image, block, <descriptors>`` layout
            with exactly one row per ``(image, block)`` pair.

    Returns:
        pd.DataFrame: Columns ``image, f1..f9``, one row per image in the order
        images first appear in ``features``.

    Raises:
        DataError: If an ``(image, block)`` pair repeats or an image lacks a block.
    """

    repeated = features[features.duplicated(["image", "block"])]
    if not repeated.empty:
        raise DataError(f"feature rows repeat for image {repeated['image'].iloc[0]!r}")
    per_image = features.groupby("image", sort=False)["block"].nunique()
    incomplete = per_image[per_image != N_BLOCKS]
    if not incomplete.empty:
        raise LengthError(f"image {incomplete.index[0]!r} has {incomplete.iloc[0]} blocks, expected {N_BLOCKS}")

    ordered = features.sort_values(["image", "block"], kind="stable")
    labels = assign_many(cb, descriptor_matrix(ordered)).reshape(-1, N_BLOCKS)
    names = ordered["image"].to_numpy()[::N_BLOCKS]
    frame = pd.DataFrame(labels, columns=list(LABEL_COLUMNS))
    frame.insert(0, "image", names)
    order = pd.Index(features["image"].drop_duplicates())
    return frame.set_index("image").loc[order].reset_index()


def save_codebook(cb: Codebook, path: Path | str) -> Path:
    """Write ``cb`` as JSON, creating parent directories.

    Args:
        cb: Fitted codebook.
        path: Destination file.

    Returns:
        The written path.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = CodebookDocument(
        k=cb.k,
        features=list(DESCRIPTOR_NAMES),
        mean=cb.mean.tolist(),
        scale=cb.scale.tolist(),
        zero_variance=list(cb.zero_variance),
        centroids=cb.centroids.tolist(),
        inertia_history=list(cb.inertia_history),
    )
    path.write_text(doc.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def load_codebook(path: Path | str) -> Codebook:
    """Read a codebook written by :func:`save_codebook`.

    Raises:
        IoError: If the file does not exist.
        FormatError: If the document is malformed.
    """

    path = Path(path)
    if not path.exists():
        raise IoError(f"codebook not found: {path}")
    try:
        doc = CodebookDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise FormatError(f"{path} is not a valid codebook: {exc}") from exc
    centroids = np.asarray(doc.centroids, dtype=float)
    if centroids.shape != (doc.k, len(DESCRIPTOR_NAMES)):
        raise FormatError(f"{path}: centroid matrix has shape {centroids.shape}, expected ({doc.k}, 6)")
    return Codebook(
        centroids=centroids,
        mean=np.asarray(doc.mean, dtype=float),
        scale=np.asarray(doc.scale, dtype=float),
        zero_variance=tuple(doc.zero_variance),
        inertia_history=tuple(doc.inertia_history),
    )


__all__ = [
    "Codebook",
    "CodebookDocument",
    "DEFAULT_K",
    "LABEL_COLUMNS",
    "LabelVector",
    "assign",
    "assign_many",
    "kmeans_fit",
    "labelize",
    "labelize_frame",
    "load_codebook",
    "save_codebook",
]

"""First-order tangent approximations of small image transformations.

A transformation ``t(x, a)`` is applied by resampling: the output pixel at
``p`` takes the bilinearly interpolated input value at the displaced position
``A(p)``, with out-of-frame positions clamped to the nearest edge pixel.
Rotation and scaling act about the image centre. The tangent vector of a
transform is the forward finite difference ``(t(x, step) - x) / step``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg, ndimage

from src.data_loader import GrayImage
from src.errors import AlphaError, DimMismatch, NumericError, StepError

logger = logging.getLogger(__name__)

TRANSFORM_KINDS = ("translate-x", "translate-y", "rotate", "scale")

# Largest admissible finite-difference step per kind: pixels, radians, scale delta.
STEP_BOUNDS = {"translate-x": 2.0, "translate-y": 2.0, "rotate": 0.1, "scale": 0.1}

DEFAULT_STEPS = {"translate-x": 1.0, "translate-y": 1.0, "rotate": 0.02, "scale": 0.02}

# Coefficients farther than this many steps leave the first-order model's range.
ALPHA_LOCALITY = 3.0

RIDGE_FACTOR = 1e-8


@dataclass(frozen=True)
class TransformSet:
    """Ordered, duplicate-free transform kinds with one positive step each."""

    kinds: tuple[str, ...] = TRANSFORM_KINDS
    steps: tuple[float, ...] = tuple(DEFAULT_STEPS[k] for k in TRANSFORM_KINDS)

    def __post_init__(self) -> None:
        kinds = tuple(self.kinds)
        steps = tuple(float(s) for s in self.steps)
        if not kinds:
            raise StepError("a transform set needs at least one transform")
        unknown = [k for k in kinds if k not in TRANSFORM_KINDS]
        if unknown:
            raise StepError(f"unknown transforms {unknown}; choose from {', '.join(TRANSFORM_KINDS)}")
        if len(set(kinds)) != len(kinds):
            raise StepError(f"duplicate transforms in {kinds}")
        if len(steps) != len(kinds):
            raise StepError(f"{len(kinds)} transforms but {len(steps)} steps")
        for kind, step in zip(kinds, steps):
            if not 0 < step <= STEP_BOUNDS[kind]:
                raise StepError(f"step {step} for {kind} must lie in (0, {STEP_BOUNDS[kind]}]")
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "steps", steps)

    @classmethod
    def default(cls, kinds: Iterable[str] | None = None) -> "TransformSet":
        chosen = tuple(kinds) if kinds is not None else TRANSFORM_KINDS
        return cls(chosen, tuple(DEFAULT_STEPS.get(k, 1.0) for k in chosen))

    def __len__(self) -> int:
        return len(self.kinds)


@dataclass(frozen=True)
class TangentBasis:
    """``L`` tangent images of shape ``(height, width)`` stacked along axis 0."""

    vectors: np.ndarray
    steps: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        vectors = np.array(self.vectors, dtype=float)
        if vectors.ndim != 3 or vectors.shape[0] == 0:
            raise DimMismatch(f"tangent vectors must have shape (L, height, width), got {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise NumericError("tangent vectors contain NaN or infinite values")
        if self.steps is not None and len(self.steps) != vectors.shape[0]:
            raise DimMismatch(f"{vectors.shape[0]} tangent vectors but {len(self.steps)} steps")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    @property
    def image_dims(self) -> tuple[int, int]:
        return int(self.vectors.shape[2]), int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


def _as_array(image: GrayImage | np.ndarray) -> np.ndarray:
    pixels = image.pixels if isinstance(image, GrayImage) else image
    return np.asarray(pixels, dtype=float)


def transform_image(image: GrayImage | np.ndarray, kind: str, amount: float) -> np.ndarray:
    """Apply a single transform to ``image`` and return the float resampled result."""

    pixels = _as_array(image)
    height, width = pixels.shape
    rows, cols = np.mgrid[0:height, 0:width].astype(float)
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0

    if kind == "translate-x":
        src_r, src_c = rows, cols + amount
    elif kind == "translate-y":
        src_r, src_c = rows + amount, cols
    elif kind == "rotate":
        cos, sin = np.cos(amount), np.sin(amount)
        dy, dx = rows - cy, cols - cx
        src_r = cy + sin * dx + cos * dy
        src_c = cx + cos * dx - sin * dy
    elif kind == "scale":
        src_r = cy + (1.0 + amount) * (rows - cy)
        src_c = cx + (1.0 + amount) * (cols - cx)
    else:
        raise StepError(f"unknown transform {kind!r}")

    return ndimage.map_coordinates(pixels, [src_r, src_c], order=1, mode="nearest")


def tangent_basis(image: GrayImage, transforms: TransformSet) -> TangentBasis:
    """Forward-difference tangent vectors of ``image``.

    Args:
        image: Source image.
        transforms: Transform kinds and their steps.

    Returns:
        A :class:`TangentBasis` whose row ``l`` is ``(t_l(x, step_l) - x) / step_l``.
    """

    pixels = _as_array(image)
    vectors = [(transform_image(pixels, kind, step) - pixels) / step for kind, step in zip(transforms.kinds, transforms.steps)]
    return TangentBasis(np.stack(vectors), steps=transforms.steps)


def _check_dims(x: np.ndarray, mu: np.ndarray, basis: TangentBasis) -> None:
    if x.shape != mu.shape or x.shape != basis.vectors.shape[1:]:
        raise DimMismatch(f"image {x.shape}, reference {mu.shape} and basis {basis.vectors.shape[1:]} must share dimensions")


def tangent_projection(
    x: GrayImage | np.ndarray, mu: GrayImage | np.ndarray, basis: TangentBasis
) -> tuple[float, np.ndarray]:
    """Single-sided tangent distance from ``x`` to ``mu`` and the optimal coefficients.

    Solves ``min_a ||x + sum_l a_l T_l - mu||`` through the Gram system
    ``T'T a = T'(mu - x)``. A rank-deficient Gram matrix gets the ridge
    ``1e-8 * trace(T'T) / L`` on its diagonal; an all-zero basis yields ``a = 0``.
    """

    x_arr, mu_arr = _as_array(x), _as_array(mu)
    _check_dims(x_arr, mu_arr, basis)

    tangents = basis.vectors.reshape(len(basis), -1)
    diff = (mu_arr - x_arr).ravel()
    gram = tangents @ tangents.T
    rhs = tangents @ diff

    trace = float(np.trace(gram))
    if trace == 0.0:
        alpha = np.zeros(len(basis))
    else:
        if np.linalg.matrix_rank(gram) < len(basis):
            gram = gram + (RIDGE_FACTOR * trace / len(basis)) * np.eye(len(basis))
        try:
            alpha = linalg.solve(gram, rhs, assume_a="pos")
        except linalg.LinAlgError as exc:
            raise NumericError(f"tangent Gram system is singular: {exc}") from exc

    residual = x_arr.ravel() + alpha @ tangents - mu_arr.ravel()
    distance = float(np.linalg.norm(residual))
    if not np.isfinite(distance):
        raise NumericError("tangent distance is not finite")
    return distance, alpha


def tangent_distance_ss(x: GrayImage | np.ndarray, mu: GrayImage | np.ndarray, basis: TangentBasis) -> float:
    """Single-sided tangent distance; never exceeds the Euclidean distance ``||x - mu||``."""

    distance, _ = tangent_projection(x, mu, basis)
    return distance


def tangent_augment(image: GrayImage, basis: TangentBasis, alphas: Sequence[Sequence[float]]) -> list[GrayImage]:
    """Synthesize ``clamp(round(x + sum_l a_l T_l), 0, 255)`` for every coefficient vector.

    Raises:
        AlphaError: If a vector has the wrong length or, when the basis knows
            its steps, some ``|a_l|`` exceeds three steps.
    """

    pixels = _as_array(image)
    if pixels.shape != basis.vectors.shape[1:]:
        raise DimMismatch(f"image {pixels.shape} does not match basis {basis.vectors.shape[1:]}")

    outputs = []
    for alpha in alphas:
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (len(basis),):
            raise AlphaError(f"coefficient vector of length {alpha.size} for a basis of {len(basis)} tangents")
        if basis.steps is not None:
            limits = ALPHA_LOCALITY * np.asarray(basis.steps)
            if np.any(np.abs(alpha) > limits):
                raise AlphaError(f"coefficients {alpha.tolist()} exceed {ALPHA_LOCALITY} steps {list(basis.steps)}")
        moved = pixels + np.tensordot(alpha, basis.vectors, axes=1)
        outputs.append(GrayImage(np.clip(np.rint(moved), 0, 255).astype(np.uint8)))
    return outputs


def alpha_grid(transforms: TransformSet, magnitudes: Iterable[float]) -> list[np.ndarray]:
    """Coefficient vectors ``+/- m * step_l * e_l`` for every transform ``l`` and magnitude ``m``."""

    grid = []
    for m in magnitudes:
        if not 0 < m <= ALPHA_LOCALITY:
            raise AlphaError(f"augmentation magnitude {m} must lie in (0, {ALPHA_LOCALITY}]")
        for l, step in enumerate(transforms.steps):
            for sign in (1.0, -1.0):
                alpha = np.zeros(len(transforms))
                alpha[l] = sign * m * step
                grid.append(alpha)
    return grid


def augment_dataset(
    images: Sequence[GrayImage],
    labels: Sequence[int],
    transforms: TransformSet,
    magnitudes: Iterable[float],
) -> tuple[list[GrayImage], list[int]]:
    """Return every image followed by its tangent variants, labels repeated to match."""

    grid = alpha_grid(transforms, list(magnitudes))
    out_images: list[GrayImage] = []
    out_labels: list[int] = []
    for image, label in zip(images, labels):
        variants = tangent_augment(image, tangent_basis(image, transforms), grid)
        out_images.append(image)
        out_images.extend(variants)
        out_labels.extend([int(label)] * (1 + len(variants)))
    logger.info("Augmented %d images to %d with %d variants each", len(images), len(out_images), len(grid))
    return out_images, out_labels


__all__ = [
    "DEFAULT_STEPS",
    "STEP_BOUNDS",
    "TRANSFORM_KINDS",
    "TangentBasis",
    "TransformSet",
    "alpha_grid",
    "augment_dataset",
    "tangent_augment",
    "tangent_basis",
    "tangent_distance_ss",
    "tangent_projection",
    "transform_image",
]

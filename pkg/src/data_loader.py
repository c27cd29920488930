"""Utilities for loading and persisting grayscale face images and datasets.

Images are read from PGM files (binary ``P5`` or ASCII ``P2``, 8-bit only).
A dataset is described by a manifest text file with one image per line::

    # comment lines are allowed
    s1/1.pgm 0
    s1/2.pgm 0
    s2/1.pgm 1

Paths are relative to a dataset root, which defaults to the manifest's own
directory. All images of one dataset must share dimensions; nothing is
resampled.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from src.errors import DataError, DimMismatch, FormatError, IoError, RangeError, SplitError, TooSmall

logger = logging.getLogger(__name__)

MAXVAL = 255
# 3x3 grid whose blocks each hold at least 2x2 pixels
MIN_SIDE = 6

_HEADER_TOKEN = re.compile(rb"#[^\n\r]*|\S+")
_CLASSES_HEADER = re.compile(r"^\s*#\s*classes:\s*(\d+)\s*$")


@dataclass(frozen=True)
class GrayImage:
    """Rectangular grid of 8-bit intensities, stored row-major as ``(height, width)``."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2:
            raise DimMismatch(f"GrayImage needs a 2-D pixel array, got shape {pixels.shape}")
        if pixels.size == 0:
            raise DimMismatch("GrayImage needs at least one pixel")
        if pixels.size and (pixels.min() < 0 or pixels.max() > MAXVAL):
            raise RangeError(f"pixel intensities must lie in [0, {MAXVAL}]")
        frozen = pixels.astype(np.uint8, copy=True)
        frozen.setflags(write=False)
        object.__setattr__(self, "pixels", frozen)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def dims(self) -> tuple[int, int]:
        """``(width, height)`` in pixels."""

        return self.width, self.height

    @classmethod
    def from_values(cls, width: int, height: int, values: Sequence[int]) -> "GrayImage":
        """Build an image from a flat row-major list of intensities."""

        if len(values) != width * height:
            raise DimMismatch(f"expected {width * height} intensities for {width}x{height}, got {len(values)}")
        return cls(np.asarray(values, dtype=np.int64).reshape(height, width))


@dataclass(frozen=True)
class DatasetManifest:
    """Labelled image list with a fixed class count and shared image dimensions."""

    entries: tuple[tuple[str, int], ...]
    class_count: int
    image_dims: tuple[int, int] | None = None
    root: Path = field(default=Path("."), compare=False)

    def __post_init__(self) -> None:
        if self.class_count < 1:
            raise RangeError(f"class_count must be positive, got {self.class_count}")
        for path, class_id in self.entries:
            if not 0 <= class_id < self.class_count:
                raise RangeError(f"class id {class_id} for '{path}' outside [0, {self.class_count})")
        seen: set[str] = set()
        for path, _ in self.entries:
            if str(path) in seen:
                raise DataError(f"image '{path}' is listed more than once")
            seen.add(str(path))
        object.__setattr__(self, "entries", tuple((str(p), int(c)) for p, c in self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> np.ndarray:
        return np.array([class_id for _, class_id in self.entries], dtype=np.int64)

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def require_all_classes(self) -> None:
        """Raise if some class has no entry."""

        missing = [c for c, n in enumerate(self.class_sizes()) if n == 0]
        if missing:
            raise RangeError(f"classes without any image: {missing}")

    def resolve(self, relative: str) -> Path:
        return self.root / relative


@dataclass(frozen=True)
class SplitSpec:
    """Fraction of every class that goes to training, and the shuffle seed."""

    train_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.train_fraction <= 1:
            raise RangeError(f"train_fraction must lie in (0, 1], got {self.train_fraction}")
        if self.seed < 0:
            raise RangeError(f"seed must be unsigned, got {self.seed}")


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Return the first ``count`` non-comment tokens and the offset just past the last one."""

    tokens: list[bytes] = []
    pos = 0
    for match in _HEADER_TOKEN.finditer(data):
        token = match.group(0)
        if token.startswith(b"#"):
            continue
        tokens.append(token)
        pos = match.end()
        if len(tokens) == count:
            break
    if len(tokens) < count:
        raise FormatError("truncated PGM header")
    return tokens, pos


def decode_pgm(data: bytes) -> GrayImage:
    """Decode PGM bytes (``P5`` or ``P2``, maxval 255) into a :class:`GrayImage`."""

    if not data.startswith((b"P5", b"P2")):
        raise FormatError("not a PGM file (expected magic 'P5' or 'P2')")
    tokens, pos = _header_tokens(data, 4)
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"non-numeric PGM header field in {tokens[1:]}") from exc
    if width < 1 or height < 1:
        raise FormatError(f"invalid PGM dimensions {width}x{height}")
    if maxval != MAXVAL:
        raise FormatError(f"only maxval {MAXVAL} is supported, got {maxval}")

    expected = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        payload = data[pos + 1 : pos + 1 + expected]
        if len(payload) < expected:
            raise FormatError(f"truncated P5 payload: {len(payload)} of {expected} bytes")
        values = np.frombuffer(payload, dtype=np.uint8)
    else:
        body = re.sub(rb"#[^\n\r]*", b" ", data[pos:])
        try:
            values = np.array([int(t) for t in body.split()], dtype=np.int64)
        except ValueError as exc:
            raise FormatError("non-numeric sample in P2 payload") from exc
        if values.size < expected:
            raise FormatError(f"truncated P2 payload: {values.size} of {expected} samples")
        values = values[:expected]
        if values.min(initial=0) < 0 or values.max(initial=0) > MAXVAL:
            raise FormatError(f"P2 sample outside [0, {MAXVAL}]")
    return GrayImage(values.reshape(height, width))


def encode_pgm(image: GrayImage, binary: bool = True) -> bytes:
    """Encode an image as ``P5`` (default) or ``P2`` bytes."""

    header = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n{MAXVAL}\n".encode("ascii")
    if binary:
        return header + image.pixels.tobytes()
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in image.pixels)
    return header + rows.encode("ascii") + b"\n"


def load_image(path: Path | str) -> GrayImage:
    """Load a grayscale image from a PGM file.

    Raises:
        IoError: If the file is missing or unreadable.
        FormatError: If the file is not an 8-bit P2/P5 PGM or is truncated.
    """

    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read image {path}: {exc.strerror or exc}") from exc
    try:
        return decode_pgm(data)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_image(image: GrayImage, path: Path | str, binary: bool = True) -> Path:
    """Write ``image`` to ``path`` as PGM, creating parent directories."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pgm(image, binary=binary))
    return path


def parse_manifest(lines: Iterable[str], class_count: int | None = None, root: Path = Path(".")) -> DatasetManifest:
    """Parse ``<relative-path> <class-id>`` lines into a manifest.

    When ``class_count`` is not given it comes from a ``# classes: N`` header
    line if there is one, otherwise it is the largest id plus one.
    """

    entries: list[tuple[str, int]] = []
    declared: int | None = None
    for number, raw in enumerate(lines, start=1):
        header = _CLASSES_HEADER.match(raw)
        if header:
            declared = int(header.group(1))
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.rsplit(None, 1)
        if len(parts) != 2:
            raise FormatError(f"manifest line {number}: expected '<path> <class-id>', got {raw.strip()!r}")
        try:
            class_id = int(parts[1])
        except ValueError as exc:
            raise FormatError(f"manifest line {number}: class id {parts[1]!r} is not an integer") from exc
        if class_id < 0:
            raise RangeError(f"manifest line {number}: negative class id {class_id}")
        entries.append((parts[0], class_id))
    if class_count is None:
        class_count = declared
    if class_count is None:
        class_count = max((c for _, c in entries), default=-1) + 1
    if class_count < 1:
        raise FormatError("manifest contains no entries")
    return DatasetManifest(entries=tuple(entries), class_count=class_count, root=root)


def read_manifest(path: Path | str, root: Path | str | None = None, class_count: int | None = None) -> DatasetManifest:
    """Read a manifest file and check it against the images it names.

    Every class must have at least one image, every image must exist and all
    images must share dimensions.
    """

    path = Path(path)
    if not path.exists():
        raise IoError(f"manifest not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    base = Path(root) if root is not None else path.parent
    manifest = parse_manifest(text.splitlines(), class_count=class_count, root=base)
    manifest.require_all_classes()
    return validate_manifest(manifest)


def validate_manifest(manifest: DatasetManifest) -> DatasetManifest:
    """Return ``manifest`` with ``image_dims`` filled in after decoding every image."""

    dims: tuple[int, int] | None = manifest.image_dims
    for relative, _ in manifest.entries:
        image = load_image(manifest.resolve(relative))
        if dims is None:
            dims = image.dims
            if min(dims) < MIN_SIDE:
                raise TooSmall(f"{relative} is {dims[0]}x{dims[1]}; dataset images need at least {MIN_SIDE}x{MIN_SIDE}")
        elif image.dims != dims:
            raise DimMismatch(f"{relative} is {image.dims[0]}x{image.dims[1]}, dataset images are {dims[0]}x{dims[1]}")
    logger.info("Validated manifest: %d images, %d classes, dims %s", len(manifest), manifest.class_count, dims)
    return DatasetManifest(manifest.entries, manifest.class_count, dims, manifest.root)


def write_manifest(manifest: DatasetManifest, path: Path | str) -> Path:
    """Persist ``manifest`` in the ``<relative-path> <class-id>`` format."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# classes: {manifest.class_count}"]
    lines.extend(f"{relative} {class_id}" for relative, class_id in manifest.entries)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_images(manifest: DatasetManifest) -> list[GrayImage]:
    """Decode every image of ``manifest`` in entry order."""

    images = [load_image(manifest.resolve(relative)) for relative, _ in manifest.entries]
    for (relative, _), image in zip(manifest.entries, images):
        if manifest.image_dims is not None and image.dims != manifest.image_dims:
            raise DimMismatch(f"{relative} is {image.dims}, expected {manifest.image_dims}")
    return images


def split_dataset(manifest: DatasetManifest, spec: SplitSpec) -> tuple[DatasetManifest, DatasetManifest]:
    """Split ``manifest`` into stratified train and test manifests.

    Each class is shuffled with its own generator keyed by ``(seed, class_id)``
    so adding a class leaves the other classes' splits untouched. The first
    ``floor(train_fraction * n_c)`` shuffled images of class ``c`` go to
    training. Both outputs keep the input's entry order.

    Raises:
        SplitError: If a class would receive no training image.
    """

    fraction = Fraction(str(spec.train_fraction))
    labels = manifest.labels
    train_idx: list[int] = []
    for class_id in range(manifest.class_count):
        members = np.flatnonzero(labels == class_id)
        if members.size == 0:
            continue
        n_train = int(fraction * members.size)
        if n_train == 0:
            raise SplitError(
                f"class {class_id} has {members.size} images; fraction {spec.train_fraction} leaves none for training"
            )
        rng = np.random.default_rng([spec.seed, class_id])
        train_idx.extend(rng.permutation(members)[:n_train].tolist())

    chosen = set(train_idx)
    train = [entry for i, entry in enumerate(manifest.entries) if i in chosen]
    test = [entry for i, entry in enumerate(manifest.entries) if i not in chosen]
    logger.info("Split %d images into %d train / %d test (seed %d)", len(manifest), len(train), len(test), spec.seed)
    return (
        DatasetManifest(tuple(train), manifest.class_count, manifest.image_dims, manifest.root),
        DatasetManifest(tuple(test), manifest.class_count, manifest.image_dims, manifest.root),
    )


__all__ = [
    "DatasetManifest",
    "GrayImage",
    "SplitSpec",
    "decode_pgm",
    "encode_pgm",
    "load_image",
    "load_images",
    "parse_manifest",
    "read_manifest",
    "save_image",
    "split_dataset",
    "validate_manifest",
    "write_manifest",
]

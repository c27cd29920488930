from __future__ import annotations

from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from src.data_loader import (
    DatasetManifest,
    GrayImage,
    SplitSpec,
    decode_pgm,
    encode_pgm,
    load_image,
    load_images,
    parse_manifest,
    read_manifest,
    save_image,
    split_dataset,
    write_manifest,
)
from src.errors import DataError, DimMismatch, FormatError, IoError, RangeError, SplitError, TooSmall


def _manifest(per_class: int, class_count: int = 5) -> DatasetManifest:
    entries = tuple((f"s{c + 1}/{i + 1}.pgm", c) for c in range(class_count) for i in range(per_class))
    return DatasetManifest(entries, class_count)


def test_decode_ascii_pgm() -> None:
    image = decode_pgm(b"P2\n2 2\n255\n0 10 20 255\n")
    assert image.dims == (2, 2)
    assert image.pixels.tolist() == [[0, 10], [20, 255]]


def test_decode_header_comments() -> None:
    image = decode_pgm(b"P2\n# made by hand\n3 1\n# max\n255\n1 2 3\n")
    assert image.pixels.tolist() == [[1, 2, 3]]


def test_truncated_binary_payload() -> None:
    with pytest.raises(FormatError):
        decode_pgm(b"P5\n3 3\n255\n" + bytes(4))


def test_rejects_other_formats() -> None:
    with pytest.raises(FormatError):
        decode_pgm(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(FormatError):
        decode_pgm(b"P5\n1 1\n65535\n\x00\x00")


def test_binary_file_on_disk(tmp_path: Path) -> None:
    pixels = np.arange(48, dtype=np.uint8).reshape(6, 8) * 5
    path = save_image(GrayImage(pixels), tmp_path / "a" / "face.pgm")
    loaded = load_image(path)
    assert loaded.dims == (8, 6)
    np.testing.assert_array_equal(loaded.pixels, pixels)
    assert encode_pgm(loaded).startswith(b"P5\n8 6\n255\n")


def test_missing_image(tmp_path: Path) -> None:
    with pytest.raises(IoError):
        load_image(tmp_path / "nope.pgm")


def test_gray_image_is_read_only() -> None:
    image = GrayImage.from_values(2, 1, [3, 4])
    with pytest.raises(ValueError):
        image.pixels[0, 0] = 9
    with pytest.raises(RangeError):
        GrayImage(np.array([[0, 256]]))
    with pytest.raises(DimMismatch):
        GrayImage.from_values(2, 2, [1, 2, 3])


def test_parse_manifest_infers_class_count() -> None:
    manifest = parse_manifest(["# header", "s1/1.pgm 0", "", "s3/1.pgm 2  # trailing"])
    assert manifest.class_count == 3
    assert manifest.entries == (("s1/1.pgm", 0), ("s3/1.pgm", 2))
    with pytest.raises(FormatError):
        parse_manifest(["just-a-path"])


def test_read_manifest_checks_images(tmp_path: Path) -> None:
    for c in range(2):
        save_image(GrayImage(np.full((8, 8), 10 * c)), tmp_path / f"s{c + 1}/1.pgm")
    (tmp_path / "manifest.txt").write_text("s1/1.pgm 0\ns2/1.pgm 1\n")
    manifest = read_manifest(tmp_path / "manifest.txt")
    assert manifest.image_dims == (8, 8)
    assert [image.dims for image in load_images(manifest)] == [(8, 8), (8, 8)]

    save_image(GrayImage(np.zeros((9, 8))), tmp_path / "s2/1.pgm")
    with pytest.raises(DimMismatch):
        read_manifest(tmp_path / "manifest.txt")


def test_read_manifest_rejects_small_images(tmp_path: Path) -> None:
    save_image(GrayImage(np.zeros((4, 4))), tmp_path / "tiny.pgm")
    (tmp_path / "manifest.txt").write_text("tiny.pgm 0\n")
    with pytest.raises(TooSmall):
        read_manifest(tmp_path / "manifest.txt")


def test_read_manifest_missing(tmp_path: Path) -> None:
    with pytest.raises(IoError):
        read_manifest(tmp_path / "absent.txt")


def test_write_manifest_keeps_class_count(tmp_path: Path) -> None:
    manifest = DatasetManifest((("a.pgm", 0),), class_count=4)
    path = write_manifest(manifest, tmp_path / "m.txt")
    assert path.read_text().splitlines()[0] == "# classes: 4"
    assert parse_manifest(path.read_text().splitlines()).class_count == 4


def test_manifest_rejects_repeated_paths() -> None:
    with pytest.raises(DataError):
        parse_manifest(["s1/1.pgm 0", "s2/1.pgm 1", "s1/1.pgm 0"])
    with pytest.raises(DataError):
        DatasetManifest((("a.pgm", 0), ("a.pgm", 1)), class_count=2)


def test_split_halves_each_class() -> None:
    train, test = split_dataset(_manifest(10), SplitSpec(0.5, seed=0))
    assert Counter(c for _, c in train.entries) == {c: 5 for c in range(5)}
    assert Counter(c for _, c in test.entries) == {c: 5 for c in range(5)}
    assert set(train.entries).isdisjoint(test.entries)


def test_split_full_fraction_is_identity() -> None:
    manifest = _manifest(10)
    train, test = split_dataset(manifest, SplitSpec(1.0, seed=3))
    assert train.entries == manifest.entries
    assert len(test) == 0


def test_split_seed_changes_membership_only() -> None:
    manifest = _manifest(10)
    first, _ = split_dataset(manifest, SplitSpec(0.5, seed=0))
    second, _ = split_dataset(manifest, SplitSpec(0.5, seed=1))
    assert set(first.entries) != set(second.entries)
    assert Counter(c for _, c in first.entries) == Counter(c for _, c in second.entries)
    again, _ = split_dataset(manifest, SplitSpec(0.5, seed=0))
    assert again.entries == first.entries


def test_split_needs_a_training_image_per_class() -> None:
    with pytest.raises(SplitError):
        split_dataset(_manifest(5), SplitSpec(0.1, seed=0))
    with pytest.raises(RangeError):
        SplitSpec(0.0)

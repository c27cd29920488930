from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from src.synthetic import write_synthetic_dataset


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def synthetic_manifest(tmp_path: Path) -> Path:
    """Five separable classes of ten identical 24x24 images each."""

    return write_synthetic_dataset(tmp_path / "faces", class_count=5, per_class=10, size=24)

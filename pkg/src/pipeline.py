"""End-to-end pipeline: ingest, augment, describe, quantize, train, evaluate.

Every stage persists its output under the run's output directory, so any
stage can be re-run from the CLI on the intermediates of a previous run:

- ``train_manifest.txt`` / ``test_manifest.txt``
- ``features_train.csv`` / ``features_test.csv``
- ``codebook.json``
- ``labels_train.csv`` / ``labels_test.csv``
- ``model_<kind>.json``
- ``tables.txt`` (class prior and per-value attribute probabilities)
- ``report.json``, ``report.txt``, ``timings.json``, ``config.echo``
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import pandas as pd

from src.bayesnet import AttributeSpace, count_arrays
from src.classifiers import ALL_KINDS, ClassifierKind, TrainedClassifier, save_classifier, train_arrays
from src.data_loader import DatasetManifest, GrayImage, SplitSpec, load_images, read_manifest, split_dataset, write_manifest
from src.errors import BnFacesError, FormatError, IoError, PipelineError
from src.features import GlcmConfig, N_BLOCKS, describe_dataset, descriptor_matrix, write_features
from src.metrics import EvaluationReport, evaluate, write_parameter_tables, write_reports
from src.quantizer import LABEL_COLUMNS, Codebook, kmeans_fit, labelize_frame, save_codebook
from src.settings import PipelineConfig, write_config_echo
from src.tangent import augment_dataset

logger = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    reports: list[EvaluationReport]
    artifacts: dict[str, Path] = field(default_factory=dict)


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Annotate the first library error raised inside the block with ``name``."""

    logger.info("Stage: %s", name)
    try:
        yield
    except PipelineError:
        raise
    except BnFacesError as exc:
        raise PipelineError(name, exc) from exc


def augment_images(
    images: Sequence[GrayImage], manifest: DatasetManifest, config: PipelineConfig
) -> tuple[list[GrayImage], list[str], list[int]]:
    """Images, names and classes after optional tangent augmentation."""

    names = [relative for relative, _ in manifest.entries]
    classes = manifest.labels.tolist()
    if not config.tangent_enabled:
        return list(images), names, classes
    augmented, labels = augment_dataset(images, classes, config.transform_set(), config.augment_grid)
    per_image = len(augmented) // max(len(images), 1)
    expanded = [name if j == 0 else f"{name}#aug{j}" for name in names for j in range(per_image)]
    return augmented, expanded, labels


def labels_table(cb: Codebook, features: pd.DataFrame, classes: dict[str, int]) -> pd.DataFrame:
    """Label vectors with a ``class`` column, in feature-table order."""

    frame = labelize_frame(cb, features)
    frame.insert(1, "class", [classes[name] for name in frame["image"]])
    return frame


def write_labels(frame: pd.DataFrame, path: Path | str) -> Path:
    """Persist a labels table as CSV.

    Args:
        frame: Table from :func:`labels_table`.
        path: Destination file; parent directories are created.

    Returns:
        The written path.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def read_labels(path: Path | str) -> tuple[list[str], np.ndarray, np.ndarray]:
    """``(names, labels, classes)`` from a labels CSV."""

    path = Path(path)
    if not path.exists():
        raise IoError(f"labels file not found: {path}")
    frame = pd.read_csv(path, dtype={"image": str})
    missing = {"image", "class", *LABEL_COLUMNS} - set(frame.columns)
    if missing:
        raise FormatError(f"{path} is missing columns: {', '.join(sorted(missing))}")
    labels = frame[list(LABEL_COLUMNS)].to_numpy(dtype=np.int64)
    return frame["image"].tolist(), labels, frame["class"].to_numpy(dtype=np.int64)


def selected_kinds(config: PipelineConfig) -> tuple[ClassifierKind, ...]:
    """Every kind for ``kind=all``, otherwise just the configured one."""

    return ALL_KINDS if config.kind == "all" else (ClassifierKind(config.kind),)


def train_kinds(
    kinds: Sequence[ClassifierKind],
    labels: np.ndarray,
    classes: np.ndarray,
    space: AttributeSpace,
    threshold: str,
    structure_source: int | None = None,
    *,
    seed: int | None = None,
    kmeans_seed: int | None = None,
) -> list[TrainedClassifier]:
    """Train every kind in order; ``structure_source`` only reaches the global tree and forest variants."""

    trained = []
    for kind in kinds:
        source = None if kind.is_multinet or kind is ClassifierKind.NB else structure_source
        trained.append(
            train_arrays(kind, labels, classes, space, threshold, source, seed=seed, kmeans_seed=kmeans_seed)
        )
    return trained


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run every stage in order and persist the intermediates and reports.

    Raises:
        PipelineError: Wrapping the first failing stage's error.
    """

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {"config_echo": write_config_echo(config, out / "config.echo")}

    with stage("ingest"):
        manifest = read_manifest(config.manifest, root=config.root)
        train_manifest, test_manifest = split_dataset(manifest, SplitSpec(config.train_fraction, config.seed))
        artifacts["train_manifest"] = write_manifest(train_manifest, out / "train_manifest.txt")
        artifacts["test_manifest"] = write_manifest(test_manifest, out / "test_manifest.txt")

    with stage("augment"):
        train_images, train_names, train_classes = augment_images(load_images(train_manifest), train_manifest, config)
        test_images = load_images(test_manifest)
        test_names = [relative for relative, _ in test_manifest.entries]
        test_classes = test_manifest.labels.tolist()
        if config.augment_test:
            test_images, test_names, test_classes = augment_images(test_images, test_manifest, config)

    glcm_cfg = GlcmConfig(config.glcm_levels, tuple(config.glcm_offset))
    with stage("features"):
        train_features = describe_dataset(train_images, train_names, glcm_cfg)
        test_features = describe_dataset(test_images, test_names, glcm_cfg)
        artifacts["features_train"] = write_features(train_features, out / "features_train.csv")
        artifacts["features_test"] = write_features(test_features, out / "features_test.csv")

    with stage("codebook"):
        codebook = kmeans_fit(
            descriptor_matrix(train_features),
            k=config.k,
            seed=config.kmeans_seed,
            max_iter=config.kmeans_max_iter,
            tol=config.kmeans_tol,
        )
        artifacts["codebook"] = save_codebook(codebook, out / "codebook.json")
        train_table = labels_table(codebook, train_features, dict(zip(train_names, train_classes)))
        artifacts["labels_train"] = write_labels(train_table, out / "labels_train.csv")
        if len(test_names):
            test_table = labels_table(codebook, test_features, dict(zip(test_names, test_classes)))
        else:
            test_table = pd.DataFrame(columns=["image", "class", *LABEL_COLUMNS])
        artifacts["labels_test"] = write_labels(test_table, out / "labels_test.csv")

    space = AttributeSpace.uniform(N_BLOCKS, config.k, manifest.class_count)
    train_set = (train_table[list(LABEL_COLUMNS)].to_numpy(dtype=np.int64), train_table["class"].to_numpy(dtype=np.int64))
    test_set = (test_table[list(LABEL_COLUMNS)].to_numpy(dtype=np.int64), test_table["class"].to_numpy(dtype=np.int64))

    with stage("train"):
        classifiers = train_kinds(
            selected_kinds(config),
            *train_set,
            space,
            config.threshold,
            config.structure_source,
            seed=config.seed,
            kmeans_seed=config.kmeans_seed,
        )
        for clf in classifiers:
            artifacts[f"model_{clf.kind.value}"] = save_classifier(clf, out / f"model_{clf.kind.value}.json")
        counts = count_arrays(*train_set, space.cardinalities, space.class_count)
        artifacts["tables"] = write_parameter_tables(counts, out)

    with stage("evaluate"):
        reports = [evaluate(clf, train_set, test_set, k=config.k) for clf in classifiers]
        artifacts.update(write_reports(reports, out))

    logger.info("Pipeline finished: %s", ", ".join(f"{r.kind.value}={r.test_pcc:.2f}" for r in reports))
    return PipelineResult(reports, artifacts)


__all__ = [
    "PipelineResult",
    "augment_images",
    "labels_table",
    "read_labels",
    "run_pipeline",
    "selected_kinds",
    "stage",
    "train_kinds",
    "write_labels",
]

"""Training and application of the five Bayesian-network classifier variants.

- ``nb``: naive Bayes, no attribute arcs.
- ``gtan``: one tree-augmented structure learned on all training data.
- ``gfan``: the global tree pruned to a forest by a CMI threshold.
- ``tan``: a multinet holding one tree per class, each learned on that class only.
- ``fan``: a multinet holding one pruned forest per class.

Parameters are always Laplace estimates. The class prior is estimated on all
training instances and shared by every variant.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from src.bayesnet import (
    AttributeSpace,
    BnModel,
    CountTables,
    MultiNetModel,
    Structure,
    ThresholdMode,
    as_arrays,
    check_labels,
    chow_liu_tan,
    class_mutual_information,
    cmi_matrix,
    count_arrays,
    fan_structure,
    laplace_class_prior,
    laplace_cond,
    log_scores,
    map_decision,
    normalize_log_scores,
)
from src.errors import ConfigError, DataError, FormatError, IoError, RangeError

logger = logging.getLogger(__name__)


class ClassifierKind(str, enum.Enum):
    NB = "nb"
    GTAN = "gtan"
    GFAN = "gfan"
    TAN = "tan"
    FAN = "fan"

    @property
    def is_multinet(self) -> bool:
        return self in (ClassifierKind.TAN, ClassifierKind.FAN)

    @property
    def uses_threshold(self) -> bool:
        return self in (ClassifierKind.GFAN, ClassifierKind.FAN)

    @property
    def title(self) -> str:
        return {
            "nb": "Naive Bayes",
            "gtan": "GTAN",
            "gfan": "GFAN",
            "tan": "TAN per class",
            "fan": "FAN per class",
        }[self.value]


ALL_KINDS = tuple(ClassifierKind)


def parse_threshold(value: str | float) -> ThresholdMode:
    """``"avg"``/``"average"`` for the mean pairwise CMI, otherwise a number (``inf`` allowed)."""

    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("avg", "average"):
            return "average"
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigError(f"threshold must be 'avg' or a number, got {value!r}") from exc
    return float(value)


def format_threshold(threshold: ThresholdMode | None) -> str | None:
    """Inverse of :func:`parse_threshold`; ``None`` for kinds without a threshold."""

    if threshold is None:
        return None
    return "avg" if threshold == "average" else repr(float(threshold))


@dataclass(frozen=True)
class TrainingInfo:
    """Provenance of a trained classifier.

    ``seed`` is the train/test split seed and ``kmeans_seed`` the codebook
    seed of the run that produced the label vectors, when known.
    """

    instances: int
    class_counts: tuple[int, ...]
    structure_source: int | None = None
    seed: int | None = None
    kmeans_seed: int | None = None
    seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class TrainedClassifier:
    kind: ClassifierKind
    model: Union[BnModel, MultiNetModel]
    threshold: ThresholdMode | None = None
    info: TrainingInfo | None = None

    @property
    def space(self) -> AttributeSpace:
        return self.model.space

    @property
    def structures(self) -> tuple[Structure, ...]:
        if isinstance(self.model, MultiNetModel):
            return self.model.structures
        return (self.model.structure,)


def _learn_structure(
    kind: ClassifierKind,
    counts: CountTables,
    root_scores: np.ndarray,
    threshold: ThresholdMode,
    within_class: int | None,
) -> Structure:
    n = len(counts.cardinalities)
    if kind is ClassifierKind.NB or (n < 2 and not kind.uses_threshold):
        return Structure.naive(n)
    cmi = cmi_matrix(counts, within_class=within_class)
    if kind in (ClassifierKind.GTAN, ClassifierKind.TAN):
        return chow_liu_tan(cmi, root_scores)
    return fan_structure(cmi, root_scores, threshold)


def train_arrays(
    kind: ClassifierKind | str,
    labels: np.ndarray,
    classes: np.ndarray,
    space: AttributeSpace,
    threshold: ThresholdMode | str = "average",
    structure_source: int | None = None,
    *,
    seed: int | None = None,
    kmeans_seed: int | None = None,
) -> TrainedClassifier:
    """Train ``kind`` on a label matrix and class vector.

    Args:
        kind: Classifier variant.
        labels: ``(N, n)`` label vectors.
        classes: ``N`` class ids.
        space: Attribute cardinalities and class count.
        threshold: FAN threshold, ``"average"``/``"avg"`` or a number; ignored
            by the tree and naive variants.
        structure_source: Global variants only: learn the single shared
            structure from that class's instances instead of the pooled data.
        seed: Split seed recorded in the training metadata.
        kmeans_seed: Codebook seed recorded in the training metadata.

    Returns:
        TrainedClassifier: Model, threshold and training metadata.

    Raises:
        DataError: If a class has no training instance.
        ConfigError: If ``structure_source`` is given for a multinet variant.
    """

    started = time.perf_counter()
    kind = ClassifierKind(kind)
    threshold = parse_threshold(threshold) if kind.uses_threshold else None
    counts = count_arrays(labels, classes, space.cardinalities, space.class_count)
    empty = [c for c, n in enumerate(counts.class_counts) if n == 0]
    if empty:
        raise DataError(f"classes without training instances: {empty}")
    if structure_source is not None:
        if kind.is_multinet:
            raise ConfigError(f"structure_source applies to global structures, not '{kind.value}'")
        if not 0 <= structure_source < space.class_count:
            raise RangeError(f"structure_source {structure_source} outside [0, {space.class_count})")

    prior = laplace_class_prior(counts, space)
    root_scores = class_mutual_information(counts)

    model: Union[BnModel, MultiNetModel]
    if kind.is_multinet:
        structures = tuple(
            _learn_structure(kind, counts, root_scores, threshold, within_class=c) for c in range(space.class_count)
        )
        cpts = tuple(
            tuple(table[..., c] for table in laplace_cond(counts, space, structure))
            for c, structure in enumerate(structures)
        )
        model = MultiNetModel(space, prior, structures, cpts)
    else:
        structure = _learn_structure(kind, counts, root_scores, threshold, within_class=structure_source)
        model = BnModel(space, structure, prior, laplace_cond(counts, space, structure))

    seconds = time.perf_counter() - started
    arcs = sum(len(s.arcs) for s in (model.structures if isinstance(model, MultiNetModel) else (model.structure,)))
    logger.info("Trained %s on %d instances: %d attribute arcs in %.3fs", kind.value, counts.total, arcs, seconds)
    info = TrainingInfo(
        counts.total, tuple(int(n) for n in counts.class_counts), structure_source, seed, kmeans_seed, seconds
    )
    return TrainedClassifier(kind, model, threshold, info)


def train(
    kind: ClassifierKind | str,
    data: Sequence[tuple[Sequence[int], int]],
    space: AttributeSpace,
    threshold: ThresholdMode | str = "average",
    structure_source: int | None = None,
) -> TrainedClassifier:
    """Train ``kind`` on ``(label_vector, class)`` pairs."""

    labels, classes = as_arrays(data, space.n)
    return train_arrays(kind, labels, classes, space, threshold, structure_source)


def class_scores(clf: TrainedClassifier, a: Sequence[int]) -> np.ndarray:
    """Unnormalized log score of every class for one label vector."""

    if isinstance(clf.model, BnModel):
        return log_scores(clf.model, a)
    model = clf.model
    a = np.asarray(a, dtype=np.int64)
    check_labels(a, model.space.cardinalities)
    scores = np.log(model.class_prior).copy()
    for c, (structure, tables) in enumerate(zip(model.structures, model.cpts)):
        for attr, (cpt, parent) in enumerate(zip(tables, structure.parents)):
            scores[c] += np.log(cpt[a[attr]] if parent is None else cpt[a[attr], a[parent]])
    return scores


def classify(clf: TrainedClassifier, a: Sequence[int]) -> tuple[int, np.ndarray]:
    """MAP class and normalized posterior for one label vector.

    Args:
        clf: Trained classifier.
        a: Label vector, one value per attribute.

    Returns:
        ``(class, posterior)``; ties go to the lowest class index.
    """

    post = normalize_log_scores(class_scores(clf, a))
    return map_decision(post), post


def predict_batch(clf: TrainedClassifier, instances: Sequence[Sequence[int]]) -> list[tuple[int, np.ndarray]]:
    """Classify several label vectors in order.

    Args:
        clf: Trained classifier.
        instances: Label vectors, possibly empty.

    Returns:
        One ``(class, posterior)`` pair per instance, identical to calling
        :func:`classify` on each.
    """

    return [classify(clf, a) for a in instances]


class TrainingDocument(BaseModel):
    instances: int
    class_counts: list[int]
    structure_source: int | None = None
    seed: int | None = None
    kmeans_seed: int | None = None


class ClassifierDocument(BaseModel):
    """On-disk form of a :class:`TrainedClassifier`."""

    format_version: Literal[1] = 1
    kind: ClassifierKind
    threshold: str | None = None
    cardinalities: list[int]
    class_count: int
    class_prior: list[float]
    structures: list[list[int | None]]
    cpts: list[list[list]]
    training: TrainingDocument | None = None


def save_classifier(clf: TrainedClassifier, path: Path | str) -> Path:
    """Write ``clf`` as versioned JSON; floats keep their exact ``repr``."""

    model = clf.model
    if isinstance(model, MultiNetModel):
        cpts = [[table.tolist() for table in tables] for tables in model.cpts]
    else:
        cpts = [[table.tolist() for table in model.cpts]]
    training = None
    if clf.info is not None:
        training = TrainingDocument(
            instances=clf.info.instances,
            class_counts=list(clf.info.class_counts),
            structure_source=clf.info.structure_source,
            seed=clf.info.seed,
            kmeans_seed=clf.info.kmeans_seed,
        )
    doc = ClassifierDocument(
        kind=clf.kind,
        threshold=format_threshold(clf.threshold),
        cardinalities=list(clf.space.cardinalities),
        class_count=clf.space.class_count,
        class_prior=model.class_prior.tolist(),
        structures=[list(s.parents) for s in clf.structures],
        cpts=cpts,
        training=training,
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(doc.model_dump_json(indent=1) + "\n", encoding="utf-8")
    return path


def load_classifier(path: Path | str) -> TrainedClassifier:
    """Read a model file written by :func:`save_classifier`.

    Args:
        path: JSON model file.

    Returns:
        The classifier, with its training metadata when the file carries it.

    Raises:
        IoError: If the file does not exist.
        FormatError: If the document is malformed or its tables disagree.
    """

    path = Path(path)
    if not path.exists():
        raise IoError(f"model file not found: {path}")
    try:
        doc = ClassifierDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise FormatError(f"{path} is not a valid model file: {exc}") from exc

    space = AttributeSpace(tuple(doc.cardinalities), doc.class_count)
    prior = np.asarray(doc.class_prior, dtype=float)
    structures = tuple(Structure(tuple(p)) for p in doc.structures)
    tables = [tuple(np.asarray(t, dtype=float) for t in group) for group in doc.cpts]
    try:
        if doc.kind.is_multinet:
            model: Union[BnModel, MultiNetModel] = MultiNetModel(space, prior, structures, tuple(tables))
        else:
            model = BnModel(space, structures[0], prior, tables[0])
    except (DataError, IndexError) as exc:
        raise FormatError(f"{path}: inconsistent model: {exc}") from exc
    threshold = parse_threshold(doc.threshold) if doc.threshold is not None else None
    info = None
    if doc.training is not None:
        training = doc.training
        info = TrainingInfo(
            training.instances,
            tuple(training.class_counts),
            training.structure_source,
            training.seed,
            training.kmeans_seed,
        )
    return TrainedClassifier(doc.kind, model, threshold, info)


__all__ = [
    "ALL_KINDS",
    "ClassifierDocument",
    "ClassifierKind",
    "TrainedClassifier",
    "TrainingInfo",
    "class_scores",
    "classify",
    "format_threshold",
    "load_classifier",
    "parse_threshold",
    "predict_batch",
    "save_classifier",
    "train",
    "train_arrays",
]

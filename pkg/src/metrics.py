"""Classification metrics and report rendering for trained classifiers."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from src.bayesnet import (
    AttributeSpace,
    CountTables,
    MultiNetModel,
    Structure,
    laplace_class_prior,
    laplace_cond,
    structure_lines,
)
from src.classifiers import ClassifierKind, TrainedClassifier, class_scores, format_threshold
from src.errors import EmptyError, LengthError, RangeError

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["Network", "Structure", "class", "k", "train rate", "test rate"]


class EvaluationReport(BaseModel):
    """Per-class rates on the training and test sets for one classifier.

    ``timings`` is excluded from the serialized form so that repeated runs
    produce byte-identical reports.
    """

    model_config = ConfigDict(frozen=True)

    kind: ClassifierKind
    network: str
    structure_label: str
    threshold: str | None = None
    k: int | None = None
    class_count: int
    train_rates: list[float | None]
    test_rates: list[float | None]
    train_pcc: float
    test_pcc: float
    confusion: list[list[int]]
    structure: list[str]
    timings: dict[str, float] = Field(default_factory=dict, exclude=True)


def pcc(predictions: Sequence[int], truth: Sequence[int]) -> float:
    """Percentage of correct classification.

    Parameters
    ----------
    predictions : Sequence[int]
        Predicted class per instance.
    truth : Sequence[int]
        True class per instance, same length as ``predictions``.

    Returns
    -------
    float
        Fraction of matching instances in ``[0, 1]``.
    """

    predictions, truth = np.asarray(predictions), np.asarray(truth)
    if predictions.shape != truth.shape:
        raise LengthError(f"{predictions.size} predictions for {truth.size} true labels")
    if truth.size == 0:
        raise EmptyError("PCC is undefined for zero instances")
    return float(np.count_nonzero(predictions == truth) / truth.size)


def confusion(predictions: Sequence[int], truth: Sequence[int], class_count: int) -> np.ndarray:
    """``class_count x class_count`` counts; cell ``(t, p)`` is true class ``t`` predicted ``p``."""

    predictions = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predictions.shape != truth.shape:
        raise LengthError(f"{predictions.size} predictions for {truth.size} true labels")
    for values in (predictions, truth):
        if values.size and (values.min() < 0 or values.max() >= class_count):
            raise RangeError(f"class ids outside [0, {class_count})")
    matrix = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(matrix, (truth, predictions), 1)
    return matrix


def class_rates(matrix: np.ndarray) -> list[float | None]:
    """Diagonal over row sum for each class; ``None`` for classes with no instance."""

    rows = matrix.sum(axis=1)
    return [float(matrix[c, c] / rows[c]) if rows[c] else None for c in range(matrix.shape[0])]


def predict_labels(clf: TrainedClassifier, labels: np.ndarray) -> np.ndarray:
    """MAP class for every row of a label matrix.

    Parameters
    ----------
    clf : TrainedClassifier
        Classifier to apply.
    labels : np.ndarray
        ``(N, n)`` label matrix.

    Returns
    -------
    np.ndarray
        Integer class per row.
    """

    return np.array([int(np.argmax(class_scores(clf, a))) for a in np.atleast_2d(labels)], dtype=np.int64)


def describe_structure(clf: TrainedClassifier) -> list[str]:
    """Arc lines of ``clf``, prefixed by class for multinets."""

    if isinstance(clf.model, MultiNetModel):
        lines = []
        for c, structure in enumerate(clf.model.structures):
            lines.extend(f"class {c + 1}: {line}" for line in structure_lines(structure))
        return lines
    return structure_lines(clf.model.structure)


def structure_label(clf: TrainedClassifier) -> str:
    if clf.kind.is_multinet:
        return "Structure of each class"
    if clf.info is not None and clf.info.structure_source is not None:
        return f"Structure of class {clf.info.structure_source + 1}"
    return "Global structure"


def evaluate(
    clf: TrainedClassifier,
    train_set: tuple[np.ndarray, np.ndarray],
    test_set: tuple[np.ndarray, np.ndarray],
    k: int | None = None,
) -> EvaluationReport:
    """Rates of ``clf`` on ``(labels, classes)`` training and test sets.

    Raises:
        EmptyError: If either set has no instance.
    """

    class_count = clf.space.class_count
    timings = {"train_seconds": clf.info.seconds if clf.info is not None else 0.0}
    results = {}
    for name, (labels, classes) in (("train", train_set), ("test", test_set)):
        classes = np.asarray(classes, dtype=np.int64)
        if classes.size == 0:
            raise EmptyError(f"cannot evaluate on an empty {name} set")
        started = time.perf_counter()
        predicted = predict_labels(clf, np.asarray(labels, dtype=np.int64))
        timings[f"{name}_classify_seconds"] = time.perf_counter() - started
        results[name] = (pcc(predicted, classes), confusion(predicted, classes, class_count))

    report = EvaluationReport(
        kind=clf.kind,
        network=clf.kind.title,
        structure_label=structure_label(clf),
        threshold=format_threshold(clf.threshold),
        k=k,
        class_count=class_count,
        train_rates=class_rates(results["train"][1]),
        test_rates=class_rates(results["test"][1]),
        train_pcc=results["train"][0],
        test_pcc=results["test"][0],
        confusion=results["test"][1].tolist(),
        structure=describe_structure(clf),
        timings=timings,
    )
    logger.info("%s: train PCC %.4f, test PCC %.4f", clf.kind.value, report.train_pcc, report.test_pcc)
    return report


def _rate(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def report_frame(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """Rows in the Network / Structure / class / k / train rate / test rate layout."""

    rows = []
    for report in reports:
        network = report.network
        if report.threshold is not None:
            network = f"{network} (S={report.threshold})"
        for c in range(report.class_count):
            first = c == 0
            rows.append(
                {
                    "Network": network if first else "",
                    "Structure": report.structure_label if first else "",
                    "class": f"class {c + 1}",
                    "k": "" if report.k is None else str(report.k),
                    "train rate": _rate(report.train_rates[c]),
                    "test rate": _rate(report.test_rates[c]),
                }
            )
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def render_reports(reports: Sequence[EvaluationReport]) -> str:
    """Aligned plain-text table, rates to two decimals, followed by PCC and structures."""

    lines = [report_frame(reports).to_string(index=False, justify="left"), ""]
    for report in reports:
        lines.append(f"{report.network}: train PCC {report.train_pcc:.2f}, test PCC {report.test_pcc:.2f}")
        lines.extend(f"  {line}" for line in report.structure)
    return "\n".join(lines) + "\n"


def render_prior_table(class_prior: Sequence[float]) -> str:
    """The a-priori class probability table."""

    frame = pd.DataFrame(
        {"P(class)": [f"{p:.4g}" for p in class_prior]},
        index=[f"Class {c + 1}" for c in range(len(class_prior))],
    )
    return frame.to_string() + "\n"


def render_feature_table(counts: CountTables, value: int) -> str:
    """Laplace ``P(F_i = value | class)`` for every attribute (rows) and class (columns)."""

    n = len(counts.cardinalities)
    space = AttributeSpace(counts.cardinalities, counts.class_count)
    cpts = laplace_cond(counts, space, Structure.naive(n))
    frame = pd.DataFrame(
        [[f"{cpt[value, c]:.2f}" for c in range(counts.class_count)] for cpt in cpts],
        index=[f"Feature {i + 1}" for i in range(n)],
        columns=[f"Class {c + 1}" for c in range(counts.class_count)],
    )
    return frame.to_string() + "\n"


def render_parameter_tables(counts: CountTables) -> str:
    """Class prior table followed by one attribute table per label value.

    Args:
        counts: Sufficient statistics of the training label vectors.

    Returns:
        str: The a-priori table, then ``P(F_i = v | class)`` for every label
        value ``v``, each under its own heading.
    """

    space = AttributeSpace(counts.cardinalities, counts.class_count)
    sections = ["A priori probability of class", render_prior_table(laplace_class_prior(counts, space))]
    for value in range(min(counts.cardinalities)):
        sections.append(f"P(F_i = {value} | class)")
        sections.append(render_feature_table(counts, value))
    return "\n".join(sections)


def write_parameter_tables(counts: CountTables, out_dir: Path | str) -> Path:
    """Write :func:`render_parameter_tables` to ``tables.txt`` and return its path."""

    path = Path(out_dir) / "tables.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_parameter_tables(counts), encoding="utf-8")
    return path


_REPORTS = TypeAdapter(list[EvaluationReport])


def write_reports(reports: Sequence[EvaluationReport], out_dir: Path | str) -> dict[str, Path]:
    """Write ``report.json``, ``report.txt`` and the run-dependent ``timings.json``."""

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report_json": out_dir / "report.json",
        "report_txt": out_dir / "report.txt",
        "timings": out_dir / "timings.json",
    }
    paths["report_json"].write_bytes(_REPORTS.dump_json(list(reports), indent=2) + b"\n")
    paths["report_txt"].write_text(render_reports(reports), encoding="utf-8")
    timings = {f"{i + 1}-{report.kind.value}": report.timings for i, report in enumerate(reports)}
    paths["timings"].write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def read_reports(path: Path | str) -> list[EvaluationReport]:
    """Reload the reports from a ``report.json`` written by :func:`write_reports`.

    Parameters
    ----------
    path : Path | str
        JSON report file.

    Returns
    -------
    list[EvaluationReport]
        Reports in file order, with empty ``timings``.
    """

    return _REPORTS.validate_json(Path(path).read_bytes())


__all__ = [
    "EvaluationReport",
    "class_rates",
    "confusion",
    "describe_structure",
    "evaluate",
    "pcc",
    "predict_labels",
    "read_reports",
    "render_feature_table",
    "render_parameter_tables",
    "render_prior_table",
    "render_reports",
    "report_frame",
    "write_parameter_tables",
    "write_reports",
]

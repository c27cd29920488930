"""Command-line interface for the face classification pipeline.

Run ``python -m src.cli --help`` for the list of commands. Exit codes: ``0``
success, ``2`` configuration error, ``3`` data error, ``4`` numeric error.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import click

from src.bayesnet import AttributeSpace, count_arrays, robinson_dag_count
from src.classifiers import ClassifierKind, classify, load_classifier, save_classifier
from src.data_loader import (
    DatasetManifest,
    SplitSpec,
    load_image,
    load_images,
    parse_manifest,
    read_manifest,
    save_image,
    split_dataset,
    write_manifest,
)
from src.errors import BnFacesError, ConfigError, RangeError
from src.features import N_BLOCKS, GlcmConfig, describe_dataset, describe_image, descriptor_matrix, read_features, write_features
from src.metrics import evaluate, write_parameter_tables, write_reports
from src.pipeline import labels_table, read_labels, run_pipeline, train_kinds, write_labels
from src.quantizer import kmeans_fit, labelize, load_codebook, save_codebook
from src.settings import KIND_CHOICES, PipelineConfig, build_config, read_config_file
from src.tangent import TRANSFORM_KINDS, TransformSet, augment_dataset

logger = logging.getLogger(__name__)

MAX_DAG_NODES = 25


class PipelineGroup(click.Group):
    """Turns library errors into a logged message and the error's exit code."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except BnFacesError as exc:
            logger.error("%s", exc)
            click.echo(f"error: {exc}", err=True)
            ctx.exit(exc.exit_code)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _offset(text: str) -> tuple[int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"GLCM offset must be 'dx,dy', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"GLCM offset must be two integers, got {text!r}") from exc


glcm_levels_option = click.option("--glcm-levels", type=int, default=8, show_default=True, help="Gray levels G of the GLCM.")
glcm_offset_option = click.option("--glcm-offset", default="1,0", show_default=True, help="GLCM pixel offset 'dx,dy'.")


@click.group(cls=PipelineGroup)
@click.option("--log-level", default="INFO", show_default=True, help="Logging level.")
def main(log_level: str) -> None:
    """Face classification with block textures, k-means labels and Bayesian networks."""

    logging.basicConfig(level=log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(path_type=Path))
@click.option("--root", type=click.Path(path_type=Path), default=None, help="Dataset root (defaults to the manifest's directory).")
@click.option("--train-fraction", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("output"), show_default=True)
def ingest(manifest_path: Path, root: Path | None, train_fraction: float, seed: int, out_dir: Path) -> None:
    """Validate a dataset and write stratified train/test manifests."""

    manifest = read_manifest(manifest_path, root=root)
    train, test = split_dataset(manifest, SplitSpec(train_fraction, seed))
    for name, part in (("train_manifest.txt", train), ("test_manifest.txt", test)):
        path = write_manifest(part, out_dir / name)
        click.echo(f"{path}: {len(part)} images")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(path_type=Path))
@click.option("--root", type=click.Path(path_type=Path), default=None)
@click.option("--tangent-transforms", default=",".join(TRANSFORM_KINDS), show_default=True)
@click.option("--tangent-steps", default=None, help="Comma-separated steps, one per transform (defaults per kind).")
@click.option("--augment-grid", default="1.0", show_default=True, help="Comma-separated magnitudes in steps.")
@click.option("--out-dir", type=click.Path(path_type=Path), required=True)
def augment(
    manifest_path: Path, root: Path | None, tangent_transforms: str, tangent_steps: str | None, augment_grid: str, out_dir: Path
) -> None:
    """Write tangent-augmented copies of a (training) manifest's images."""

    kinds = tuple(k.strip() for k in tangent_transforms.split(",") if k.strip())
    transforms = TransformSet(kinds, _floats(tangent_steps)) if tangent_steps else TransformSet.default(kinds)
    manifest = read_manifest(manifest_path, root=root)
    images, labels = augment_dataset(load_images(manifest), manifest.labels.tolist(), transforms, _floats(augment_grid))
    per_image = len(images) // len(manifest)
    entries = []
    for index, (image, label) in enumerate(zip(images, labels)):
        relative, _ = manifest.entries[index // per_image]
        variant = index % per_image
        name = relative if variant == 0 else f"{Path(relative).with_suffix('')}_aug{variant}.pgm"
        save_image(image, out_dir / name)
        entries.append((name, label))
    path = write_manifest(DatasetManifest(tuple(entries), manifest.class_count, manifest.image_dims, out_dir), out_dir / "manifest.txt")
    click.echo(f"{path}: {len(entries)} images")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(path_type=Path))
@click.option("--root", type=click.Path(path_type=Path), default=None)
@glcm_levels_option
@glcm_offset_option
@click.option("--out", type=click.Path(path_type=Path), required=True, help="Feature CSV to write.")
def features(manifest_path: Path, root: Path | None, glcm_levels: int, glcm_offset: str, out: Path) -> None:
    """Describe every image block and write the feature CSV."""

    manifest = read_manifest(manifest_path, root=root)
    names = [relative for relative, _ in manifest.entries]
    frame = describe_dataset(load_images(manifest), names, GlcmConfig(glcm_levels, _offset(glcm_offset)))
    click.echo(f"{write_features(frame, out)}: {len(frame)} blocks")


@main.group()
def codebook() -> None:
    """Fit or apply the k-means codebook."""


@codebook.command("fit")
@click.option("--features", "features_path", required=True, type=click.Path(path_type=Path))
@click.option("--k", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-iter", type=int, default=300, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def codebook_fit(features_path: Path, k: int, seed: int, max_iter: int, tol: float, out: Path) -> None:
    """Fit a codebook on training features."""

    cb = kmeans_fit(descriptor_matrix(read_features(features_path)), k=k, seed=seed, max_iter=max_iter, tol=tol)
    click.echo(f"{save_codebook(cb, out)}: k={cb.k}, inertia {cb.inertia_history[-1]:.6g}")


@codebook.command("apply")
@click.option("--codebook", "codebook_path", required=True, type=click.Path(path_type=Path))
@click.option("--features", "features_path", required=True, type=click.Path(path_type=Path))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(path_type=Path), help="Supplies the class of each image.")
@click.option("--out", type=click.Path(path_type=Path), required=True, help="Labels CSV to write.")
def codebook_apply(codebook_path: Path, features_path: Path, manifest_path: Path, out: Path) -> None:
    """Map feature rows to label vectors."""

    manifest = parse_manifest(manifest_path.read_text(encoding="utf-8").splitlines())
    frame = labels_table(load_codebook(codebook_path), read_features(features_path), dict(manifest.entries))
    click.echo(f"{write_labels(frame, out)}: {len(frame)} label vectors")


@main.command()
@click.option("--labels", "labels_path", required=True, type=click.Path(path_type=Path))
@click.option("--kind", type=click.Choice(KIND_CHOICES), default="nb", show_default=True)
@click.option("--threshold", default="avg", show_default=True, help="FAN threshold: 'avg' or a number S.")
@click.option("--k", type=int, required=True, help="Codebook size (attribute cardinality).")
@click.option("--class-count", type=int, default=None, help="Defaults to the largest class id plus one.")
@click.option("--structure-source", type=int, default=None, help="Learn the global structure from this class only.")
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("output"), show_default=True)
def train(
    labels_path: Path, kind: str, threshold: str, k: int, class_count: int | None, structure_source: int | None, out_dir: Path
) -> None:
    """Train one classifier variant (or all five) on a labels CSV."""

    _, labels, classes = read_labels(labels_path)
    space = AttributeSpace.uniform(N_BLOCKS, k, class_count or int(classes.max()) + 1)
    kinds = tuple(ClassifierKind) if kind == "all" else (ClassifierKind(kind),)
    for clf in train_kinds(kinds, labels, classes, space, threshold, structure_source):
        path = save_classifier(clf, out_dir / f"model_{clf.kind.value}.json")
        click.echo(f"{path}: {sum(len(s.arcs) for s in clf.structures)} attribute arcs")
    tables = write_parameter_tables(count_arrays(labels, classes, space.cardinalities, space.class_count), out_dir)
    click.echo(f"{tables}: class prior and attribute tables")


@main.command("evaluate")
@click.option("--model", "model_paths", required=True, multiple=True, type=click.Path(path_type=Path))
@click.option("--train-labels", required=True, type=click.Path(path_type=Path))
@click.option("--test-labels", required=True, type=click.Path(path_type=Path))
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("output"), show_default=True)
def evaluate_cmd(model_paths: tuple[Path, ...], train_labels: Path, test_labels: Path, out_dir: Path) -> None:
    """Evaluate saved models and write JSON and text reports."""

    _, train_x, train_y = read_labels(train_labels)
    _, test_x, test_y = read_labels(test_labels)
    reports = []
    for path in model_paths:
        clf = load_classifier(path)
        reports.append(evaluate(clf, (train_x, train_y), (test_x, test_y), k=max(clf.space.cardinalities)))
    paths = write_reports(reports, out_dir)
    click.echo(paths["report_txt"].read_text(encoding="utf-8"), nl=False)


@main.command("classify")
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path))
@click.option("--codebook", "codebook_path", required=True, type=click.Path(path_type=Path))
@glcm_levels_option
@glcm_offset_option
@click.argument("images", nargs=-1, required=True, type=click.Path(path_type=Path))
def classify_cmd(model_path: Path, codebook_path: Path, glcm_levels: int, glcm_offset: str, images: tuple[Path, ...]) -> None:
    """Print the decision and posterior for each PGM image."""

    clf = load_classifier(model_path)
    cb = load_codebook(codebook_path)
    cfg = GlcmConfig(glcm_levels, _offset(glcm_offset))
    for path in images:
        labels = labelize(cb, describe_image(load_image(path), cfg))
        decision, post = classify(clf, labels)
        probabilities = " ".join(f"{p:.4f}" for p in post)
        click.echo(f"{path}\tclass {decision}\tlabels {','.join(map(str, labels))}\tposterior {probabilities}")


@main.command("dag-count")
@click.argument("n", type=int)
def dag_count_cmd(n: int) -> None:
    """Print the number of labelled DAGs on N nodes (0 <= N <= 25)."""

    if not 0 <= n <= MAX_DAG_NODES:
        raise RangeError(f"n must lie in [0, {MAX_DAG_NODES}], got {n}")
    click.echo(str(robinson_dag_count(n)))


def _config_option(name: str) -> click.Option:
    flag = "--" + name.replace("_", "-")
    return click.Option([flag, name], default=None, help=f"Override '{name}' from the config file.")


def _run(config_path: Path | None, **overrides: Any) -> None:
    values = read_config_file(config_path) if config_path is not None else {}
    config = build_config(values, overrides)
    result = run_pipeline(config)
    click.echo(result.artifacts["report_txt"].read_text(encoding="utf-8"), nl=False)


run = click.Command(
    "run",
    callback=_run,
    params=[click.Option(["--config", "config_path"], type=click.Path(path_type=Path), default=None, help="key=value config file.")]
    + [_config_option(name) for name in PipelineConfig.model_fields],
    help="Run the whole pipeline from a config file; any key can be overridden by its flag.",
)
main.add_command(run)


if __name__ == "__main__":
    main()

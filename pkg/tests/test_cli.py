from __future__ import annotations

from pathlib import Path

import pytest
from click.testing import CliRunner

from src.cli import main


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.mark.parametrize(("n", "expected"), [("0", "1"), ("1", "1"), ("3", "25"), ("4", "543")])
def test_dag_count(runner: CliRunner, n: str, expected: str) -> None:
    result = runner.invoke(main, ["dag-count", n])
    assert result.exit_code == 0
    assert result.output.strip() == expected


def test_dag_count_out_of_range(runner: CliRunner) -> None:
    result = runner.invoke(main, ["dag-count", "26"])
    assert result.exit_code == 3
    assert "[0, 25]" in result.output


def test_run_from_config_file(runner: CliRunner, synthetic_manifest: Path, tmp_path: Path) -> None:
    config = tmp_path / "run.cfg"
    config.write_text(f"manifest={synthetic_manifest}\noutput_dir={tmp_path / 'out'}\nk=8\n")
    result = runner.invoke(main, ["run", "--config", str(config), "--k", "4", "--kind", "nb"])
    assert result.exit_code == 0, result.output
    assert "Naive Bayes: train PCC 1.00, test PCC 1.00" in result.output
    assert "k=4" in (tmp_path / "out" / "config.echo").read_text().splitlines()


def test_run_exit_codes(runner: CliRunner, synthetic_manifest: Path, tmp_path: Path) -> None:
    bad_kind = runner.invoke(main, ["run", "--manifest", str(synthetic_manifest), "--kind", "svm"])
    assert bad_kind.exit_code == 2

    missing = runner.invoke(main, ["run", "--manifest", str(tmp_path / "none.txt"), "--output-dir", str(tmp_path)])
    assert missing.exit_code == 3
    assert "stage 'ingest' failed" in missing.output


def test_stage_by_stage(runner: CliRunner, synthetic_manifest: Path, tmp_path: Path) -> None:
    root = synthetic_manifest.parent
    out = tmp_path / "stages"

    def invoke(*args: str) -> str:
        result = runner.invoke(main, list(args))
        assert result.exit_code == 0, result.output
        return result.output

    invoke("ingest", "--manifest", str(synthetic_manifest), "--out-dir", str(out))
    for part in ("train", "test"):
        invoke(
            "features",
            "--manifest", str(out / f"{part}_manifest.txt"),
            "--root", str(root),
            "--out", str(out / f"features_{part}.csv"),
        )
    invoke("codebook", "fit", "--features", str(out / "features_train.csv"), "--k", "4", "--out", str(out / "cb.json"))
    for part in ("train", "test"):
        invoke(
            "codebook", "apply",
            "--codebook", str(out / "cb.json"),
            "--features", str(out / f"features_{part}.csv"),
            "--manifest", str(out / f"{part}_manifest.txt"),
            "--out", str(out / f"labels_{part}.csv"),
        )
    invoke("train", "--labels", str(out / "labels_train.csv"), "--kind", "all", "--k", "4", "--out-dir", str(out))
    assert "A priori probability of class" in (out / "tables.txt").read_text()
    report = invoke(
        "evaluate",
        "--model", str(out / "model_nb.json"),
        "--model", str(out / "model_gtan.json"),
        "--train-labels", str(out / "labels_train.csv"),
        "--test-labels", str(out / "labels_test.csv"),
        "--out-dir", str(out),
    )
    assert "Naive Bayes: train PCC 1.00, test PCC 1.00" in report
    assert "GTAN" in report

    classified = invoke(
        "classify", "--model", str(out / "model_nb.json"), "--codebook", str(out / "cb.json"), str(root / "s4/1.pgm")
    )
    assert "class 3" in classified


def test_augment_command(runner: CliRunner, synthetic_manifest: Path, tmp_path: Path) -> None:
    out = tmp_path / "augmented"
    result = runner.invoke(
        main,
        [
            "augment",
            "--manifest", str(synthetic_manifest),
            "--tangent-transforms", "translate-x",
            "--out-dir", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    lines = [line for line in (out / "manifest.txt").read_text().splitlines() if not line.startswith("#")]
    assert len(lines) == 50 * 3
    assert (out / "s1" / "1_aug1.pgm").exists()


def test_codebook_fit_needs_an_iteration(runner: CliRunner, synthetic_manifest: Path, tmp_path: Path) -> None:
    features = tmp_path / "features.csv"
    described = runner.invoke(
        main, ["features", "--manifest", str(synthetic_manifest), "--root", str(synthetic_manifest.parent), "--out", str(features)]
    )
    assert described.exit_code == 0, described.output
    result = runner.invoke(
        main, ["codebook", "fit", "--features", str(features), "--k", "4", "--max-iter", "0", "--out", str(tmp_path / "cb.json")]
    )
    assert result.exit_code == 2
    assert "max_iter" in result.output


def test_bad_step_is_a_config_error(runner: CliRunner, synthetic_manifest: Path, tmp_path: Path) -> None:
    result = runner.invoke(
        main,
        [
            "augment",
            "--manifest", str(synthetic_manifest),
            "--tangent-transforms", "rotate",
            "--tangent-steps", "1.5",
            "--out-dir", str(tmp_path),
        ],
    )
    assert result.exit_code == 2

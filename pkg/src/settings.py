"""Centralized pipeline configuration.

Configuration files are flat ``key=value`` text with ``#`` comments; list
values are comma separated. Every key can be overridden on the command line by
a flag of the same name (dashes instead of underscores). The resolved
configuration is echoed back in the same format so a run can be repeated from
its echo.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable, Mapping

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from src.classifiers import ALL_KINDS, parse_threshold
from src.errors import BnFacesError, ConfigError, IoError
from src.features import DEFAULT_LEVELS, DEFAULT_OFFSET
from src.quantizer import DEFAULT_K, DEFAULT_MAX_ITER, DEFAULT_TOL
from src.tangent import ALPHA_LOCALITY, DEFAULT_STEPS, TRANSFORM_KINDS, TransformSet

OUTPUT_DIR = Path("output")
DEFAULT_TRAIN_FRACTION = 0.5
DEFAULT_AUGMENT_GRID = (1.0,)
KIND_CHOICES = tuple(kind.value for kind in ALL_KINDS) + ("all",)


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


class PipelineConfig(BaseModel):
    """Every option of an end-to-end run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    manifest: Path
    dataset_root: Path | None = None
    output_dir: Path = OUTPUT_DIR

    train_fraction: float = DEFAULT_TRAIN_FRACTION
    seed: int = 0

    tangent_enabled: bool = False
    tangent_transforms: tuple[str, ...] = TRANSFORM_KINDS
    tangent_steps: tuple[float, ...] = tuple(DEFAULT_STEPS[k] for k in TRANSFORM_KINDS)
    augment_grid: tuple[float, ...] = DEFAULT_AUGMENT_GRID
    augment_test: bool = False

    glcm_levels: int = DEFAULT_LEVELS
    glcm_offset: tuple[int, int] = DEFAULT_OFFSET

    k: int = DEFAULT_K
    kmeans_seed: int = 0
    kmeans_max_iter: int = DEFAULT_MAX_ITER
    kmeans_tol: float = DEFAULT_TOL

    kind: str = "nb"
    threshold: str = "avg"
    structure_source: int | None = None

    @field_validator("tangent_transforms", "tangent_steps", "augment_grid", "glcm_offset", mode="before")
    @classmethod
    def _lists(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("dataset_root", "structure_source", mode="before")
    @classmethod
    def _blank_is_none(cls, value: Any) -> Any:
        return None if isinstance(value, str) and not value.strip() else value

    @field_validator("train_fraction")
    @classmethod
    def _fraction(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ValueError("train_fraction must lie in (0, 1]")
        return value

    @field_validator("glcm_levels")
    @classmethod
    def _levels(cls, value: int) -> int:
        if not 2 <= value <= 256:
            raise ValueError("glcm_levels must lie in [2, 256]")
        return value

    @field_validator("k", "kmeans_max_iter")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @field_validator("seed", "kmeans_seed")
    @classmethod
    def _unsigned(cls, value: int) -> int:
        if value < 0:
            raise ValueError("seeds are unsigned")
        return value

    @field_validator("kmeans_tol")
    @classmethod
    def _tol(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("kmeans_tol must be positive")
        return value

    @field_validator("augment_grid")
    @classmethod
    def _grid(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or any(not 0 < m <= ALPHA_LOCALITY for m in value):
            raise ValueError(f"augment_grid magnitudes must lie in (0, {ALPHA_LOCALITY}]")
        return value

    @field_validator("kind")
    @classmethod
    def _kind(cls, value: str) -> str:
        value = value.strip().lower()
        if value not in KIND_CHOICES:
            raise ValueError(f"kind must be one of {', '.join(KIND_CHOICES)}")
        return value

    @field_validator("threshold")
    @classmethod
    def _threshold(cls, value: str) -> str:
        try:
            parse_threshold(value)
        except ConfigError as exc:
            raise ValueError(str(exc)) from exc
        return value.strip().lower()

    @model_validator(mode="after")
    def _transforms(self) -> "PipelineConfig":
        try:
            self.transform_set()
        except BnFacesError as exc:
            raise ValueError(str(exc)) from exc
        return self

    def transform_set(self) -> TransformSet:
        return TransformSet(self.tangent_transforms, self.tangent_steps)

    @property
    def root(self) -> Path:
        return self.dataset_root if self.dataset_root is not None else self.manifest.parent


def parse_config_text(lines: Iterable[str]) -> dict[str, str]:
    """Parse ``key=value`` lines into a dict of raw strings."""

    values: dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {number}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def read_config_file(path: Path | str) -> dict[str, str]:
    """Raw ``key=value`` pairs of a config file.

    Raises:
        IoError: If the file does not exist.
    """

    path = Path(path)
    if not path.exists():
        raise IoError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8").splitlines())


def build_config(values: Mapping[str, Any], overrides: Mapping[str, Any] | None = None) -> PipelineConfig:
    """Validate file values with CLI overrides applied on top.

    Raises:
        ConfigError: For unknown keys or values outside their bounds.
    """

    merged = dict(values)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return PipelineConfig.model_validate(merged)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(p) for p in e['loc']) or 'config'}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"invalid configuration: {problems}") from exc


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_lines(config: PipelineConfig) -> list[str]:
    """The resolved configuration as sorted ``key=value`` lines."""

    return [f"{key}={_format_value(getattr(config, key))}" for key in sorted(PipelineConfig.model_fields)]


def write_config_echo(config: PipelineConfig, path: Path | str) -> Path:
    """Write :func:`config_lines` to ``path`` and return it."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(config_lines(config)) + "\n", encoding="utf-8")
    return path


__all__ = [
    "KIND_CHOICES",
    "OUTPUT_DIR",
    "PipelineConfig",
    "build_config",
    "config_lines",
    "parse_config_text",
    "read_config_file",
    "write_config_echo",
]

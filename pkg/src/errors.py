"""Exception hierarchy shared by every stage of the face classification pipeline.

Each error carries the process exit code the CLI should use when it escapes a
command: ``2`` for configuration problems, ``3`` for data problems and ``4``
for numeric failures.
"""

from __future__ import annotations


class BnFacesError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(BnFacesError):
    """Invalid option, bound violation or unusable configuration file."""

    exit_code = 2


class DataError(BnFacesError):
    """Input data that cannot be used as given."""

    exit_code = 3


class NumericError(BnFacesError):
    """A computation produced a non-finite or otherwise unusable result."""

    exit_code = 4


class IoError(DataError):
    """A file is missing or unreadable."""


class FormatError(DataError):
    """A file exists but does not follow the expected format."""


class SplitError(DataError):
    """A train/test split would leave a class without training images."""


class DimMismatch(DataError):
    """Images, bases or tables that must share dimensions do not."""


class TooSmall(DataError):
    """An image is too small for the 3x3 block grid."""


class OffsetError(DataError):
    """A co-occurrence offset does not fit inside the block."""


class LengthError(DataError):
    """A sequence does not have the required length."""


class RangeError(DataError):
    """A label, class id or count argument lies outside its valid range."""


class EmptyError(DataError):
    """An aggregate was requested over no instances."""


class EmptyData(DataError):
    """An information measure was requested over no instances."""


class ZeroConfigError(DataError):
    """A parent configuration was never observed, so its ML estimate is undefined."""


class StepError(ConfigError):
    """A tangent finite-difference step lies outside the supported bounds."""


class AlphaError(ConfigError):
    """A tangent coefficient vector or Dirichlet pseudo-count is invalid."""


class PipelineError(BnFacesError):
    """Wraps the first failing stage's error together with the stage name."""

    def __init__(self, stage: str, error: BnFacesError) -> None:
        super().__init__(f"stage '{stage}' failed: {error}")
        self.stage = stage
        self.error = error
        self.exit_code = error.exit_code


__all__ = [
    "AlphaError",
    "BnFacesError",
    "ConfigError",
    "DataError",
    "DimMismatch",
    "EmptyData",
    "EmptyError",
    "FormatError",
    "IoError",
    "LengthError",
    "NumericError",
    "OffsetError",
    "PipelineError",
    "RangeError",
    "SplitError",
    "StepError",
    "TooSmall",
    "ZeroConfigError",
]

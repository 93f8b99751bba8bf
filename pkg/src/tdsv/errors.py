"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class TdsvError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(TdsvError):
    """Invalid or inconsistent experiment configuration."""


class DataError(TdsvError):
    """Problem with input data or on-disk artifacts."""


class FormatError(DataError):
    """File does not conform to its expected binary/text format."""


class UnsupportedError(DataError):
    """File is well-formed but uses an unsupported variant (e.g. stereo WAV)."""


class IoError(DataError):
    """Filesystem-level failure (missing path, unwritable target)."""


class ParseError(DataError):
    """Malformed line in a text table (manifest, trial list, score file)."""


class DuplicateError(DataError):
    """Duplicate identifier where uniqueness is required."""


class ValidationError(DataError):
    """Loaded object violates a model/type invariant."""


class IncompleteError(DataError):
    """A required (model, utterance) score or resource is missing."""


class NumericError(TdsvError):
    """Numeric failure (domain violation, non-finite result)."""


class DomainError(NumericError):
    """Argument outside the mathematical domain of an operation."""

"""Exception types shared across the package."""


class LevelSimpError(Exception):
    """Base class for all package-specific errors."""


class EmptyInputError(LevelSimpError):
    """Raised when a text yields no usable tokens."""


class DimensionMismatchError(LevelSimpError):
    """Feature vector length does not match the model's expectation."""


class DegenerateDatasetError(LevelSimpError):
    """Training data contains fewer than two distinct classes."""


class LevelOutOfRangeError(LevelSimpError):
    """Requested simplification level has no control token."""


class SequenceTooLongError(LevelSimpError):
    """A token sequence exceeds the configured maximum length."""


class EmptyCorpusError(LevelSimpError):
    """No usable training examples remain."""


class MissingScoreError(LevelSimpError):
    """A (system, metric) cell required for ranking is absent."""


class RatioError(LevelSimpError):
    """Split ratios are not three positive numbers summing to one."""


class ParseError(LevelSimpError):
    """A data file row could not be parsed.

    Carries the 1-based row number so callers can point at the offending
    line.
    """

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row

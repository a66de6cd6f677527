"""Exception types raised across the package."""


class SumregError(Exception):
    """Base class for all package errors."""


class BatchError(SumregError):
    """Batch does not satisfy an operation's preconditions (e.g. n < 2)."""


class DimensionError(SumregError):
    """Inputs have incompatible shapes or lengths."""


class ContractError(SumregError):
    """An input violates a provenance contract (wrong mode flag)."""


class ConfigError(SumregError):
    """Invalid hyperparameter or grid configuration."""


class NumericError(SumregError):
    """A numeric-integrity check failed (residues, negative variances)."""


class TrainingError(SumregError):
    """Training diverged; carries the epoch at which it happened."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class DataError(SumregError):
    """A dataset split is unusable (e.g. a class missing from the train split)."""

"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
runtime aborts (NaN losses and similar) with 3.
"""


class VfrError(Exception):
    """Base class for all package errors."""


class ConfigError(VfrError):
    """Invalid configuration: bad option value, mismatched model wiring."""


class ShapeError(VfrError):
    """Tensor shape violates an operation's contract."""


class InputError(VfrError):
    """Input data violates an operation's contract (bad labels, indices)."""


class TrainingAborted(VfrError):
    """Training loop hit a non-recoverable state (NaN/inf loss).

    Carries enough context to replay the offending batch.
    """

    def __init__(self, message: str, stage: int | None = None,
                 step: int | None = None, batch_seed: int | None = None):
        super().__init__(message)
        self.stage = stage
        self.step = step
        self.batch_seed = batch_seed

"""Exception types shared across the package."""


class ShapeError(ValueError):
    """An array argument has an incompatible or invalid shape."""


class ConfigError(ValueError):
    """A configuration value violates its documented constraints."""


class DataFormatError(ValueError):
    """A data file is malformed (bad magic, truncated payload, mismatched counts)."""


class NonFiniteError(FloatingPointError):
    """A NaN or infinity appeared where a finite value is required."""


class DegenerateGeometryError(ValueError):
    """A geometric construction is undefined for the given inputs."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss; carries the epoch and batch index."""

    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")

"""Exception hierarchy shared across the pipeline."""


class RadmeshError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(RadmeshError, ValueError):
    """Invalid configuration value (bad limb length, unknown action, ...)."""


class ContractViolationError(RadmeshError, ValueError):
    """Caller broke an operation contract (shape mismatch, misaligned RoIs, ...)."""


class DegenerateGeometryError(RadmeshError):
    """Point set too degenerate for the requested geometric operation."""


class EmptyFrameError(RadmeshError):
    """Simulated subject produced no return inside the radar grid."""


class PipelineOrderError(RadmeshError):
    """A training stage was started before its prerequisites exist."""


class TrainingDivergedError(RadmeshError):
    """Loss became non-finite; carries a path to the dumped offending batch."""

    def __init__(self, message: str, dump_path: str | None = None):
        super().__init__(message)
        self.dump_path = dump_path


class ContainerError(RadmeshError, IOError):
    """Array container file is malformed (bad magic, truncation, bad offsets)."""

"""Exception types shared across the package."""


class OansimError(Exception):
    """Base class for package errors."""


class ConfigError(OansimError, ValueError):
    """Invalid configuration or parameter set (CLI exit code 2)."""


class SimulationError(OansimError, RuntimeError):
    """Runtime failure during a simulation run (CLI exit code 3)."""


class SyncError(SimulationError):
    """Frame synchronization failed (preamble not found)."""


class StageError(SimulationError):
    """Pipeline failure, tagged with the stage where it occurred."""

    def __init__(self, stage, original):
        super().__init__(f"stage '{stage}': {original}")
        self.stage = stage
        self.original = original

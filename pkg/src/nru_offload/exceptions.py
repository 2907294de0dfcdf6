"""Error hierarchy with CLI exit codes.

Every error raised by the engine derives from :class:`NruOffloadError`. The
``exit_code`` class attribute is what ``nru-offload`` returns when the error
escapes a subcommand; ``stage`` names the pipeline stage that raised it.
"""

from typing import Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4


class NruOffloadError(Exception):
    """Base class for all engine errors."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        message = super().__str__()
        if self.stage:
            return f"[{self.stage}] {message}"
        return message


class ConfigError(NruOffloadError):
    """Invalid, misspelled or inconsistent configuration."""

    exit_code = EXIT_CONFIG


class NumericalError(NruOffloadError):
    """A computation could not produce a meaningful value."""


class DomainError(NumericalError):
    """An argument lies outside the domain of a model formula."""


class GeometryError(NumericalError):
    """Heights or radii are inconsistent with the deployment model."""


class CoverageInfeasibleError(GeometryError):
    """The base station cannot reach the outage threshold even overhead."""


class DegenerateCellError(NumericalError):
    """All SINR mass of a region falls into the infeasible bucket."""


class CapacityError(NumericalError):
    """A state space is too large to materialize."""


class DegenerateThresholdError(NumericalError):
    """An offloading threshold leaves no class-2 mass in the licensed band."""


class NoOffloadError(NumericalError):
    """The offloaded demand distribution is undefined for a zero offload probability."""


class ConvergenceError(NumericalError):
    """The contention fixed point did not converge."""

    def __init__(self, message: str, residual: float, stage: Optional[str] = None):
        super().__init__(message, stage)
        self.residual = residual


class MappingError(NumericalError):
    """A demand class has no unlicensed spectral efficiency."""


class StateSpaceError(CapacityError):
    """The exact chain would exceed its state budget."""


class SimulationControlError(NruOffloadError):
    """Simulation budget or batching parameters are unusable."""

    exit_code = EXIT_CONFIG


class SimulationInvariantError(NumericalError):
    """A simulator violated resource conservation."""


class ValidationMismatchError(NruOffloadError):
    """An analytical stage disagrees with its oracle."""

    exit_code = EXIT_VALIDATION

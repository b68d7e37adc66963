"""Exception types shared across the package."""


class PtkrError(Exception):
    """Base class for all package-specific errors."""


class GridOverflowError(PtkrError):
    """Probability leaked into the outer momentum guard band.

    Raised during evolution when the tail-mass guard trips; the grid is too
    small for the dynamics and silent aliasing would otherwise corrupt every
    observable downstream.
    """

    def __init__(self, message: str, tail_mass: float = 0.0):
        super().__init__(message)
        self.tail_mass = tail_mass


class ZeroStateError(PtkrError):
    """An operation produced a state with (numerically) zero norm."""


class BracketError(PtkrError, ValueError):
    """A root bracket does not actually bracket the transition."""


class FitDataError(PtkrError, ValueError):
    """Input data unusable for the requested fit (non-positive, too few points)."""


class InsufficientDecayError(FitDataError):
    """Density profile spans too few decades for a localization-length fit."""


class ConfigError(PtkrError, ValueError):
    """Configuration parse or validation failure.

    Carries the offending key and, when known, the line number.
    """

    def __init__(self, message: str, key: str = "", line: int = 0):
        super().__init__(message)
        self.key = key
        self.line = line


class TableSchemaError(PtkrError, ValueError):
    """A result table on disk does not match the expected schema."""

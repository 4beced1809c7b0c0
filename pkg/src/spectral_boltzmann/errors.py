"""Exception hierarchy.

Errors split into two families so the command line can map them to exit
codes: configuration problems (exit 2) and numerical failures (exit 3).
"""


class SpectralBoltzmannError(Exception):
    """Base class for all package errors."""


class ConfigError(SpectralBoltzmannError):
    """Problem with user input; maps to exit code 2."""


class ParseError(ConfigError):
    """Configuration file could not be parsed."""


class ValidationError(ConfigError):
    """Configuration value is missing or invalid.

    Parameters
    ----------
    path : str
        Dotted field path, e.g. ``grid.nv``.
    message : str
        Human readable reason.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class InvalidGrid(ConfigError, ValueError):
    """Velocity grid parameters violate the construction rules."""


class NumericalFailure(SpectralBoltzmannError):
    """Base class for failures during computation; maps to exit code 3."""


class QuadratureFailure(NumericalFailure):
    """A weight integral did not reach the requested tolerance."""


class SingularGram(NumericalFailure):
    """Gram matrix of an integration matrix is not positive definite."""


class EmptyCell(NumericalFailure):
    """A cell has non-positive mass density."""


class OutOfBracket(NumericalFailure):
    """Root of a temperature equation lies outside the search bracket."""


class NoConvergence(NumericalFailure):
    """An iterative solve exhausted its iteration budget."""


class BlowUp(NumericalFailure):
    """Distribution values exceeded the configured ceiling or became non-finite."""


class CacheMismatch(SpectralBoltzmannError):
    """A weight cache file does not match the requested grid or model."""

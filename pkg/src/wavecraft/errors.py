# -----------------------------------------------------------------------------
# Copyright (c) 2025 The Wavecraft Project.
#
# Licensed under the MIT License. See the LICENSE file for details.
# -----------------------------------------------------------------------------

"""Exception hierarchy shared by the library and the command line."""


class WavecraftError(Exception):
    """Base class for every failure raised by Wavecraft."""

    exit_code: int = 1


class ConfigError(WavecraftError):
    """A run configuration file could not be parsed or validated."""

    exit_code = 2

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None) -> None:
        """Attach the file name and line number to the diagnostic when known."""
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(prefix + message)


class ValidationError(WavecraftError):
    """The spectral hypotheses on mu, beta, eta or the truncation do not hold."""

    exit_code = 2


class DomainError(WavecraftError, ValueError):
    """A function was evaluated outside its domain."""


class BesselDomainError(DomainError):
    """A Bessel function was requested outside its supported domain."""


class ResolutionError(WavecraftError):
    """The quadrature grid under-resolves the truncated eigenbasis."""

    exit_code = 2


class ConvergenceError(WavecraftError):
    """An iterative method exhausted its budget before reaching tolerance."""

    def __init__(self, message: str, *, residual: float | None = None, iterations: int | None = None) -> None:
        """Record the last residual and the number of iterations spent."""
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class MonotonicityError(ConvergenceError):
    """The inner saddle solver diverged, which breaches the nonlinearity contract."""


class GeometryError(WavecraftError):
    """No radius exhibits a positive ring minimum of the reduced functional."""


class PathCollapseError(WavecraftError):
    """The mountain-pass string found no barrier or drained into the origin or the global maximizer."""


class AuditError(WavecraftError):
    """An exact audit found a counterexample; this is an implementation bug."""


class UnknownSolutionError(WavecraftError):
    """A solution id was requested that the last solve did not report."""


class SuiteFailure(WavecraftError):
    """One or more verification suites failed."""

    def __init__(self, failed: list[str]) -> None:
        """Keep the names of the failing suites."""
        self.failed = failed
        super().__init__("failing suites: " + ", ".join(failed))

"""Error classes raised across the package.

Each class carries the data a caller needs to diagnose the failure. The CLI
maps them onto exit codes through :data:`EXIT_CODES`.
"""
from __future__ import annotations


class SNBumpError(Exception):
    """Base class for every package error."""

    exit_code = 3


class ConfigError(SNBumpError, ValueError):
    """Invalid user configuration."""

    exit_code = 2


class NumericalFailure(SNBumpError, ArithmeticError):
    """A numerical method did not deliver a trustworthy answer."""

    exit_code = 3


class ArtifactIOError(SNBumpError, OSError):
    """Reading or writing an artifact failed."""

    exit_code = 4


# radial core
class BracketInvalid(NumericalFailure):
    pass


class StepTooCoarse(NumericalFailure):
    pass


class TailTooShort(NumericalFailure):
    pass


class TailDivergent(NumericalFailure):
    pass


# spectra
class KernelCountMismatch(NumericalFailure):
    def __init__(self, ell: int, eigenvalues, expected: int, tol: float):
        self.ell = ell
        self.eigenvalues = list(eigenvalues)
        self.expected = expected
        self.tol = tol
        super().__init__(
            f"sector l={ell}: expected {expected} eigenvalue(s) with |mu| <= {tol:.3e}, "
            f"got {self.eigenvalues}"
        )


# ring asymptotics
class QuadratureNotConverged(NumericalFailure):
    pass


class SeparationTooSmall(ConfigError):
    pass


class NoInteriorMax(NumericalFailure):
    pass


# field engine
class BudgetExceeded(ConfigError):
    pass


class BoundaryMassTooLarge(NumericalFailure):
    pass


class RingOutOfGrid(ConfigError):
    pass


# reduction
class DegenerateConstraint(NumericalFailure):
    pass


class ContractionFailed(NumericalFailure):
    def __init__(self, message: str, kappa_history=()):
        self.kappa_history = list(kappa_history)
        super().__init__(message)


class InnerSolveStalled(NumericalFailure):
    def __init__(self, message: str, ritz_min: float = float("nan")):
        self.ritz_min = ritz_min
        super().__init__(f"{message} (smallest Ritz value estimate {ritz_min:.3e})")


class ActivationNotReached(NumericalFailure):
    pass


class MaximizerOnBoundary(NumericalFailure):
    pass


class ResidualTooLarge(NumericalFailure):
    pass


# io
class FormatVersionMismatch(ArtifactIOError):
    pass


class ChecksumMismatch(ArtifactIOError):
    pass


class CacheMismatch(ArtifactIOError):
    pass


EXIT_CODES = {"ok": 0, "config": 2, "numerical": 3, "io": 4}

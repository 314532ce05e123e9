from __future__ import annotations

from dataclasses import dataclass
from typing import Any

# This file creates a clean bridge between
# internal numerical/domain errors and
# process exit codes of the command line runner.

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


#########################################
##      DOMAIN ERROR HANDLING          ##
#########################################
class DomainError(Exception):
    """
    Base class for domain level errors.
    Carries a stable error_code and the exit code of the CLI.
    """

    error_code: str = "domain_error"
    exit_code: int = EXIT_NUMERICAL

    def __init__(self, message: str, *, details: Any | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details


class InvalidInput(DomainError):
    error_code = "invalid_input"
    exit_code = EXIT_CONFIG


class ConfigError(InvalidInput):
    error_code = "config_error"


class NumericalFailure(DomainError):
    error_code = "numerical_failure"
    exit_code = EXIT_NUMERICAL


class NotHermitian(NumericalFailure):
    error_code = "not_hermitian"


class NotPositiveDefinite(NumericalFailure):
    error_code = "not_positive_definite"


class RankDeficient(NumericalFailure):
    error_code = "rank_deficient"


class SingularBasis(NumericalFailure):
    error_code = "singular_basis"


class DegenerateNorm(NumericalFailure):
    """
    Raised when a functional family does not span the dual space.
    """

    error_code = "degenerate_norm"


class GridTooCoarse(NumericalFailure):
    error_code = "grid_too_coarse"


class QuadratureResolutionError(NumericalFailure):
    error_code = "quadrature_resolution"


class UnboundedLaw(NumericalFailure):
    error_code = "unbounded_law"


class ConvergenceError(NumericalFailure):
    """
    Raised when an iteration hits its cap.
    The best iterate found so far is kept on the error.
    """

    error_code = "convergence_error"

    def __init__(self, message: str, *, best: Any, details: Any | None = None) -> None:
        super().__init__(message, details=details)
        self.best = best


class StageFailed(DomainError):
    """
    Wraps an error raised inside a named pipeline stage.
    """

    error_code = "stage_failed"

    def __init__(self, stage: str, cause: BaseException) -> None:
        if isinstance(cause, DomainError):
            message = f"stage '{stage}' failed: {cause.message}"
            details = {"cause": cause.error_code, "details": cause.details}
            self.exit_code = cause.exit_code
        else:
            message = f"stage '{stage}' failed: {cause}"
            details = {"cause": type(cause).__name__}
        super().__init__(message, details=details)
        self.stage = stage
        self.cause = cause


#########################################
##        CLI ERROR REPORTING          ##
#########################################
@dataclass(frozen=True)
class ErrorPayload:
    """
    Standard error payload written to stderr.
    """

    error_code: str
    message: str
    exit_code: int
    details: Any | None = None


def from_domain_error(err: DomainError) -> ErrorPayload:
    return ErrorPayload(
        error_code=err.error_code,
        message=err.message,
        exit_code=err.exit_code,
        details=err.details,
    )

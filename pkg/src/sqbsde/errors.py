"""Typed failures raised across the package.

Every solver-level failure derives from :class:`SolverError` so the CLI can map
it to a nonzero exit status with the route context attached.
"""

from __future__ import annotations


class SolverError(Exception):
    """Base class for all typed failures."""


class SpliceError(SolverError):
    """Prefix and tail disagree at the splice node."""


class BlowupError(SolverError):
    """A coefficient produced a non-finite value."""

    def __init__(self, message: str, path: int, step: int):
        super().__init__(f"{message} (path {path}, step {step})")
        self.path = path
        self.step = step


class CatalogError(SolverError):
    """Unknown catalog entry or parameter."""


class AuditError(SolverError):
    """A coefficient could not be evaluated during an assumption audit."""


class PlannerOverflowError(SolverError):
    """No admissible subinterval count exists below the cap."""

    def __init__(self, message: str, binding: str):
        super().__init__(message)
        self.binding = binding


class DegenerateConstantsError(SolverError):
    """Constants make a threshold formula meaningless (for example beta = 0)."""


class BasisError(SolverError):
    """The regression design is rank deficient or too large for the sample."""


class DivergenceError(SolverError):
    """Picard iteration failed to contract."""

    def __init__(self, message: str, ratio: float, iteration: int):
        super().__init__(message)
        self.ratio = ratio
        self.iteration = iteration


class TransformDomainError(SolverError):
    """The exponential transform left the positive half-line."""


class PreconditionError(SolverError):
    """A route precondition was violated."""


class IntegrandError(SolverError):
    """A measure-change integrand is not finite."""


class ReflectionError(SolverError):
    """Invalid reflection data or projection failure."""


class OracleError(SolverError):
    """A reference oracle failed its self-convergence check."""


class ConfigError(SolverError):
    """Invalid run configuration."""

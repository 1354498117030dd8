"""Exception hierarchy."""

from __future__ import annotations


class CondStatesError(Exception):
    """Base class for every error raised by the package."""


class ShapeError(CondStatesError, ValueError):
    pass


class NotHermitianError(CondStatesError, ValueError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        super().__init__(f"matrix is not Hermitian: max|M - M^dagger| = {residual:.3e} > {tol:.1e}")


class NotPSDError(CondStatesError, ValueError):
    def __init__(self, eigenvalue: float, threshold: float):
        self.eigenvalue = eigenvalue
        super().__init__(f"matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} < -{threshold:.1e}")


class RegionMismatchError(CondStatesError, ValueError):
    pass


class InvalidStateError(CondStatesError, ValueError):
    """A value violates the invariants of its type (trace, positivity, normalization)."""


class ConventionError(CondStatesError, ValueError):
    pass


class NotCPTPError(CondStatesError, ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"state does not describe a CPTP map: {report}")


class ZeroProbabilityError(CondStatesError, ValueError):
    pass


class MalformedInputError(CondStatesError, ValueError):
    """An input document does not follow the expected file schema."""


class ScenarioError(CondStatesError):
    def __init__(self, step: str, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step!r} failed: {cause}")

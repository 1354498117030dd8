"""Numerical tolerances shared by every module.

Defaults suit double precision at dimensions up to ~64. They can be
overridden for a block of code with :func:`use_tolerances`, or per call
where a function exposes a keyword.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from collections.abc import Iterator


@dataclasses.dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    """Max-entry bound on ``M - M^dagger`` for Hermitian inputs."""
    psd: float = 1e-9
    """Relative floor on negative eigenvalues (scaled by the largest |eigenvalue|)."""
    psd_floor: float = 1e-12
    recon: float = 1e-10
    """Reconstruction and normalization residuals."""
    trace: float = 1e-10
    support: float = 1e-9
    """Support cutoff relative to the largest eigenvalue."""

    def psd_threshold(self, scale: float) -> float:
        return max(self.psd * scale, self.psd_floor)


_CURRENT: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "condstates_tolerances", default=Tolerances()
)


def get_tolerances() -> Tolerances:
    return _CURRENT.get()


@contextlib.contextmanager
def use_tolerances(tol: Tolerances | None = None, **overrides: float) -> Iterator[Tolerances]:
    """Temporarily replace the active tolerances (context-local, thread safe)."""
    base = tol if tol is not None else _CURRENT.get()
    new = dataclasses.replace(base, **overrides)
    token = _CURRENT.set(new)
    try:
        yield new
    finally:
        _CURRENT.reset(token)

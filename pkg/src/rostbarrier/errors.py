"""Exception types shared across the package."""

from __future__ import annotations


class RostBarrierError(Exception):
    """Base class for all package errors."""


class MeasureError(RostBarrierError, ValueError):
    """A measure specification is malformed or violates a standing assumption."""


class NumericalDomainError(RostBarrierError, ArithmeticError):
    """A numerical routine was called outside its domain or produced non-finite values."""


class NoSignChange(RostBarrierError):
    """The boundary residual did not change sign on the search bracket."""

    def __init__(self, k: int, side: str, detail: str = "") -> None:
        self.k = k
        self.side = side
        msg = f"no sign change in residual at node k={k}, side={side}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SweepDivergence(RostBarrierError):
    """Alternating two-sided sweeps failed to reach a joint fixed point."""

    def __init__(self, k: int, sweeps: int) -> None:
        self.k = k
        self.sweeps = sweeps
        super().__init__(f"two-sided sweeps did not converge at node k={k} after {sweeps} sweeps")


class UnsupportedSampling(RostBarrierError):
    """Monte Carlo sampling was requested from a measure with a singular component."""


class ConfigError(RostBarrierError, ValueError):
    """A run configuration failed validation."""


class InsufficientSamples(RostBarrierError, ValueError):
    """A statistical test was given fewer samples than it needs."""

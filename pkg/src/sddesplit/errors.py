"""Exception types shared across the package."""

from __future__ import annotations


class ParameterError(ValueError):
    """A model, mesh or study parameter violates its contract."""


class TrajectoryError(RuntimeError):
    """A simulated path left the representable range (NaN or infinity).

    Carries enough context to locate the failure: the zero-based step
    index at which the first non-finite value appeared and the
    corresponding mesh time.
    """

    def __init__(self, message: str, step: int, time: float):
        super().__init__(message)
        self.step = step
        self.time = time

"""Exact flow factor of the undelayed linear part.

With the two independent drivers B1 and B2 and correlation rho, the
homogeneous equation dX = mu X dt + sigma X dW1 is solved over any
interval [s, t] by multiplying the state with

    exp{ (mu - sigma**2 / 2) (t - s)
         + sigma * (sqrt(1 - rho**2) * (B1(t) - B1(s)) + rho * (B2(t) - B2(s))) }

The factor depends on the interval only through its length and the two
Brownian increments, which is what :class:`IntervalIncrement` carries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import SddeProblem


@dataclass(frozen=True)
class IntervalIncrement:
    """Length of one time interval and the driver increments over it."""

    dt: float
    dB1: float
    dB2: float

    def __post_init__(self):
        if self.dt < 0.0:
            raise ParameterError("interval length must be non-negative")


def log_flow_factor(problem: SddeProblem, dt, dB1, dB2):
    """Exponent of the flow factor; accepts scalars or aligned arrays."""
    weight1 = math.sqrt(1.0 - problem.rho * problem.rho) * problem.sigma
    weight2 = problem.rho * problem.sigma
    drift = problem.mu - 0.5 * problem.sigma * problem.sigma
    return drift * dt + weight1 * dB1 + weight2 * dB2


def flow_factor(problem: SddeProblem, inc: IntervalIncrement) -> float:
    """Multiplicative factor applied by the exact linear flow over ``inc``.

    Always positive; over a zero-length interval it is exactly 1.
    Factors over adjacent intervals compose by multiplication.
    """
    return math.exp(log_flow_factor(problem, inc.dt, inc.dB1, inc.dB2))


def flow_factor_inverse(problem: SddeProblem, inc: IntervalIncrement) -> float:
    """Reciprocal flow factor, computed with a negated exponent."""
    return math.exp(-log_flow_factor(problem, inc.dt, inc.dB1, inc.dB2))

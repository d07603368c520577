"""Problem definition for the scalar semilinear delay equation.

The equation solved throughout the package is

    dX(t) = [mu * X(t) + f(X(t - tau))] dt
            + sigma * X(t) dW1(t) + g(X(t - tau)) dW2(t)

on [0, T], where (W1, W2) is a pair of standard Brownian motions with
correlation rho, and X equals a deterministic initial segment psi on
[-tau, 0].  The linear part (mu, sigma) is solved exactly by the
propagator module; f and g are arbitrary scalar maps evaluated at the
delayed state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError

Coefficient = Callable[[np.ndarray], np.ndarray]

_REL_TOL = 1e-12
_PROBE_PAIR_LIMIT = 256


def linear_map(slope: float) -> Coefficient:
    """Return the coefficient x -> slope * x."""
    c = float(slope)

    def _linear(x):
        return c * np.asarray(x, dtype=np.float64)

    _linear.__name__ = f"linear_{c:g}"
    return _linear


def zero_map() -> Coefficient:
    """Return the identically-zero coefficient."""

    def _zero(x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    return _zero


def parse_coefficient(spec: str) -> Coefficient:
    """Build a coefficient from a text spec, ``"zero"`` or ``"linear:<c>"``."""
    text = spec.strip()
    if text == "zero":
        return zero_map()
    if text.startswith("linear:"):
        try:
            return linear_map(float(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ParameterError(f"bad linear coefficient spec {spec!r}") from exc
    raise ParameterError(f"unknown coefficient spec {spec!r}; expected 'zero' or 'linear:<c>'")


def evaluate_coefficient(fn: Coefficient, x: np.ndarray) -> np.ndarray:
    """Evaluate a coefficient on an array, tolerating scalar-only callables."""
    x = np.asarray(x, dtype=np.float64)
    out = np.asarray(fn(x), dtype=np.float64)
    if out.shape == x.shape:
        return out
    if out.ndim == 0:
        # constant map written as a scalar lambda
        return np.full(x.shape, float(out))
    raise ParameterError(
        "coefficient callable must map an array of shape "
        f"{x.shape} to the same shape, got {out.shape}")


@dataclass(frozen=True)
class SddeProblem:
    """Validated parameter set for one equation instance.

    Parameters
    ----------
    mu, sigma : float
        Drift and diffusion rates of the undelayed linear part.
    rho : float
        Correlation of the two driving Brownian motions, in (-1, 1).
    tau : float
        Delay length, positive.
    horizon : float
        Final time T; must be a whole number of delay lengths.
    f, g : callable
        Delayed drift and delayed diffusion coefficients.  Must accept
        numpy arrays (scalar-only constants are broadcast).
    psi : float or callable
        Initial segment on [-tau, 0]; a float means the constant function.
    """

    mu: float
    sigma: float
    rho: float
    tau: float
    horizon: float
    f: Coefficient = field(repr=False)
    g: Coefficient = field(repr=False)
    psi: object = 1.0

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if not self.horizon > 0.0:
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if not -1.0 < self.rho < 1.0:
            raise ParameterError(
                f"rho must lie in the open interval (-1, 1), got {self.rho}")
        ratio = self.horizon / self.tau
        if abs(ratio - round(ratio)) > _REL_TOL * max(1.0, abs(ratio)):
            raise ParameterError(
                f"horizon must be an integer multiple of tau, got T/tau={ratio!r}")
        if not callable(self.f) or not callable(self.g):
            raise ParameterError("f and g must be callables")
        if not (callable(self.psi) or isinstance(self.psi, (int, float))):
            raise ParameterError("psi must be a float or a callable of time")

    @property
    def delay_intervals(self) -> int:
        """Number of whole delay lengths in the horizon."""
        return round(self.horizon / self.tau)

    def initial_values(self, times: np.ndarray) -> np.ndarray:
        """Evaluate the initial segment psi at times in [-tau, 0]."""
        times = np.asarray(times, dtype=np.float64)
        if callable(self.psi):
            out = np.asarray(self.psi(times), dtype=np.float64)
            if out.ndim == 0:
                out = np.full(times.shape, float(out))
            return out
        return np.full(times.shape, float(self.psi))


def make_problem(*, mu: float, sigma: float, rho: float, tau: float,
                 horizon: float, f: Coefficient | None = None,
                 g: Coefficient | None = None, psi=1.0) -> SddeProblem:
    """Construct and validate an :class:`SddeProblem`.

    Omitted f or g default to the zero map; psi defaults to the constant 1.
    """
    return SddeProblem(mu=float(mu), sigma=float(sigma), rho=float(rho),
                       tau=float(tau), horizon=float(horizon),
                       f=f if f is not None else zero_map(),
                       g=g if g is not None else zero_map(),
                       psi=psi)


@dataclass(frozen=True)
class AssumptionReport:
    """Empirical structure constants of the delayed coefficients.

    ``linear_growth_K`` bounds max(f(x)**2, g(x)**2) / (1 + x**2) on the
    probe grid; ``g_lipschitz_C`` is the largest difference quotient of g
    over probe pairs; ``f_onesided_C`` is the largest (signed) one-sided
    slope (x - y)(f(x) - f(y)) / (x - y)**2.  These are sampled maxima,
    not proofs: they flag obviously unbounded coefficients and feed
    diagnostics, nothing more.
    """

    linear_growth_K: float
    g_lipschitz_C: float
    f_onesided_C: float
    sample_radius: float
    sample_count: int


def probe_assumptions(problem: SddeProblem, radius: float, n: int) -> AssumptionReport:
    """Estimate coefficient structure constants by exhaustive grid evaluation.

    Points are an evenly spaced grid of ``n`` values on
    ``[-radius, radius]`` including both endpoints, so maxima attained on
    the boundary are hit exactly and repeated calls are deterministic.
    Two-argument conditions use all pairs over an evenly strided subsample
    of at most 256 points.
    """
    if radius <= 0.0:
        raise ParameterError("probe radius must be positive")
    if n < 2:
        raise ParameterError("probe needs at least two sample points")
    xs = np.linspace(-radius, radius, n)
    fx = evaluate_coefficient(problem.f, xs)
    gx = evaluate_coefficient(problem.g, xs)

    growth = np.maximum(fx * fx, gx * gx) / (1.0 + xs * xs)
    linear_growth_K = float(np.max(growth))

    take = min(n, _PROBE_PAIR_LIMIT)
    sub = np.unique(np.linspace(0, n - 1, take).astype(int))
    x_s, f_s, g_s = xs[sub], fx[sub], gx[sub]
    i, j = np.triu_indices(x_s.size, k=1)
    dx = x_s[i] - x_s[j]
    g_lipschitz_C = float(np.max(np.abs(g_s[i] - g_s[j]) / np.abs(dx)))
    f_onesided_C = float(np.max((f_s[i] - f_s[j]) / dx))

    return AssumptionReport(linear_growth_K=linear_growth_K,
                            g_lipschitz_C=g_lipschitz_C,
                            f_onesided_C=f_onesided_C,
                            sample_radius=float(radius), sample_count=int(n))

"""High-accuracy reference solution by the method of steps.

On each delay interval [j tau, (j+1) tau] the delayed state is a known
function psi_j(s) = X(s - tau), so the equation reduces to a linear SDE
with inhomogeneous terms.  Its exact solution,

    X(t) = F(t) * ( X(j tau)
                    + integral of F(s)^-1 [f(psi_j(s)) - rho sigma g(psi_j(s))] ds
                    + integral of F(s)^-1 g(psi_j(s)) dB2(s) ),

with F the flow factor started at j tau, is discretised on the fine
lattice: the ds-integral with the trapezoid rule and the dB2-integral
with the left-endpoint rectangle rule, which keeps the integrand
non-anticipating.  Marching the intervals in order yields the reference
path on the whole horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, TrajectoryError
from .model import SddeProblem, evaluate_coefficient
from .noise import BrownianLattice
from .propagator import log_flow_factor

_CROSS_CHECK_REL = 1e-10
_ALIGN_ABS = 1e-9

DS_RULE = "trapezoid"
ITO_RULE = "left-rectangle"


@dataclass(frozen=True)
class ReferencePath:
    """Reference trajectory on the fine mesh, including the initial segment.

    ``values[i]`` is the state at time ``-tau + i * dt_fine``; the array
    covers [-tau, T].  ``n_steps`` counts fine steps on [0, T] only.
    """

    dt_fine: float
    tau: float
    n_steps: int
    values: np.ndarray
    ds_rule: str = DS_RULE
    ito_rule: str = ITO_RULE

    @property
    def steps_per_delay(self) -> int:
        return round(self.tau / self.dt_fine)

    @property
    def times(self) -> np.ndarray:
        """Node times from -tau to T."""
        return -self.tau + np.arange(self.values.size) * self.dt_fine


def _delay_steps(problem: SddeProblem, dt_fine: float) -> int:
    ratio = problem.tau / dt_fine
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-12 * max(1.0, ratio):
        raise ParameterError(
            f"dt_fine={dt_fine!r} must divide the delay tau={problem.tau} exactly")
    return k


def exact_path(problem: SddeProblem, lattice: BrownianLattice,
               rho: float | None = None) -> ReferencePath:
    """Integrate the reference solution over the whole horizon.

    Parameters
    ----------
    problem : SddeProblem
    lattice : BrownianLattice
        Fine increments covering exactly [0, horizon]; the mesh width must
        divide tau exactly.
    rho : float, optional
        Correlation override.  Defaults to ``problem.rho``; a sweep can
        reuse one problem definition across correlation values.

    Returns
    -------
    ReferencePath

    Notes
    -----
    The reciprocal flow factor at the fine nodes is accumulated as a
    running product of per-step reciprocal factors; at the end of every
    delay interval it is cross-checked against the exponential of the
    summed exponents and the path is rejected if the two drift apart.
    """
    if rho is None:
        rho = problem.rho
    if not -1.0 < rho < 1.0:
        raise ParameterError("rho must lie in the open interval (-1, 1)")
    steps = problem.horizon / lattice.dt_fine
    if abs(steps - round(steps)) > 1e-12 * max(1.0, steps) \
            or round(steps) != lattice.n_steps:
        raise ParameterError(
            f"lattice spans {lattice.span!r}, problem horizon is {problem.horizon!r}")
    k_delay = _delay_steps(problem, lattice.dt_fine)
    m_intervals = problem.delay_intervals
    dt = lattice.dt_fine
    n_total = m_intervals * k_delay
    if n_total != lattice.n_steps:
        raise ParameterError("lattice step count does not match horizon/tau layout")

    drift = (problem.mu - 0.5 * problem.sigma * problem.sigma) * dt
    w1 = math.sqrt(1.0 - rho * rho) * problem.sigma
    w2 = rho * problem.sigma
    cross = rho * problem.sigma

    values = np.empty(n_total + k_delay + 1)
    values[:k_delay + 1] = problem.initial_values(
        (np.arange(k_delay + 1) - k_delay) * dt)

    ones_head = np.ones(1)
    for j in range(m_intervals):
        lo = j * k_delay
        d1 = lattice.dB1[lo:lo + k_delay]
        d2 = lattice.dB2[lo:lo + k_delay]
        exponents = drift + w1 * d1 + w2 * d2
        step_flows = np.exp(exponents)
        flow = np.concatenate([ones_head, np.cumprod(step_flows)])
        flow_inv = np.concatenate([ones_head, np.cumprod(1.0 / step_flows)])
        # guard against accumulated product drift over long intervals
        direct = math.exp(-float(exponents.sum()))
        if abs(flow_inv[-1] - direct) > _CROSS_CHECK_REL * abs(direct):
            raise TrajectoryError(
                f"reciprocal flow product drifted from its exponent sum on "
                f"delay interval {j}", step=lo + k_delay - 1,
                time=(j + 1) * problem.tau)

        delayed = values[lo:lo + k_delay + 1]
        f_del = evaluate_coefficient(problem.f, delayed)
        g_del = evaluate_coefficient(problem.g, delayed)

        ds_integrand = flow_inv * (f_del - cross * g_del)
        ds_cum = np.empty(k_delay + 1)
        ds_cum[0] = 0.0
        np.cumsum((ds_integrand[:-1] + ds_integrand[1:]) * (0.5 * dt), out=ds_cum[1:])

        ito_integrand = flow_inv[:-1] * g_del[:-1]
        ito_cum = np.empty(k_delay + 1)
        ito_cum[0] = 0.0
        np.cumsum(ito_integrand * d2, out=ito_cum[1:])

        start_value = values[k_delay + lo]
        segment = flow * (start_value + ds_cum + ito_cum)
        if not np.isfinite(segment).all():
            bad = int(np.argmin(np.isfinite(segment)))
            raise TrajectoryError(
                f"reference path non-finite on delay interval {j} at fine node {bad}",
                step=lo + bad, time=j * problem.tau + bad * dt)
        values[k_delay + lo:k_delay + lo + k_delay + 1] = segment

    return ReferencePath(dt_fine=dt, tau=problem.tau, n_steps=n_total, values=values)


def sample_at(path: ReferencePath, times: np.ndarray) -> np.ndarray:
    """Return stored path values at the requested times.

    Every requested time must coincide with a fine node to within 1e-9;
    values are read out exactly, never interpolated.
    """
    times = np.asarray(times, dtype=np.float64)
    position = (times + path.tau) / path.dt_fine
    index = np.rint(position).astype(np.int64)
    aligned = np.abs(index * path.dt_fine - path.tau - times) <= _ALIGN_ABS
    if not aligned.all():
        bad = times[~aligned][0]
        raise ParameterError(
            f"requested time {bad!r} is not within 1e-9 of a fine mesh node")
    if index.min() < 0 or index.max() >= path.values.size:
        raise ParameterError("requested time lies outside the stored path")
    return path.values[index]

"""Splitting integrators for the delay equation.

Both integrators split the equation into the delayed nonlinear part,
advanced with one explicit Euler-Maruyama substep, and the undelayed
linear part, advanced exactly with the flow factor of the propagator
module.  The Lie-Trotter composition applies the two substeps once per
step; the Strang composition surrounds the full-step linear flow with two
half-length delayed substeps.  The delayed argument is held at the lagged
mesh value X((n - L) dt) for every substep within step n.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, TrajectoryError
from .model import SddeProblem, evaluate_coefficient
from .noise import BrownianLattice
from .propagator import IntervalIncrement, flow_factor, log_flow_factor

_LAG_REL_TOL = 1e-9


@dataclass(frozen=True)
class UniformMesh:
    """Uniform time mesh on [0, T] with the delay lag expressed in steps.

    ``lag`` is floor(tau / dt): the number of whole steps by which the
    delayed argument trails the current one.
    """

    dt: float
    n_steps: int
    lag: int


def mesh_for(problem: SddeProblem, dt: float) -> UniformMesh:
    """Build the mesh of width ``dt`` covering the problem horizon.

    ``dt`` must be smaller than min(tau, 1) and divide the horizon to
    within relative 1e-12.  When tau is not a whole number of steps the
    lag is floored and a warning is issued, since the effective delay is
    then biased by up to one step.
    """
    if dt <= 0.0:
        raise ParameterError("dt must be positive")
    if dt >= min(problem.tau, 1.0):
        raise ParameterError(
            f"dt must be smaller than min(tau, 1) = {min(problem.tau, 1.0)}, got {dt}")
    steps = problem.horizon / dt
    n_steps = round(steps)
    if abs(steps - n_steps) > 1e-12 * max(1.0, steps):
        raise ParameterError(
            f"dt={dt} does not divide the horizon {problem.horizon}")
    ratio = problem.tau / dt
    lag = round(ratio)
    if abs(ratio - lag) > _LAG_REL_TOL * max(1.0, ratio):
        lag = math.floor(ratio)
        warnings.warn(
            f"tau/dt = {ratio!r} is not a whole number; the delayed argument "
            f"uses the floored lag of {lag} steps", stacklevel=2)
    return UniformMesh(dt=dt, n_steps=n_steps, lag=lag)


@dataclass(frozen=True)
class TrajectoryGrid:
    """One simulated trajectory on a uniform mesh.

    ``history[i]`` holds the initial segment at time (i - lag) * dt for
    i = 0 .. lag, so ``history[-1]`` is the time-zero value and equals
    ``values[0]``.  ``values[n]`` is the state at time n * dt.
    """

    mesh: UniformMesh
    history: np.ndarray
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        """Mesh times 0, dt, ..., T."""
        return np.arange(self.mesh.n_steps + 1) * self.mesh.dt


def delay_substep(problem: SddeProblem, r: float, r_tau: float, span: float,
                  dB2: float) -> float:
    """Euler-Maruyama substep of the delayed part over one interval.

    Advances state ``r`` using the delayed state ``r_tau`` frozen over
    the whole span:  r + f(r_tau) * span + g(r_tau) * dB2.
    """
    f_val = float(evaluate_coefficient(problem.f, np.asarray(r_tau)))
    g_val = float(evaluate_coefficient(problem.g, np.asarray(r_tau)))
    return r + f_val * span + g_val * dB2


def linear_substep(problem: SddeProblem, r: float, inc: IntervalIncrement) -> float:
    """Exact substep of the undelayed linear part: multiply by the flow factor."""
    return r * flow_factor(problem, inc)


def _history_values(problem: SddeProblem, mesh: UniformMesh) -> np.ndarray:
    times = (np.arange(mesh.lag + 1) - mesh.lag) * mesh.dt
    return problem.initial_values(times)


def _delayed_block(history: np.ndarray, values: np.ndarray, start: int,
                   stop: int, lag: int) -> np.ndarray:
    # Delayed indices n - lag for n in [start, stop); with blocks no longer
    # than the lag these never reach into the block being written.
    if start < lag:
        return history[start:stop]
    return values[start - lag:stop - lag]


def _check_finite(values: np.ndarray, start: int, stop: int, dt: float,
                  label: str) -> None:
    block = values[start + 1:stop + 1]
    if np.isfinite(block).all():
        return
    local = int(np.argmin(np.isfinite(block)))
    step = start + local
    raise TrajectoryError(
        f"{label} produced a non-finite value at step {step} (t={((step + 1) * dt)!r})",
        step=step, time=(step + 1) * dt)


def _validate_noise(mesh: UniformMesh, noise: BrownianLattice, per_step: int) -> None:
    want_steps = mesh.n_steps * per_step
    want_dt = mesh.dt / per_step
    if noise.n_steps != want_steps:
        raise ParameterError(
            f"noise lattice has {noise.n_steps} increments, mesh needs {want_steps}")
    if abs(noise.dt_fine - want_dt) > 1e-12 * want_dt:
        raise ParameterError(
            f"noise lattice width {noise.dt_fine!r} does not match mesh width {want_dt!r}")


def lie_trotter(problem: SddeProblem, mesh: UniformMesh,
                noise: BrownianLattice) -> TrajectoryGrid:
    """Run the Lie-Trotter composition over the whole mesh.

    ``noise`` must supply one increment pair per mesh step.  Each step
    applies the delayed Euler-Maruyama substep over the full step, then
    the exact linear flow:

        X[n+1] = flow * (X[n] + dt * f(X[n-L]) + g(X[n-L]) * dB2[n])

    Parameters
    ----------
    problem : SddeProblem
    mesh : UniformMesh
    noise : BrownianLattice
        Increments at exactly the mesh resolution.

    Returns
    -------
    TrajectoryGrid
    """
    _validate_noise(mesh, noise, per_step=1)
    lag, dt, n = mesh.lag, mesh.dt, mesh.n_steps
    history = _history_values(problem, mesh)
    values = np.empty(n + 1)
    values[0] = history[-1]
    block = max(lag, 1)
    for start in range(0, n, block):
        stop = min(start + block, n)
        delayed = _delayed_block(history, values, start, stop, lag)
        f_del = evaluate_coefficient(problem.f, delayed)
        g_del = evaluate_coefficient(problem.g, delayed)
        d2 = noise.dB2[start:stop]
        flows = np.exp(log_flow_factor(problem, dt, noise.dB1[start:stop], d2))
        x = values[start]
        for i in range(stop - start):
            x = flows[i] * (x + dt * f_del[i] + g_del[i] * d2[i])
            values[start + 1 + i] = x
        _check_finite(values, start, stop, dt, "lie_trotter")
    return TrajectoryGrid(mesh=mesh, history=history, values=values)


def strang(problem: SddeProblem, mesh: UniformMesh,
           half_step_noise: BrownianLattice) -> TrajectoryGrid:
    """Run the Strang composition over the whole mesh.

    ``half_step_noise`` must supply increments at half the mesh width, two
    per step; the full-step linear flow uses the sum of each half-step
    pair.  Each step applies a half-length delayed substep, the full-step
    linear flow, then a second half-length delayed substep, all with the
    same lagged argument X[n-L]:

        Y     = X[n] + (dt/2) * f(X[n-L]) + g(X[n-L]) * dB2_first
        X[n+1] = Y * flow + (dt/2) * f(X[n-L]) + g(X[n-L]) * dB2_second
    """
    _validate_noise(mesh, half_step_noise, per_step=2)
    lag, dt, n = mesh.lag, mesh.dt, mesh.n_steps
    history = _history_values(problem, mesh)
    values = np.empty(n + 1)
    values[0] = history[-1]
    d1 = half_step_noise.dB1.reshape(n, 2)
    d2 = half_step_noise.dB2.reshape(n, 2)
    d2_first, d2_second = d2[:, 0], d2[:, 1]
    flows = np.exp(log_flow_factor(problem, dt, d1.sum(axis=1), d2.sum(axis=1)))
    half = 0.5 * dt
    block = max(lag, 1)
    for start in range(0, n, block):
        stop = min(start + block, n)
        delayed = _delayed_block(history, values, start, stop, lag)
        f_del = evaluate_coefficient(problem.f, delayed)
        g_del = evaluate_coefficient(problem.g, delayed)
        x = values[start]
        for i in range(stop - start):
            k = start + i
            drift = half * f_del[i]
            x = (x + drift + g_del[i] * d2_first[k]) * flows[k] \
                + drift + g_del[i] * d2_second[k]
            values[k + 1] = x
        _check_finite(values, start, stop, dt, "strang")
    return TrajectoryGrid(mesh=mesh, history=history, values=values)

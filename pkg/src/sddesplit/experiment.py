"""Monte Carlo strong-convergence studies.

A study fixes one correlation value, simulates an ensemble of
trajectories, and for each step size in a grid measures the root mean
square gap between a splitting scheme and the reference solution driven
by the same Brownian lattice.  One fine lattice per trajectory serves the
reference and, by block-summing, every coarser scheme run, so scheme and
reference always see the same underlying path.  The decay of the RMS
error with the step size is summarised by a log-log regression slope;
slopes over disjoint trajectory groups give a spread estimate.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import SddeProblem
from .noise import coarsen, generate_lattice
from .reference import exact_path, sample_at
from .schemes import lie_trotter, mesh_for, strang

_ZERO_ERROR_FLOOR = 1e-12
_FLOAT_FMT = "%.15e"

ERRORS_CSV_COLUMNS = ("scheme", "rho", "dt", "rms_error", "group_id", "group_rms")
ORDERS_CSV_COLUMNS = ("scheme", "rho", "gamma", "gamma_std", "log_intercept",
                      "residual", "n_trajectories", "dt_reference")


class Scheme(enum.Enum):
    """Available splitting compositions."""

    LIE_TROTTER = "lie-trotter"
    STRANG = "strang"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        for member in cls:
            if member.value == name:
                return member
        raise ParameterError(
            f"unknown scheme {name!r}; expected one of "
            + ", ".join(m.value for m in cls))


@dataclass(frozen=True)
class StudyConfig:
    """Full description of one convergence study or sweep.

    ``dt_reference`` must divide every grid step size and every half step
    size, so one fine lattice can be coarsened consistently for both
    schemes.  Trajectories are split into ``n_groups`` contiguous groups
    of ``group_size`` for spread estimates.
    """

    problem: SddeProblem
    scheme: Scheme
    rho_grid: tuple[float, ...]
    dt_grid: tuple[float, ...]
    dt_reference: float
    n_trajectories: int
    n_groups: int
    group_size: int
    master_seed: int

    def __post_init__(self):
        object.__setattr__(self, "rho_grid", tuple(float(r) for r in self.rho_grid))
        object.__setattr__(self, "dt_grid", tuple(float(d) for d in self.dt_grid))
        if not self.dt_grid:
            raise ParameterError("dt_grid must not be empty")
        if not self.rho_grid:
            raise ParameterError("rho_grid must not be empty")
        for rho in self.rho_grid:
            if not -1.0 < rho < 1.0:
                raise ParameterError(f"rho grid value {rho} outside (-1, 1)")
        if self.dt_reference <= 0.0:
            raise ParameterError("dt_reference must be positive")
        for dt in self.dt_grid:
            half_ratio = 0.5 * dt / self.dt_reference
            if abs(half_ratio - round(half_ratio)) > 1e-9 or round(half_ratio) < 1:
                raise ParameterError(
                    f"dt_reference={self.dt_reference!r} must divide dt/2 for "
                    f"every grid step, violated at dt={dt!r}")
        if self.n_trajectories < 1:
            raise ParameterError("n_trajectories must be positive")
        if self.n_groups < 1 or self.group_size < 1 \
                or self.n_groups * self.group_size != self.n_trajectories:
            raise ParameterError(
                "n_groups * group_size must equal n_trajectories, got "
                f"{self.n_groups} * {self.group_size} != {self.n_trajectories}")
        if not 0 <= self.master_seed < 2**64:
            raise ParameterError("master_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class OrderFit:
    """Least-squares summary of log(error) against log(dt).

    ``gamma`` is the slope, ``log_intercept`` the intercept in natural
    logs, ``residual`` the RMS of the log-space fit residuals and
    ``gamma_std`` the sample standard deviation of per-group slopes
    (zero when no group information entered the fit).
    """

    gamma: float
    log_intercept: float
    gamma_std: float
    residual: float


@dataclass(frozen=True)
class ErrorRow:
    """RMS errors for one (rho, dt) cell: ensemble value and per-group values."""

    rho: float
    dt: float
    rms_error: float
    group_rms: np.ndarray


@dataclass(frozen=True)
class StudyResult:
    """Outcome of one convergence study at a fixed correlation."""

    scheme: Scheme
    rho: float
    rows: tuple[ErrorRow, ...]
    fit: OrderFit | None
    group_gammas: np.ndarray | None


def rms_error(errors: np.ndarray) -> float:
    """Worst-node RMS of a trajectory-by-meshpoint error matrix.

    Computes sqrt(mean over trajectories of squared error) at every mesh
    point and returns the maximum over mesh points.
    """
    errors = np.asarray(errors, dtype=np.float64)
    if errors.ndim != 2 or errors.size == 0:
        raise ParameterError(
            "errors must be a non-empty 2-d array (trajectories, meshpoints)")
    return float(np.sqrt(np.max(np.mean(errors * errors, axis=0))))


def fit_order(points: list[tuple[float, float]]) -> OrderFit:
    """Fit log(error) = gamma * log(dt) + intercept by least squares.

    Points with non-positive or non-finite error are excluded with a
    warning; at least two distinct step sizes must survive.
    """
    kept = [(dt, err) for dt, err in points
            if np.isfinite(err) and err > 0.0 and dt > 0.0]
    if len(kept) < len(points):
        warnings.warn("order fit dropped points with non-positive error",
                      stacklevel=2)
    if len({dt for dt, _ in kept}) < 2:
        raise ParameterError("order fit needs at least two distinct step sizes")
    log_dt = np.log([dt for dt, _ in kept])
    log_err = np.log([err for _, err in kept])
    gamma, intercept = np.polyfit(log_dt, log_err, 1)
    resid = log_err - (gamma * log_dt + intercept)
    return OrderFit(gamma=float(gamma), log_intercept=float(intercept),
                    gamma_std=0.0, residual=float(np.sqrt(np.mean(resid * resid))))


def _trajectory_squared_errors(problem: SddeProblem, config: StudyConfig,
                               index: int, n_fine: int,
                               meshes) -> dict[float, np.ndarray]:
    lattice = generate_lattice(config.master_seed, index, n_fine,
                               config.dt_reference)
    reference = exact_path(problem, lattice)
    out = {}
    for dt, mesh in meshes.items():
        factor = round(dt / config.dt_reference)
        if config.scheme is Scheme.LIE_TROTTER:
            grid = lie_trotter(problem, mesh, coarsen(lattice, factor))
        else:
            grid = strang(problem, mesh, coarsen(lattice, factor // 2))
        gap = grid.values - sample_at(reference, grid.times)
        out[dt] = gap * gap
    return out


def run_convergence_study(config: StudyConfig, rho: float,
                          threads: int = 1) -> StudyResult:
    """Measure RMS errors and the convergence order at one correlation.

    Every trajectory draws one fine lattice keyed by (master seed,
    trajectory index); the reference and all scheme runs for that
    trajectory are driven by coarsenings of that same lattice.  Squared
    errors are accumulated per group in trajectory-index order, so the
    result is identical for any ``threads`` value.

    Returns
    -------
    StudyResult
        Per-dt ensemble and group RMS errors, the ensemble order fit
        (None when every error sits at the zero floor) and the per-group
        slopes behind ``fit.gamma_std``.
    """
    problem = dataclasses.replace(config.problem, rho=float(rho))
    fine_steps = problem.horizon / config.dt_reference
    n_fine = round(fine_steps)
    if abs(fine_steps - n_fine) > 1e-9:
        raise ParameterError("dt_reference must divide the horizon")
    meshes = {dt: mesh_for(problem, dt) for dt in config.dt_grid}

    sums = {dt: np.zeros((config.n_groups, mesh.n_steps + 1))
            for dt, mesh in meshes.items()}

    def worker(index: int) -> dict[float, np.ndarray]:
        return _trajectory_squared_errors(problem, config, index, n_fine, meshes)

    indices = range(config.n_trajectories)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(worker, indices)
            for index, sq in zip(indices, results):
                group = index // config.group_size
                for dt in config.dt_grid:
                    sums[dt][group] += sq[dt]
    else:
        for index in indices:
            sq = worker(index)
            group = index // config.group_size
            for dt in config.dt_grid:
                sums[dt][group] += sq[dt]

    rows = []
    for dt in config.dt_grid:
        per_group = sums[dt]
        ensemble_ms = per_group.sum(axis=0) / config.n_trajectories
        group_ms = per_group / config.group_size
        rows.append(ErrorRow(
            rho=float(rho), dt=float(dt),
            rms_error=float(np.sqrt(ensemble_ms.max())),
            group_rms=np.sqrt(group_ms.max(axis=1))))

    fit = None
    group_gammas = None
    ensemble_points = [(row.dt, row.rms_error) for row in rows]
    floored = [err for _, err in ensemble_points if err < _ZERO_ERROR_FLOOR]
    if floored:
        warnings.warn(
            f"{len(floored)} RMS errors below {_ZERO_ERROR_FLOOR:g}; the scheme "
            "reproduces the reference to rounding and no order can be fitted",
            stacklevel=2)
    points = [(dt, err) for dt, err in ensemble_points
              if err >= _ZERO_ERROR_FLOOR]
    if len({dt for dt, _ in points}) >= 2:
        base = fit_order(points)
        slopes = []
        for g in range(config.n_groups):
            group_points = [(row.dt, float(row.group_rms[g])) for row in rows
                            if row.group_rms[g] >= _ZERO_ERROR_FLOOR]
            if len({dt for dt, _ in group_points}) >= 2:
                slopes.append(fit_order(group_points).gamma)
        group_gammas = np.array(slopes)
        spread = float(np.std(group_gammas, ddof=1)) if group_gammas.size >= 2 else 0.0
        fit = dataclasses.replace(base, gamma_std=spread)
    return StudyResult(scheme=config.scheme, rho=float(rho), rows=tuple(rows),
                       fit=fit, group_gammas=group_gammas)


def run_rho_sweep(config: StudyConfig, threads: int = 1) -> list[StudyResult]:
    """Run one convergence study per correlation in the grid.

    The master seed is shared across correlations, so every study sees
    the identical family of Brownian lattices and only the correlation
    transform differs.
    """
    return [run_convergence_study(config, rho, threads=threads)
            for rho in config.rho_grid]


def write_errors_csv(results: list[StudyResult], path) -> None:
    """Write per-(rho, dt, group) RMS errors.

    One row per group, with the ensemble RMS repeated alongside each
    group value.  Floats are rendered in scientific notation with more
    than twelve significant digits so values round-trip exactly.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ERRORS_CSV_COLUMNS)
        for result in results:
            for row in result.rows:
                for group_id, group_value in enumerate(row.group_rms):
                    writer.writerow([
                        result.scheme.value,
                        _FLOAT_FMT % row.rho,
                        _FLOAT_FMT % row.dt,
                        _FLOAT_FMT % row.rms_error,
                        group_id,
                        _FLOAT_FMT % group_value,
                    ])


def write_orders_csv(results: list[StudyResult], config: StudyConfig, path) -> None:
    """Write one fitted-order row per correlation value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ORDERS_CSV_COLUMNS)
        for result in results:
            fit = result.fit
            writer.writerow([
                result.scheme.value,
                _FLOAT_FMT % result.rho,
                _FLOAT_FMT % (fit.gamma if fit else float("nan")),
                _FLOAT_FMT % (fit.gamma_std if fit else float("nan")),
                _FLOAT_FMT % (fit.log_intercept if fit else float("nan")),
                _FLOAT_FMT % (fit.residual if fit else float("nan")),
                config.n_trajectories,
                _FLOAT_FMT % config.dt_reference,
            ])

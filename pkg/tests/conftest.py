"""Shared fixtures: example problems, desk-scale studies and a recorder
that prints one line per acceptance criterion at the end of the run.

The statistical fixtures are expensive (tens of seconds together), so
they are session scoped and shared between the module tests and the
acceptance tests.  All of them use the package's default master seed so
the suite reproduces exactly what the CLI defaults produce.
"""

import math

import numpy as np
import pytest

import sddesplit as S

DESK_DT_GRID = tuple(2.0 ** -k for k in range(6, 11))
DESK_DT_REFERENCE = 2.0 ** -14
DESK_SEED = 47

_CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _CRITERION_LINES:
        terminalreporter.write_line(line)


@pytest.fixture()
def record_criterion():
    """Return a callable that logs one PASS/FAIL line per criterion."""

    def _record(name: str, ok: bool, detail: str) -> bool:
        _CRITERION_LINES.append(
            f"{'PASS' if ok else 'FAIL'}  {name}  [{detail}]")
        return ok

    return _record


@pytest.fixture(scope="session")
def ex1_problem():
    """Delayed coefficients f(x) = -x, g(x) = x with a pure noise drift."""
    return S.make_problem(mu=0.0, sigma=1.2, rho=0.0, tau=1.0, horizon=8.0,
                          f=S.linear_map(-1.0), g=S.linear_map(1.0), psi=1.0)


@pytest.fixture(scope="session")
def ex2_problem():
    """Delayed coefficients f(x) = 0.6 x, g(x) = x with mu = -0.4."""
    return S.make_problem(mu=-0.4, sigma=1.2, rho=0.0, tau=1.0, horizon=8.0,
                          f=S.linear_map(0.6), g=S.linear_map(1.0), psi=1.0)


def desk_config(problem, scheme, rho_grid):
    return S.StudyConfig(problem=problem, scheme=scheme, rho_grid=rho_grid,
                         dt_grid=DESK_DT_GRID, dt_reference=DESK_DT_REFERENCE,
                         n_trajectories=200, n_groups=20, group_size=10,
                         master_seed=DESK_SEED)


@pytest.fixture(scope="session")
def ex1_lt_sweep(ex1_problem):
    """Full desk-scale correlation sweep for the Lie-Trotter scheme."""
    grid = (-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9)
    config = desk_config(ex1_problem, S.Scheme.LIE_TROTTER, grid)
    results = S.run_rho_sweep(config)
    return {r.rho: r for r in results}


@pytest.fixture(scope="session")
def ex1_strang_rho0(ex1_problem):
    config = desk_config(ex1_problem, S.Scheme.STRANG, (0.0,))
    return S.run_convergence_study(config, 0.0)


@pytest.fixture(scope="session")
def ex2_lt_sweep(ex2_problem):
    config = desk_config(ex2_problem, S.Scheme.LIE_TROTTER, (0.0, 0.9))
    results = S.run_rho_sweep(config)
    return {r.rho: r for r in results}


@pytest.fixture(scope="session")
def dde_series():
    """Analytic solution of x'(t) = -x(t - 1) with x = 1 on [-1, 0].

    Stepwise integration gives, on each interval [m - 1, m],

        x(t) = sum_{k=0}^{m} (-1)^k (t - k + 1)^k / k!

    which is what the reference solver must reproduce when mu = sigma = 0
    and g vanishes.
    """

    def _solution(t):
        t = np.asarray(t, dtype=np.float64)
        m = np.clip(np.ceil(t), 1, None).astype(np.int64)
        out = np.zeros_like(t)
        for k in range(int(m.max()) + 1):
            term = (-1.0) ** k * (t - k + 1.0) ** k / math.factorial(k)
            out += np.where(k <= m, term, 0.0)
        return out

    return _solution

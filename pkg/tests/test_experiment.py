"""Tests for the Monte Carlo study layer: RMS errors, order fits, grouping,
threaded determinism and the statistical behaviour of the desk-scale runs."""

import csv
import math
import warnings

import numpy as np
import pytest

import sddesplit as S

from conftest import DESK_DT_GRID, desk_config


def _tiny_problem():
    return S.make_problem(mu=0.0, sigma=1.2, rho=0.0, tau=1.0, horizon=2.0,
                          f=S.linear_map(-1.0), g=S.linear_map(1.0), psi=1.0)


def _tiny_config(problem, scheme=S.Scheme.LIE_TROTTER, seed=5):
    return S.StudyConfig(problem=problem, scheme=scheme, rho_grid=(0.0,),
                         dt_grid=(2.0 ** -3, 2.0 ** -4), dt_reference=2.0 ** -5,
                         n_trajectories=4, n_groups=2, group_size=2,
                         master_seed=seed)


def test_scheme_parse():
    assert S.Scheme.parse("lie-trotter") is S.Scheme.LIE_TROTTER
    assert S.Scheme.parse("strang") is S.Scheme.STRANG
    with pytest.raises(S.ParameterError):
        S.Scheme.parse("euler")


def test_study_config_validation():
    problem = _tiny_problem()
    good = dict(problem=problem, scheme=S.Scheme.LIE_TROTTER, rho_grid=(0.0,),
                dt_grid=(0.125,), dt_reference=2.0 ** -5, n_trajectories=4,
                n_groups=2, group_size=2, master_seed=1)
    S.StudyConfig(**good)
    with pytest.raises(S.ParameterError):
        S.StudyConfig(**{**good, "n_groups": 3})  # 3 * 2 != 4
    with pytest.raises(S.ParameterError):
        S.StudyConfig(**{**good, "dt_grid": ()})
    with pytest.raises(S.ParameterError):
        S.StudyConfig(**{**good, "rho_grid": (0.99, 1.0)})
    with pytest.raises(S.ParameterError):
        # reference step must divide half the scheme step
        S.StudyConfig(**{**good, "dt_reference": 0.125})
    with pytest.raises(S.ParameterError):
        S.StudyConfig(**{**good, "master_seed": -1})


def test_rms_error_examples():
    assert S.rms_error(np.array([[0.0, 3.0, 4.0]])) == 4.0
    assert abs(S.rms_error(np.array([[3.0], [4.0]])) - math.sqrt(12.5)) <= 1e-12
    assert S.rms_error(np.zeros((3, 5))) == 0.0
    with pytest.raises(S.ParameterError):
        S.rms_error(np.empty((0, 3)))


def test_fit_order_exact_sqrt_law():
    points = [(d, math.sqrt(d)) for d in DESK_DT_GRID]
    fit = S.fit_order(points)
    assert abs(fit.gamma - 0.5) <= 1e-12
    assert abs(fit.log_intercept) <= 1e-12
    assert fit.residual <= 1e-12


def test_fit_order_linear_law_and_plateau():
    fit = S.fit_order([(d, 2.0 * d) for d in DESK_DT_GRID])
    assert abs(fit.gamma - 1.0) <= 1e-12
    assert abs(fit.log_intercept - math.log(2.0)) <= 1e-12
    flat = S.fit_order([(d, 0.1) for d in DESK_DT_GRID])
    assert abs(flat.gamma) <= 1e-12


def test_fit_order_input_validation():
    with pytest.raises(S.ParameterError):
        S.fit_order([(0.25, 0.1)])  # one step size is not a line
    with pytest.warns(UserWarning):
        with pytest.raises(S.ParameterError):
            # the zero row is dropped, leaving too few points
            S.fit_order([(0.25, 0.0), (0.125, 1.0)])


def test_zero_coefficient_study_flags_zero_errors():
    problem = S.make_problem(mu=0.1, sigma=0.8, rho=0.0, tau=1.0, horizon=2.0,
                             f=S.zero_map(), g=S.zero_map(), psi=1.0)
    config = _tiny_config(problem)
    with pytest.warns(UserWarning):
        result = S.run_convergence_study(config, 0.0)
    assert result.fit is None
    assert result.group_gammas is None
    for row in result.rows:
        assert row.rms_error <= 1e-12


def test_study_matches_direct_recomputation():
    # rebuild the tiny study by hand from the same public pieces
    problem = _tiny_problem()
    config = _tiny_config(problem)
    result = S.run_convergence_study(config, 0.0)

    n_fine = round(problem.horizon / config.dt_reference)
    per_dt = {dt: [] for dt in config.dt_grid}
    for index in range(config.n_trajectories):
        lat = S.generate_lattice(config.master_seed, index, n_fine,
                                 config.dt_reference)
        path = S.exact_path(problem, lat)
        for dt in config.dt_grid:
            mesh = S.mesh_for(problem, dt)
            grid = S.lie_trotter(problem, mesh,
                                 S.coarsen(lat, round(dt / config.dt_reference)))
            per_dt[dt].append(grid.values - S.sample_at(path, grid.times))

    for row in result.rows:
        errors = np.stack(per_dt[row.dt])
        assert abs(row.rms_error - S.rms_error(errors)) <= 1e-12 * row.rms_error
        for gid in range(config.n_groups):
            group = errors[gid * 2:(gid + 1) * 2]
            expected = S.rms_error(group)
            assert abs(row.group_rms[gid] - expected) <= 1e-12 * expected

    refit = S.fit_order([(row.dt, row.rms_error) for row in result.rows])
    assert abs(result.fit.gamma - refit.gamma) <= 1e-12


def test_thread_count_does_not_change_results():
    config = _tiny_config(_tiny_problem(), seed=12)
    serial = S.run_convergence_study(config, 0.0, threads=1)
    threaded = S.run_convergence_study(config, 0.0, threads=4)
    for a, b in zip(serial.rows, threaded.rows):
        assert a.rms_error == b.rms_error
        assert np.array_equal(a.group_rms, b.group_rms)
    assert serial.fit == threaded.fit


def test_sweep_single_rho_reduces_to_study():
    config = _tiny_config(_tiny_problem(), seed=8)
    study = S.run_convergence_study(config, 0.0)
    sweep = S.run_rho_sweep(config)
    assert len(sweep) == 1
    assert sweep[0].fit == study.fit
    for a, b in zip(sweep[0].rows, study.rows):
        assert a.rms_error == b.rms_error


def test_order_fit_recomputable_from_rows(ex1_lt_sweep):
    result = ex1_lt_sweep[0.0]
    refit = S.fit_order([(row.dt, row.rms_error) for row in result.rows])
    assert abs(result.fit.gamma - refit.gamma) <= 1e-12
    assert abs(result.fit.log_intercept - refit.log_intercept) <= 1e-12
    spread = float(np.std(result.group_gammas, ddof=1))
    assert abs(result.fit.gamma_std - spread) <= 1e-12


def test_sweep_symmetry_in_correlation_sign(ex1_lt_sweep):
    # the error bound depends on |rho|; mirrored correlations must agree
    # within two combined group error bars (the transform mixes the two
    # channels asymmetrically, so realizations differ)
    for rho in (0.3, 0.6, 0.9):
        plus, minus = ex1_lt_sweep[rho], ex1_lt_sweep[-rho]
        gap = abs(plus.fit.gamma - minus.fit.gamma)
        combined = plus.fit.gamma_std + minus.fit.gamma_std
        assert gap <= 2.0 * combined


def test_sweep_order_peaks_at_zero_correlation(ex1_lt_sweep):
    gammas = {rho: r.fit.gamma for rho, r in ex1_lt_sweep.items()}
    peak = max(gammas, key=gammas.get)
    assert peak == 0.0
    # moving outward in |rho| never raises the order by more than the bars
    for chain in ((0.0, 0.3, 0.6, 0.9), (0.0, -0.3, -0.6, -0.9)):
        for near, far in zip(chain, chain[1:]):
            slack = (ex1_lt_sweep[near].fit.gamma_std
                     + ex1_lt_sweep[far].fit.gamma_std)
            assert ex1_lt_sweep[far].fit.gamma <= ex1_lt_sweep[near].fit.gamma + slack


def test_plateau_at_strong_correlation(ex1_lt_sweep):
    # stepsize-independent error: largest-dt and smallest-dt RMS stay close
    for rho in (0.9, -0.9):
        rows = ex1_lt_sweep[rho].rows
        assert rows[0].rms_error / rows[-1].rms_error < 2.0


def test_error_drops_across_the_grid(ex1_lt_sweep):
    # at rho = 0 the coarsest step is reliably worse than the finest one:
    # resampling groups with replacement keeps that ordering in at least
    # 95 percent of draws
    rows = ex1_lt_sweep[0.0].rows
    group_rms = np.stack([row.group_rms for row in rows])
    rng = np.random.default_rng(0)
    picks = rng.integers(0, group_rms.shape[1], size=(2000, group_rms.shape[1]))
    pooled = np.sqrt(np.mean(group_rms[:, picks] ** 2, axis=2))
    fraction = np.mean(pooled[0] > pooled[-1])
    assert fraction >= 0.95


@pytest.mark.xfail(
    strict=True,
    reason="the worst-node RMS at this horizon is dominated by rare large "
    "paths, so adjacent step sizes invert in roughly half of all group "
    "resamples (measured 0.55 here, 0.11 at a 2000-trajectory run); only "
    "the coarsest-to-finest drop is resampling-stable")
def test_error_strictly_decreasing_in_group_resamples(ex1_lt_sweep):
    # aspirational form of the previous property: the whole per-dt RMS
    # curve strictly decreasing in at least 95 percent of group resamples
    rows = ex1_lt_sweep[0.0].rows
    group_rms = np.stack([row.group_rms for row in rows])
    rng = np.random.default_rng(0)
    picks = rng.integers(0, group_rms.shape[1], size=(2000, group_rms.shape[1]))
    pooled = np.sqrt(np.mean(group_rms[:, picks] ** 2, axis=2))
    fraction = np.mean(np.all(pooled[:-1] > pooled[1:], axis=0))
    assert fraction >= 0.95


def test_gap_shrinks_when_step_halves(ex1_problem):
    # reference-versus-scheme RMS gap at the finest grid step is positive
    # and shrinks when the step halves (statistical, pinned seed)
    config = S.StudyConfig(problem=ex1_problem, scheme=S.Scheme.LIE_TROTTER,
                           rho_grid=(0.0,), dt_grid=(2.0 ** -10, 2.0 ** -11),
                           dt_reference=2.0 ** -14, n_trajectories=200,
                           n_groups=20, group_size=10, master_seed=1)
    result = S.run_convergence_study(config, 0.0)
    coarse, fine = result.rows[0].rms_error, result.rows[1].rms_error
    assert coarse > fine > 0.0


def test_write_errors_csv(tmp_path, ex2_lt_sweep):
    results = [ex2_lt_sweep[rho] for rho in (0.0, 0.9)]
    target = tmp_path / "errors.csv"
    S.write_errors_csv(results, target)
    with open(target, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    assert header == ["scheme", "rho", "dt", "rms_error", "group_id", "group_rms"]
    assert len(body) == 2 * len(DESK_DT_GRID) * 20  # rho x dt x group
    first = body[0]
    assert first[0] == "lie-trotter"
    # float fields round-trip at full precision
    stored = float(first[3])
    assert abs(stored - results[0].rows[0].rms_error) <= 1e-14 * stored


def test_write_orders_csv(tmp_path, ex2_lt_sweep, ex2_problem):
    results = [ex2_lt_sweep[rho] for rho in (0.0, 0.9)]
    config = desk_config(ex2_problem, S.Scheme.LIE_TROTTER, (0.0, 0.9))
    target = tmp_path / "orders.csv"
    S.write_orders_csv(results, config, target)
    with open(target, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["scheme", "rho", "gamma", "gamma_std",
                       "log_intercept", "residual", "n_trajectories",
                       "dt_reference"]
    assert len(rows) == 3
    gamma = float(rows[1][2])
    assert abs(gamma - results[0].fit.gamma) <= 1e-14 * abs(gamma)
    assert int(rows[1][6]) == 200


def test_orders_csv_marks_missing_fit(tmp_path):
    problem = S.make_problem(mu=0.1, sigma=0.8, rho=0.0, tau=1.0, horizon=2.0,
                             f=S.zero_map(), g=S.zero_map(), psi=1.0)
    config = _tiny_config(problem)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = S.run_convergence_study(config, 0.0)
    target = tmp_path / "orders.csv"
    S.write_orders_csv([result], config, target)
    with open(target, newline="") as fh:
        rows = list(csv.reader(fh))
    assert math.isnan(float(rows[1][2]))
    assert math.isnan(float(rows[1][3]))

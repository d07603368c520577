"""Command line front end.

Three commands cover the workflow: ``simulate`` writes a single
trajectory, ``convergence`` measures RMS errors and the fitted order at
one correlation value, and ``sweep`` repeats that over a correlation
grid.  Settings are resolved in layers: built-in defaults, then a named
preset, then the ``--paper-scale`` modifier, then a config file, then
individual flags.  Every command writes a ``manifest.json`` with the
resolved settings, seed, version, timings and SHA-256 checksums of the
output files, and prints it to stdout.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import ParameterError, TrajectoryError
from .experiment import (Scheme, StudyConfig, run_convergence_study,
                         run_rho_sweep, write_errors_csv, write_orders_csv)
from .model import SddeProblem, make_problem, parse_coefficient
from .noise import coarsen, generate_lattice
from .reference import exact_path
from .schemes import lie_trotter, mesh_for, strang

_FLOAT_FMT = "%.15e"

_DEFAULTS = {
    "mu": "0", "sigma": "0", "rho": "0", "tau": "1", "horizon": "8",
    "f": "zero", "g": "zero", "psi": "1",
    "rho_grid": "-0.9,-0.6,-0.3,0,0.3,0.6,0.9",
    "dt": "",
    "dt_grid": "2^-6,2^-7,2^-8,2^-9,2^-10",
    "dt_reference": "2^-14",
    "n_trajectories": "200", "n_groups": "20", "group_size": "10",
    "seed": "47", "scheme": "lie-trotter",
}

_EXAMPLE1 = {"f": "linear:-1", "g": "linear:1", "mu": "0", "sigma": "1.2",
             "tau": "1", "horizon": "8", "psi": "1"}
_EXAMPLE2 = {"f": "linear:0.6", "g": "linear:1", "mu": "-0.4", "sigma": "1.2",
             "tau": "1", "horizon": "8", "psi": "1"}
_DESK = {"dt_reference": "2^-14", "dt_grid": "2^-6,2^-7,2^-8,2^-9,2^-10",
         "n_trajectories": "200", "n_groups": "20", "group_size": "10"}
_PAPER = {"dt_reference": "2^-18", "dt_grid": "2^-10,2^-11,2^-12,2^-13,2^-14",
          "n_trajectories": "500", "n_groups": "20", "group_size": "25"}

PRESETS = {
    "example1-desk": {**_EXAMPLE1, **_DESK},
    "example2-desk": {**_EXAMPLE2, **_DESK},
    "example1-paper": {**_EXAMPLE1, **_PAPER},
    "example2-paper": {**_EXAMPLE2, **_PAPER},
}


def _parse_number(text: str) -> float:
    """Parse a float, accepting exact power-of-two notation like 2^-14."""
    text = text.strip()
    try:
        if text.startswith("2^"):
            return 2.0 ** int(text[2:])
        return float(text)
    except ValueError as exc:
        raise ParameterError(f"bad numeric value {text!r}") from exc


def _parse_number_list(text: str) -> tuple[float, ...]:
    items = [piece for piece in text.split(",") if piece.strip()]
    return tuple(_parse_number(piece) for piece in items)


def read_config_file(path) -> dict[str, str]:
    """Read a flat ``key = value`` config file; unknown keys are rejected."""
    settings = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _DEFAULTS:
            raise ParameterError(f"{path}:{lineno}: unknown setting {key!r}")
        settings[key] = value
    return settings


def _resolve_settings(args) -> dict[str, str]:
    settings = dict(_DEFAULTS)
    if args.preset:
        if args.preset not in PRESETS:
            raise ParameterError(
                f"unknown preset {args.preset!r}; available: "
                + ", ".join(sorted(PRESETS)))
        settings.update(PRESETS[args.preset])
    if getattr(args, "paper_scale", False):
        settings.update(_PAPER)
    if args.config:
        settings.update(read_config_file(args.config))
    if getattr(args, "seed", None) is not None:
        settings["seed"] = str(args.seed)
    if getattr(args, "scheme", None) is not None:
        if args.scheme in {"lie-trotter", "strang"}:
            settings["scheme"] = args.scheme
    if getattr(args, "rho", None) is not None:
        settings["rho"] = repr(args.rho)
    if getattr(args, "rho_grid", None) is not None:
        settings["rho_grid"] = args.rho_grid
    if getattr(args, "dt", None) is not None:
        settings["dt"] = args.dt
    return settings


def _problem_from(settings) -> SddeProblem:
    return make_problem(
        mu=_parse_number(settings["mu"]), sigma=_parse_number(settings["sigma"]),
        rho=_parse_number(settings["rho"]), tau=_parse_number(settings["tau"]),
        horizon=_parse_number(settings["horizon"]),
        f=parse_coefficient(settings["f"]), g=parse_coefficient(settings["g"]),
        psi=_parse_number(settings["psi"]))


def _study_config_from(settings, rho_grid) -> StudyConfig:
    return StudyConfig(
        problem=_problem_from(settings),
        scheme=Scheme.parse(settings["scheme"]),
        rho_grid=rho_grid,
        dt_grid=_parse_number_list(settings["dt_grid"]),
        dt_reference=_parse_number(settings["dt_reference"]),
        n_trajectories=int(settings["n_trajectories"]),
        n_groups=int(settings["n_groups"]),
        group_size=int(settings["group_size"]),
        master_seed=int(settings["seed"]))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, settings, seed: int,
                    threads: int, timings: dict[str, float],
                    outputs: list[Path]) -> Path:
    manifest = {
        "tool": "sddesplit",
        "version": __version__,
        "command": command,
        "seed": seed,
        "threads": threads,
        "config": dict(sorted(settings.items())),
        "timings_seconds": {k: round(v, 3) for k, v in timings.items()},
        "outputs": [{"path": str(p), "sha256": _sha256(p), "bytes": p.stat().st_size}
                    for p in outputs],
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    print(json.dumps(manifest, indent=2))
    return path


def _write_trajectory_csv(path: Path, times, values) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "X"])
        for t, x in zip(times, values):
            writer.writerow([_FLOAT_FMT % t, _FLOAT_FMT % x])


def _cmd_simulate(args) -> int:
    settings = _resolve_settings(args)
    problem = _problem_from(settings)
    seed = int(settings["seed"])
    dt_reference = _parse_number(settings["dt_reference"])
    index = args.trajectory_index
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    fine_steps = round(problem.horizon / dt_reference)
    lattice = generate_lattice(seed, index, fine_steps, dt_reference)
    scheme_name = args.scheme or settings["scheme"]
    if scheme_name == "reference":
        path = exact_path(problem, lattice)
        skip = path.steps_per_delay  # drop the initial segment
        times = path.times[skip:]
        values = path.values[skip:]
        dt_label = dt_reference
    else:
        if not settings.get("dt"):
            raise UsageError("simulate needs --dt (or a config dt) for a scheme run")
        dt = _parse_number(settings["dt"])
        mesh = mesh_for(problem, dt)
        factor = round(dt / dt_reference)
        if abs(dt / dt_reference - factor) > 1e-9 or factor < 1:
            raise ParameterError("dt_reference must divide dt")
        if scheme_name == "strang":
            if factor % 2 != 0:
                raise ParameterError("strang needs dt_reference to divide dt/2")
            grid = strang(problem, mesh, coarsen(lattice, factor // 2))
        else:
            grid = lie_trotter(problem, mesh, coarsen(lattice, factor))
        times, values = grid.times, grid.values
        dt_label = dt
    name = f"trajectory_{scheme_name}_rho{problem.rho:g}_dt{dt_label:g}_idx{index}.csv"
    target = out_dir / name
    _write_trajectory_csv(target, times, values)
    timings = {"total": time.perf_counter() - started}
    _write_manifest(out_dir, "simulate", settings, seed, 1, timings, [target])
    return 0


def _run_and_write(args, rho_grid) -> int:
    settings = _resolve_settings(args)
    config = _study_config_from(settings, rho_grid)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    timings = {}
    started = time.perf_counter()
    for rho in config.rho_grid:
        t0 = time.perf_counter()
        result = run_convergence_study(config, rho, threads=args.threads)
        timings[f"study rho={rho:+.3f}"] = time.perf_counter() - t0
        gamma = result.fit.gamma if result.fit else float("nan")
        spread = result.fit.gamma_std if result.fit else float("nan")
        print(f"study scheme={config.scheme.value} rho={rho:+.3f} "
              f"gamma={gamma:.4f} gamma_std={spread:.4f}", file=sys.stderr)
        results.append(result)
    errors_path = out_dir / "errors.csv"
    orders_path = out_dir / "orders.csv"
    write_errors_csv(results, errors_path)
    write_orders_csv(results, config, orders_path)
    timings["total"] = time.perf_counter() - started
    command = "sweep" if len(rho_grid) > 1 else "convergence"
    _write_manifest(out_dir, command, settings, config.master_seed,
                    args.threads, timings, [errors_path, orders_path])
    return 0


def _cmd_convergence(args) -> int:
    settings = _resolve_settings(args)
    rho = args.rho if args.rho is not None else _parse_number(settings["rho"])
    return _run_and_write(args, (float(rho),))


def _cmd_sweep(args) -> int:
    settings = _resolve_settings(args)
    grid = _parse_number_list(settings["rho_grid"])
    if not grid:
        raise UsageError("rho grid is empty")
    return _run_and_write(args, grid)


class UsageError(Exception):
    """Command line invocation that cannot be executed as given."""


def _add_common(parser, *, threads: bool) -> None:
    parser.add_argument("--preset", help="named built-in configuration, one of "
                        + ", ".join(sorted(PRESETS)))
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument("--paper-scale", action="store_true",
                        help="switch mesh, reference and ensemble sizes to the "
                        "large, long-running configuration")
    if threads:
        parser.add_argument("--threads", type=int, default=1,
                            help="worker threads; results are identical for any value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sddesplit",
        description="Splitting schemes and strong-convergence studies for a "
                    "scalar delay equation with correlated noises")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write one trajectory as CSV")
    _add_common(sim, threads=False)
    sim.add_argument("--scheme", choices=["lie-trotter", "strang", "reference"],
                     help="integrator to run (reference uses dt_reference)")
    sim.add_argument("--rho", type=float, help="correlation of the two noises")
    sim.add_argument("--dt", help="scheme step size, e.g. 2^-6")
    sim.add_argument("--trajectory-index", type=int, default=0,
                     help="which trajectory of the ensemble to write")

    conv = sub.add_parser("convergence",
                          help="RMS errors and fitted order at one correlation")
    _add_common(conv, threads=True)
    conv.add_argument("--scheme", choices=["lie-trotter", "strang"])
    conv.add_argument("--rho", type=float, help="correlation of the two noises")

    swp = sub.add_parser("sweep", help="convergence studies over a correlation grid")
    _add_common(swp, threads=True)
    swp.add_argument("--scheme", choices=["lie-trotter", "strang"])
    swp.add_argument("--rho-grid", help="comma-separated correlation values")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "convergence": _cmd_convergence,
                "sweep": _cmd_sweep}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"error: parameter: {exc}", file=sys.stderr)
        return 1
    except TrajectoryError as exc:
        print(f"error: trajectory: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Splitting schemes and strong-convergence studies for a scalar
semilinear stochastic delay differential equation driven by two
correlated Brownian motions."""

__version__ = "0.1.0"

from .errors import ParameterError, TrajectoryError
from .experiment import (ErrorRow, OrderFit, Scheme, StudyConfig, StudyResult,
                         fit_order, rms_error, run_convergence_study,
                         run_rho_sweep, write_errors_csv, write_orders_csv)
from .model import (AssumptionReport, SddeProblem, linear_map, make_problem,
                    parse_coefficient, probe_assumptions, zero_map)
from .noise import (BrownianLattice, Channel, CorrelatedIncrements, StreamKey,
                    channel_increments, coarsen, correlate, dump_lattice,
                    generate_lattice, load_lattice)
from .propagator import IntervalIncrement, flow_factor, flow_factor_inverse, log_flow_factor
from .reference import ReferencePath, exact_path, sample_at
from .schemes import (TrajectoryGrid, UniformMesh, delay_substep, lie_trotter,
                      linear_substep, mesh_for, strang)

__all__ = [
    "__version__",
    "ParameterError", "TrajectoryError",
    "BrownianLattice", "Channel", "CorrelatedIncrements", "StreamKey",
    "channel_increments", "coarsen", "correlate", "dump_lattice",
    "generate_lattice", "load_lattice",
    "AssumptionReport", "SddeProblem", "linear_map", "make_problem",
    "parse_coefficient", "probe_assumptions", "zero_map",
    "IntervalIncrement", "flow_factor", "flow_factor_inverse", "log_flow_factor",
    "TrajectoryGrid", "UniformMesh", "delay_substep", "lie_trotter",
    "linear_substep", "mesh_for", "strang",
    "ReferencePath", "exact_path", "sample_at",
    "ErrorRow", "OrderFit", "Scheme", "StudyConfig", "StudyResult",
    "fit_order", "rms_error", "run_convergence_study", "run_rho_sweep",
    "write_errors_csv", "write_orders_csv",
]

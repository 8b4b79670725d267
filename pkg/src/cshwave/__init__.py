"""Gauged semilinear wave simulator on a periodic plane, with a diagnostics
harness that audits conservation laws, weighted flux bounds, and decay rates.
"""

__version__ = "0.1.0"

from .analysis import (
    BoundResult,
    RateFit,
    bound_constant,
    fit_rate,
    log_sobolev_check,
    log_sobolev_survey,
    random_bandlimited_field,
)
from .config import RunConfig, Toggles, config_digest, load_config
from .conformal import (
    ConformalPoint,
    SnapshotInterpolator,
    forward_map,
    inverse_map,
    transformed_equation_residual,
)
from .diagnostics import DiagnosticsRecord, decay_weight_exponent
from .dynamics import BlowupError, RunResult, evolution_rates, rk4_step, run
from .grid import Grid2D, make_grid
from .initdata import InitialDataSpec, build_data, energy_norms
from .kernels import NUMBA_ENABLED, active_lane
from .multipliers import (
    AuditReport,
    MultiplierSpec,
    audit_halfspace,
    audit_slab,
    catalog,
    get_spec,
)
from .report import build_report
from .runio import RunReader, read_snapshot, write_snapshot
from .state import FieldState, GaugePotential
from .sweep import SweepSpec, load_sweep, run_sweep

__all__ = [
    "__version__",
    "AuditReport",
    "BlowupError",
    "BoundResult",
    "ConformalPoint",
    "DiagnosticsRecord",
    "FieldState",
    "GaugePotential",
    "Grid2D",
    "InitialDataSpec",
    "MultiplierSpec",
    "NUMBA_ENABLED",
    "RateFit",
    "RunConfig",
    "RunReader",
    "RunResult",
    "SnapshotInterpolator",
    "SweepSpec",
    "Toggles",
    "active_lane",
    "audit_halfspace",
    "audit_slab",
    "bound_constant",
    "build_data",
    "build_report",
    "catalog",
    "config_digest",
    "decay_weight_exponent",
    "energy_norms",
    "evolution_rates",
    "fit_rate",
    "forward_map",
    "get_spec",
    "inverse_map",
    "load_config",
    "load_sweep",
    "log_sobolev_check",
    "log_sobolev_survey",
    "make_grid",
    "random_bandlimited_field",
    "read_snapshot",
    "rk4_step",
    "run",
    "run_sweep",
    "transformed_equation_residual",
    "write_snapshot",
]

"""Pseudo-spectral chemotaxis-Navier-Stokes solver on the periodic box with
Littlewood-Paley regularity diagnostics."""

from .config import ConfigError, RunConfig, parse_config
from .harness import checkpoint_load, checkpoint_save, run_simulation
from .heat import heat_solve, parabolic_regularity_check
from .initial import InitialConditionSpec, generate_initial
from .littlewood_paley import (
    DyadicBank,
    besov_norm,
    bernstein_check,
    build_bank,
    get_bank,
    project_low,
    project_shell,
)
from .model import (
    BlowUpError,
    ModelParams,
    State,
    Trajectory,
    rhs,
    run,
    scale_transform,
    step_imex,
)
from .monitor import (
    Monitor,
    MonitorConfig,
    budget_residual,
    conservation_report,
    criterion_f,
    criterion_integral,
    dissipation_wavenumber_c,
    dissipation_wavenumber_u,
    flux_terms,
    shell_energy,
    wavenumber_log_bound,
)
from .spectral import (
    RealField,
    SpectralField,
    TorusGrid,
    dealias,
    derivative,
    leray_project,
    lp_norm,
    make_grid,
    sobolev_norm,
    to_real,
    to_spectral,
)
from .verify import verify_suite

__version__ = "0.1.0"

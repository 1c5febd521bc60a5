"""Spectral Galerkin solver and verification harness for compressible
channel flow with friction-limited wall slip."""

__version__ = "0.1.0"

from .archive import load_archive, write_archive, write_verification
from .basis import (
    GalerkinBasis,
    VelocityCoeffs,
    build_velocity_basis,
    project_L2,
    vn_norm_surrogate,
)
from .config import RunConfig, load_config, parse_config, render_config
from .density import (
    DensityBoundsReport,
    check_density_bounds,
    density_step,
    solve_density_trajectory,
)
from .diagnostics import (
    EnergyLedger,
    ResidualReport,
    TestFunctionBattery,
    TrajectoryLoads,
    alt_momentum_residual,
    boundary_dissipation_gap,
    complementarity_report,
    continuity_residual,
    energy_ledger,
    initial_condition_check,
    mass_drift_report,
    renormalized_residual,
    verification_suite,
    VerificationSuite,
    weak_inequality_check,
    zeta_family,
)
from .errors import ConfigError, ConvergenceError, PositivityError, StepSizeError
from .expressions import compile_field, parse_field
from .friction import grad_j_delta, j_delta
from .geometry import Geometry
from .harness import (
    RunResult,
    run_from_file,
    run_mms_study,
    run_simulation,
    verify_archive,
)
from .initialdata import RegularizedInitialData, regularize_initial_data
from .mms import (
    ManufacturedPair,
    constant_pair,
    manufactured_solution_residual,
    mms_dt_study,
    mms_resolution_study,
    polynomial_pair,
    smooth_pair,
)
from .momentum import (
    FluidParams,
    ForceField,
    Trajectory,
    assemble_mass_operator,
    cauchy_stress,
    fixed_point_solve,
    linearized_solve,
    momentum_rhs,
    wall_tractions,
)
from .spectral import ScalarSpace, ScalarSpectralField
from .sweep import SweepReport, run_sweep, trajectory_distance

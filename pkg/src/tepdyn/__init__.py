"""tepdyn: derive and integrate dissipative equations of motion from a
potential triple (kinetic energy K, Gibbs energy G, dissipation
function Q).

The force balance assembled and solved by this package is

    d/dt dK/dv - dK/dx + dG/dx + q = 0,

where the dissipative force q is constructed from Q by maximizing the
dissipation subject to the power constraint q . v = Q.  Alongside the
finite-dimensional engine there is a 1D continuum module (a power-law
viscous bar whose density depends on strain) and a CLI
(``tepdyn simulate | verify | sweep``).
"""

from .autodiff import (
    Dual,
    ScalarField,
    grad_v,
    grad_x,
    hess_vv,
    hess_vx,
    time_partial,
    value,
)
from .continuum1d import (
    BarConfig,
    BarState,
    BarTrajectory,
    discrete_lagrangian_residual,
    integrate_bar,
    mass_audit,
    mass_exchange_rate,
    momentum_rhs,
    sine_bar_state,
    total_mass,
)
from .dynamics import (
    ForceDecomposition,
    IntegratorOptions,
    Trajectory,
    integrate,
    legendre_energy,
    residual,
    solve_acceleration,
    variational_derivative_K,
)
from .errors import (
    ConfigError,
    DegenerateMass,
    DensityCollapse,
    DimensionMismatch,
    InvalidParameter,
    SingularDissipation,
    StepSizeUnderflow,
    TepdynError,
)
from .model import (
    BUILTIN_SYSTEMS,
    State,
    SystemModel,
    build_disk_damper,
    build_rayleigh_oscillator,
    build_system,
)
from .tep import (
    DissipativeForce,
    dissipative_force,
    homogeneity_degree,
    norton_hoff_field,
    verify_power_identity,
)
from .verify import SUITE_IDS, VerifyReport, run_suite, run_suites

__version__ = "1.0.0"

__all__ = [
    "Dual",
    "ScalarField",
    "value",
    "grad_x",
    "grad_v",
    "hess_vv",
    "hess_vx",
    "time_partial",
    "State",
    "SystemModel",
    "build_disk_damper",
    "build_rayleigh_oscillator",
    "build_system",
    "BUILTIN_SYSTEMS",
    "DissipativeForce",
    "dissipative_force",
    "homogeneity_degree",
    "norton_hoff_field",
    "verify_power_identity",
    "ForceDecomposition",
    "IntegratorOptions",
    "Trajectory",
    "variational_derivative_K",
    "residual",
    "solve_acceleration",
    "legendre_energy",
    "integrate",
    "BarConfig",
    "BarState",
    "BarTrajectory",
    "momentum_rhs",
    "discrete_lagrangian_residual",
    "integrate_bar",
    "total_mass",
    "mass_exchange_rate",
    "mass_audit",
    "sine_bar_state",
    "SUITE_IDS",
    "VerifyReport",
    "run_suite",
    "run_suites",
    "TepdynError",
    "DimensionMismatch",
    "InvalidParameter",
    "SingularDissipation",
    "DegenerateMass",
    "DensityCollapse",
    "StepSizeUnderflow",
    "ConfigError",
    "__version__",
]

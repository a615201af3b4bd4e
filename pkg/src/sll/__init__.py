"""sll: steady subsonic nozzle-flow solver and sonic-limit diagnostics."""

from .errors import (ConfigError, ConvergenceError, DomainError,
                     GeometryError, LinearSolverError, SchemaError, SllError,
                     SolverStateError, SonicExceeded, VacuumError)
from .fields import FlowField, read_dump, write_dump
from .geometry import (Grid, Nozzle2D, NozzleAxi, build_grid,
                       straight_nozzle_2d, straight_pipe, tanh_nozzle_2d,
                       tanh_pipe, validate_nozzle)
from .limits import (DiagnosticsBundle, SweepReport, boundary_trace,
                     concentration, curl_tv, diagnostics_bundle,
                     sweep_to_sonic, weak_residuals)
from .solver import SolverOptions, StreamSolution, picard_solve
from .thermo import (CriticalState, GammaLaw, GasModel, Isothermal,
                     TabulatedLaw, critical_speed, critical_state,
                     critical_state_hom, density_from_bernoulli_hom,
                     density_from_speed, mass_flux_density, pairing,
                     pressure_from_speed, speed_from_mass_flux)
from .upstream import Profile, UpstreamData, UpstreamState, upstream_state

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "CriticalState", "DiagnosticsBundle",
    "DomainError", "FlowField", "GammaLaw", "GasModel", "GeometryError",
    "Grid", "Isothermal", "LinearSolverError", "Nozzle2D", "NozzleAxi",
    "Profile", "SchemaError", "SllError", "SolverOptions", "SolverStateError",
    "SonicExceeded", "StreamSolution", "SweepReport", "TabulatedLaw",
    "UpstreamData", "UpstreamState", "VacuumError", "boundary_trace",
    "build_grid", "concentration", "critical_speed", "critical_state",
    "critical_state_hom", "curl_tv", "density_from_bernoulli_hom",
    "density_from_speed", "diagnostics_bundle", "mass_flux_density",
    "pairing", "picard_solve", "pressure_from_speed", "read_dump",
    "speed_from_mass_flux", "straight_nozzle_2d", "straight_pipe",
    "sweep_to_sonic", "tanh_nozzle_2d", "tanh_pipe", "upstream_state",
    "validate_nozzle", "weak_residuals", "write_dump",
]

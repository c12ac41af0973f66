"""Exact single-excitation dynamics of emitter rings around a Drude metal nanosphere."""
__version__ = "0.1.0"

from .nanosphere import (
    HBAR_C,
    HBAR_FS,
    SILVER,
    DrudeMetal,
    SystemGeometry,
    drude_permittivity,
    green_rr,
    lsp_resonances,
    mie_coefficients,
    quasi_static_coefficient,
)
from .spectral import GridSpec, SpectralTable, build_spectral_table, circulant_channels, transform_matrix
from .spectrum import (
    BoundState,
    bound_state_population,
    eigen_residual,
    find_bound_state,
    find_bound_states,
    scan_spectrum,
    threshold_distance,
)
from .dynamics import (
    InitialCondition,
    classify,
    late_window,
    solve_volterra,
    steady_state_predictor,
    synthesize_kernel,
    time_grid,
)
from .scenario import Numerics, run_scenario

__all__ = [
    "HBAR_C", "HBAR_FS", "SILVER", "DrudeMetal", "SystemGeometry", "drude_permittivity", "green_rr",
    "lsp_resonances", "mie_coefficients", "quasi_static_coefficient", "GridSpec", "SpectralTable",
    "build_spectral_table", "circulant_channels", "transform_matrix", "BoundState", "bound_state_population",
    "eigen_residual", "find_bound_state", "find_bound_states", "scan_spectrum", "threshold_distance",
    "InitialCondition", "classify", "late_window", "solve_volterra", "steady_state_predictor",
    "synthesize_kernel", "time_grid", "Numerics", "run_scenario",
]

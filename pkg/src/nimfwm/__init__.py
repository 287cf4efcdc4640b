"""Quantum-controlled four-wave mixing and loss compensation in a
negative-index slab: driven four-level response, backward-wave
parametric amplification, and resonance mapping."""

from .qresponse import (
    DriveConfig,
    FourLevelParams,
    ResponseSet,
    SingularModel,
    build_hamiltonian,
    build_liouvillian,
    default_drive,
    default_params,
    phase_mismatch,
    probe_response,
    steady_state,
)
from .slab import (
    NonConvergent,
    SlabProblem,
    SlabSolution,
    assemble_slab_problem,
    photon_flux_profiles,
    solve_closed_form,
    solve_numeric_oracle,
)
from .scan import (
    NotFound,
    Peak,
    SweepResult,
    SweepSpec,
    find_oscillation_threshold,
    find_peaks,
    find_zero_crossings,
    sweep_response,
    sweep_slab,
)

__all__ = [
    "DriveConfig",
    "FourLevelParams",
    "ResponseSet",
    "SingularModel",
    "build_hamiltonian",
    "build_liouvillian",
    "default_drive",
    "default_params",
    "phase_mismatch",
    "probe_response",
    "steady_state",
    "NonConvergent",
    "SlabProblem",
    "SlabSolution",
    "assemble_slab_problem",
    "photon_flux_profiles",
    "solve_closed_form",
    "solve_numeric_oracle",
    "NotFound",
    "Peak",
    "SweepResult",
    "SweepSpec",
    "find_oscillation_threshold",
    "find_peaks",
    "find_zero_crossings",
    "sweep_response",
    "sweep_slab",
]

__version__ = "0.1.0"

"""Desk-scale simulator for adiabatic ground-state preparation in
long-range Ising spin registers.

The pipeline mirrors a trapped-ion experiment: synthesize the coupling
matrix from trap and beam parameters (``trap``), scan the low-lying
spectrum for the coupled critical gap (``spectrum``), design a field
schedule from the gap structure (``ramps``), integrate the Schrodinger
equation through it (``evolution``), and identify the classical ground
state from finite measurement statistics (``analysis``).  Energies are
in kHz, times in ms, and phases follow exp(-i 2 pi E t).
"""

from .analysis import (
    PrevalenceReport,
    SampledCounts,
    half_landau_zener,
    imparted_energy_khz,
    most_prevalent,
    required_repetitions,
    sample_counts,
)
from .backend import active_backend
from .config import RunConfig, dump_config, load_config
from .evolution import (
    DEFAULT_TD_MS,
    EvolutionResult,
    OutcomeDistribution,
    SweepResult,
    afm_ground_probability,
    apply_decoherence,
    check_monotone_prevalence,
    evolve,
    instantaneous_state,
    outcome_distribution,
    sweep_ramp_families,
    time_to_match,
)
from .exceptions import (
    ChainInstabilityError,
    ConfigError,
    ConvergenceError,
    EigensolverError,
    GapWindowError,
    IonRampError,
    NumericalError,
)
from .ramps import (
    EXPONENTIAL,
    FAMILIES,
    LINEAR,
    LOCAL_ADIABATIC,
    PIECEWISE_APPROXIMATE,
    AdiabaticityTrace,
    RampProfile,
    adiabatic_threshold_ms,
    adiabaticity_trace,
    critical_time,
    exponential_ramp,
    gamma_for_total_time,
    linear_ramp,
    local_adiabatic_ramp,
    total_time_for_gamma,
)
from .spectrum import (
    CriticalPoint,
    CriticalScaling,
    GapCurve,
    LowSpectrum,
    coupled_excited_index,
    critical_point,
    extrapolate_critical,
    gap_curve,
    low_spectrum,
    piecewise_gap,
)
from .spin_model import (
    CouplingMatrix,
    Hamiltonian,
    afm_target_state,
    bitstring,
    build_hamiltonian,
    classical_energies,
    field_aligned_state,
    neel_indices,
)
from .trap import (
    NormalModes,
    PowerLawFit,
    TrapConfig,
    calibrate_trap,
    equilibrium_positions,
    fit_alpha,
    ising_couplings,
    transverse_modes,
)

__version__ = "0.1.0"

__all__ = [
    "AdiabaticityTrace",
    "ChainInstabilityError",
    "ConfigError",
    "ConvergenceError",
    "CouplingMatrix",
    "CriticalPoint",
    "CriticalScaling",
    "DEFAULT_TD_MS",
    "EigensolverError",
    "EvolutionResult",
    "EXPONENTIAL",
    "FAMILIES",
    "GapCurve",
    "GapWindowError",
    "Hamiltonian",
    "IonRampError",
    "LINEAR",
    "LOCAL_ADIABATIC",
    "LowSpectrum",
    "NormalModes",
    "NumericalError",
    "OutcomeDistribution",
    "PIECEWISE_APPROXIMATE",
    "PowerLawFit",
    "PrevalenceReport",
    "RampProfile",
    "RunConfig",
    "SampledCounts",
    "SweepResult",
    "TrapConfig",
    "active_backend",
    "adiabatic_threshold_ms",
    "adiabaticity_trace",
    "afm_ground_probability",
    "afm_target_state",
    "apply_decoherence",
    "bitstring",
    "build_hamiltonian",
    "calibrate_trap",
    "check_monotone_prevalence",
    "classical_energies",
    "coupled_excited_index",
    "critical_point",
    "critical_time",
    "dump_config",
    "equilibrium_positions",
    "evolve",
    "exponential_ramp",
    "extrapolate_critical",
    "field_aligned_state",
    "fit_alpha",
    "gamma_for_total_time",
    "gap_curve",
    "half_landau_zener",
    "imparted_energy_khz",
    "instantaneous_state",
    "ising_couplings",
    "linear_ramp",
    "load_config",
    "local_adiabatic_ramp",
    "low_spectrum",
    "most_prevalent",
    "neel_indices",
    "outcome_distribution",
    "piecewise_gap",
    "required_repetitions",
    "sample_counts",
    "sweep_ramp_families",
    "time_to_match",
    "total_time_for_gamma",
    "transverse_modes",
    "__version__",
]

//! Fluxonium circuit model.

mod energies;
mod gradiometer;
mod hamiltonian;

pub use energies::{elements_from_energies, energies_from_elements, CircuitEnergies, ElementValues};
pub use gradiometer::{
    effective_flux, effective_inductance, inductance_asymmetry, periodicity_ratio,
    GradiometerGeometry, LoopAreas, PeriodRatio,
};
pub use hamiltonian::{
    build_hamiltonian, flux_sensitivity, spectrum, transition_frequencies, FluxSensitivity,
    FluxoniumBasis, FluxoniumSolver, SpectrumPoint, SpectrumTable, Transitions, DEFAULT_BASIS,
    MAX_BASIS, MIN_BASIS,
};

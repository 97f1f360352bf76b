//! Heralded entanglement of two atoms by photodetection on an optical cavity.
//!
//! Two atoms with ground states `|0⟩`, `|1⟩` sit in a two-mirror cavity. Only
//! `|1⟩` couples to the cavity, so a reflected photon signals that at least
//! one atom is in `|1⟩` and projects out `|00⟩`. The crate provides
//!
//! - [`model`]: resonant and off-resonant cavity response,
//! - [`protocol`]: success probability and fidelity of the Fock and coherent
//!   single/double detection schemes,
//! - [`optimize`]: maximum success probability at a fidelity floor,
//! - [`oracle`]: independent master-equation, quadrature and Monte Carlo
//!   checks,
//! - [`verify`]: the oracle comparison suite,
//! - [`cli`]: the command-line front end.
//!
//! All rates are in units of the atomic decay rate γ.

pub mod cli;
pub mod error;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod protocol;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    effective_cooperativity_ring, reflection_probability, scattering_amplitudes, scattering_loss,
    transmission_probability, CavityParams, RawRates, SpectrumPoint,
};
pub use optimize::{
    optimize, optimize_coherent_double, optimize_coherent_single, optimize_fock_double,
    optimize_fock_single, sweep, OptimizationResult, OptimizationStatus, Scheme, SweepRow,
    SweepSpec,
};
pub use protocol::{
    coherent_conditional_fidelity, coherent_conditional_population, coherent_double,
    coherent_single, false_reflection_fidelity, first_click_density, fock_double, fock_single,
    initial_populations, unhalved_double_fidelity, Diagnostics, Preparation, SchemeOutcome,
};

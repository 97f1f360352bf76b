//! Independent numerical routes used to check the closed forms: a master
//! equation for the cavity response and the coherence decay, quadrature for
//! the single-detection averages, and click sampling for the double scheme.

pub mod lindblad;
pub mod monte_carlo;
pub mod quadrature;

pub use lindblad::{
    build_system, build_system_with, coherence_decay_rate, steady_response, steady_state,
    steady_state_rt, CoherenceFit, Dims, Drive, LindbladSystem, SteadyResponse, SteadyState,
};
pub use monte_carlo::{monte_carlo_double, MonteCarloEstimate, TrajectorySample};
pub use quadrature::{integrate, quadrature_single, ClickModel, Quadrature};

//! Fourier-Galerkin solver for `-∇·(a∇u) = f` on the torus by Picard iteration.
//!
//! With `a = 1 + ã`, the Galerkin solution is the fixed point of
//! `F_N(u) = Ṗ_N(-Δ)^{-1}∇·(ã_N∇u) + (-Δ)^{-1}f_N`, iterated a fixed number of times
//! `K = ⌈log(λ^{-1}N^{-k}) / log(1-λ/2)⌉` from `u⁰ = 0`.

mod coefficients;
mod manufactured;
mod solver;

pub use coefficients::{random_decay_coefficient, trig_coefficient, TrigSeries, TrigTerm};
pub use manufactured::{
    band_limited_problem, rough_problem, ManufacturedProblem, ROUGH_REFERENCE_RADIUS,
};
pub use solver::{
    coercivity_advisory, iteration_count, picard_step, prepare_coefficients, solve,
    CoercivityAdvisory, DarcyProblem, DarcySolution, PreparedCoefficients,
};
pub(crate) use solver::zero_mean_truncation;

use thiserror::Error;

use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum DarcyError {
    #[error("inputs sampled at radius {have}, need at least {need}")]
    InsufficientResolution { have: usize, need: usize },
    #[error("coefficient not coercive: {what} = {value:.6} (limit {limit:.6})")]
    CoercivityViolation {
        what: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("iterate {0} is not finite")]
    NonFiniteIterate(usize),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

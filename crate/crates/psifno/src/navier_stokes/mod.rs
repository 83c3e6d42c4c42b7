//! Semi-implicit pseudo-spectral solvers for incompressible Navier-Stokes on `𝕋^d`.
//!
//! First order: `(u^{n+1} - u^n)/τ + ℙ_N(u^n·∇u^{n+1}) = νΔu^{n+1}`, solved by iterating
//! `F(w) = H u^n - τ H ℙ_N(u^n·∇w)` with `H = (1 - ντΔ)^{-1}` from `w = 0`, `κ₀ = ⌈log₂(T²/τ²)⌉`
//! times.
//!
//! Second order: `(u^{n+1} - u^n)/τ + ℙ_N(ū·∇(u^{n+1}+u^n)/2) = νΔ(u^{n+1}+u^n)/2` with
//! `ū = (3/2)u^n - (1/2)u^{n-1}`. Solving for `u^{n+1}` and keeping only the implicit advection
//! inside the iteration gives
//!
//! ```text
//! F₂(w) = H₂[(1 + (ντ/2)Δ)u^n - (τ/2)ℙ_N(ū·∇u^n) - (τ/2)ℙ_N(ū·∇w)],  H₂ = (1 - (ντ/2)Δ)^{-1},
//! ```
//!
//! iterated `⌈log₂(T³/τ³)⌉` times. `ℙ_N` is the Leray projection restricted to `0 < |k|_∞ ≤ N`;
//! advection products are formed exactly on the `2N` grid.

mod init;
mod solver;

pub use init::{random_divergence_free, taylor_green, taylor_green_scaled};
pub use solver::{
    advect, energy, kappa0, kappa2, max_cfl_timestep, picard_iterates_first, picard_map_first, picard_map_second,
    run_first_order, run_second_order, startup_state, step_first_order, step_second_order,
    NsConfig, NsState, Startup, Trajectory,
};

use thiserror::Error;

use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum NsError {
    #[error("CFL violated at step {step}: {value:.4e} > {limit:.4e}")]
    CflViolation { step: usize, value: f64, limit: f64 },
    #[error("state at step {0} is not finite")]
    NonFiniteState(usize),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

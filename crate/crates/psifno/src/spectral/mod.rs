//! Discrete Fourier analysis on the periodic torus.
//!
//! Fields are sampled on odd grids of `2N+1` points per axis, so every mode with
//! `|k|_∞ ≤ N` is represented exactly once. The forward transform carries the
//! `1/(2N+1)^d` factor; the inverse is unnormalized.

mod fft;
mod field;
mod grid;
pub mod io;
mod norms;
mod ops;

pub use field::{GridField, SpectralCoeffs};
pub use grid::Grid;
pub use norms::{
    dual_sobolev_norm, l2_norm, quadrature_l2, sobolev_norm, sobolev_norm_coeffs, SobolevIndex,
};
pub use ops::{
    dealiased_product, derivative, dft, divergence, gradient, helmholtz_inverse, idft,
    interpolate, interpolate_coeffs, inverse_laplacian, leray_project, project, resample,
    symmetrize,
};

pub(crate) use fft::transform;
pub(crate) use ops::{gradient_coeffs, helmholtz_symbol, idft_unchecked, leray_coeffs};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid needs d >= 1 and N >= 1 (got d={d}, N={n})")]
    BadGrid { d: usize, n: usize },
    #[error("grids must have an odd number of points per axis, got {0}")]
    EvenGrid(usize),
    #[error("expected {expected} values, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected {expected} channels, found {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("truncation radius {m} exceeds grid radius {n}")]
    BadTruncation { m: usize, n: usize },
    #[error("axis {axis} out of range for dimension {d}")]
    BadAxis { axis: usize, d: usize },
    #[error("coefficients are not conjugate symmetric (defect {defect:.3e}, scale {scale:.3e})")]
    HermitianViolation { defect: f64, scale: f64 },
    #[error("{0}")]
    BadParameter(String),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Constructive Ψ-FNOs: calibrated product and pass-through units, networks that replay the
//! Darcy and Navier-Stokes solvers, Fourier-coefficient networks, fully activated rewrites,
//! and the export to DeepONets.
//!
//! Every product `ab` is realized as `((a+b)² - a² - b²)/2` with each square replaced by the
//! second difference quotient of `σ` at `x₀ = 1`; every quantity that must survive an
//! activated layer is carried by the first difference quotient at `x₀ = 0`. The step `h` of
//! each quotient is found by halving until a dense probe meets the requested accuracy.
//! Linear operators (derivatives, truncations, Leray, inverse Laplacian, Helmholtz) are exact
//! Fourier multipliers in unactivated layers; [`strictify`] replaces those layers by
//! activated ones when a network made only of activated layers is wanted.

mod blocks;
mod darcy;
mod deeponet;
mod dense;
mod fourier;
mod ns;
mod strict;
mod units;

pub use darcy::{build_darcy_emulator, build_nonlinearity_net_darcy};
pub use deeponet::{
    approximate_trunk, read_deeponet, to_deeponet, trunk_basis, write_deeponet, ApproxTrunk, DeepOnetExport, TrigKind,
    TrunkBasis,
};
pub use dense::{DenseLayer, DenseNet};
pub use fourier::{
    build_ft_emulator, build_ift_emulator, coefficient_channel, coefficient_field, fourier_conjugate_pipeline,
};
pub use ns::{build_ns_emulator, build_ns_nonlinearity_net, measure_bounds, MeasuredBounds};
pub use strict::{build_affine_approx, strictify, AffineApprox, AffineApproxSpec};
pub use units::{
    build_product_net, calibrate_pass, calibrate_square, gradient_sup_from_h1, pass_error, product_error,
    InputBound, PassUnit, ProductNet, ProductNetSpec, SquareUnit,
};

use thiserror::Error;

use crate::darcy::DarcyError;
use crate::fno::FnoError;
use crate::navier_stokes::NsError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum EmulationError {
    #[error("could not calibrate {what} unit: best probe error {best:.3e} exceeds {target:.3e}")]
    CalibrationFailed { what: &'static str, target: f64, best: f64 },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("malformed export: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Darcy(#[from] DarcyError),
    #[error(transparent)]
    Ns(#[from] NsError),
    #[error(transparent)]
    Fno(#[from] FnoError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

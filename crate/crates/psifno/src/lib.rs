//! Pseudo-spectral Fourier neural operators (Ψ-FNOs) on the periodic torus.
//!
//! - [`spectral`]: transforms, projections, de-aliased products, Leray projection, Sobolev norms.
//! - [`fno`]: the Ψ-FNO data model, exact forward evaluation, composition and model files.
//! - [`darcy`]: Fourier-Galerkin Picard solver for `-∇·(a∇u) = f`.
//! - [`navier_stokes`]: first- and second-order semi-implicit incompressible solvers.
//! - [`emulation`]: constructive networks that replay the solvers, Fourier transforms, and
//!   the conversion to DeepONets.

pub mod spectral;
pub mod fno;
pub mod darcy;
pub mod navier_stokes;
pub mod emulation;

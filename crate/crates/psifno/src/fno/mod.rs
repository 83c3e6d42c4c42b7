//! Ψ-FNO data model and exact forward evaluation.
//!
//! A network is `Q ∘ I_N ∘ L_L ∘ … ∘ I_N ∘ L_1 ∘ I_N ∘ R` on a fixed grid of radius `N`.
//! Every layer is `v ↦ σ(W v + b + F^{-1}(P · F v))`, with the activation optional per layer.

mod activation;
mod compose;
pub mod io;
mod layer;
mod multiplier;
mod network;

pub use activation::{Activation, LINEAR_EXPANSION_POINT, QUADRATIC_EXPANSION_POINT};
pub use compose::compose;
pub use layer::{layer_forward, Bias, FnoLayer};
pub(crate) use multiplier::lex_modes;
pub use multiplier::{symbol_from_fn, FourierMultiplier, MultiplierEntry, Symbol};
pub use network::{fno_forward, size_report, PsiFno, SizeReport};


use thiserror::Error;

use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum FnoError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown activation {0:?} (expected tanh or gelu)")]
    UnknownActivation(String),
    #[error("symbol {symbol} violates s(-k) = conj(s(k)) (defect {defect:.3e})")]
    NotConjugateSymmetric { symbol: usize, defect: f64 },
    #[error("network parameters contain non-finite values")]
    NonFinite,
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

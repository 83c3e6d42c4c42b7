use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{dft, GridField, SpectralCoeffs, SpectralError};

/// Smoothness order of an `H^s` or `Ḣ^s` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex {
    s: f64,
    homogeneous: bool,
}

impl SobolevIndex {
    pub fn new(s: f64, homogeneous: bool) -> Result<Self, SpectralError> {
        if !s.is_finite() || s < 0.0 {
            return Err(SpectralError::BadParameter(format!(
                "Sobolev order must be finite and non-negative, got {s}"
            )));
        }
        Ok(SobolevIndex { s, homogeneous })
    }

    pub const L2: SobolevIndex = SobolevIndex {
        s: 0.0,
        homogeneous: false,
    };
    pub const H1: SobolevIndex = SobolevIndex {
        s: 1.0,
        homogeneous: false,
    };
    pub const DOT_H1: SobolevIndex = SobolevIndex {
        s: 1.0,
        homogeneous: true,
    };

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn homogeneous(&self) -> bool {
        self.homogeneous
    }
}

/// Sobolev norm summed over channels.
///
/// `‖f‖²_{H^s} = ((2π)^d/2) Σ_k (1+|k|^{2s})|f̂_k|²`, so `s = 0` gives the `L²` norm.
/// `‖f‖²_{Ḣ^s} = (2π)^d Σ_{k≠0} |k|^{2s}|f̂_k|²`; the mean is ignored.
pub fn sobolev_norm(f: &GridField, idx: SobolevIndex) -> f64 {
    sobolev_norm_coeffs(&dft(f), idx)
}

pub fn sobolev_norm_coeffs(c: &SpectralCoeffs, idx: SobolevIndex) -> f64 {
    let weight = |k2: f64| {
        if idx.homogeneous {
            if k2 == 0.0 {
                0.0
            } else {
                k2.powf(idx.s)
            }
        } else {
            0.5 * (1.0 + k2.powf(idx.s))
        }
    };
    weighted_sum(c, weight).sqrt()
}

/// `Ḣ^{-s}` norm `((2π)^d Σ_{k≠0} |k|^{-2s}|f̂_k|²)^{1/2}`, the dual of `Ḣ^s`.
pub fn dual_sobolev_norm(f: &GridField, s: f64) -> f64 {
    weighted_sum(&dft(f), |k2| if k2 == 0.0 { 0.0 } else { k2.powf(-s) }).sqrt()
}

fn weighted_sum(c: &SpectralCoeffs, weight: impl Fn(f64) -> f64) -> f64 {
    let g = c.grid();
    let w: Vec<f64> = g.k_squared().into_iter().map(weight).collect();
    let vol = (2.0 * PI).powi(g.d() as i32);
    let mut total = 0.0;
    for ch in 0..c.channels() {
        total += c
            .channel(ch)
            .iter()
            .zip(&w)
            .map(|(z, w)| w * z.norm_sqr())
            .sum::<f64>();
    }
    vol * total
}

/// `L²` norm by Parseval.
pub fn l2_norm(f: &GridField) -> f64 {
    sobolev_norm(f, SobolevIndex::L2)
}

/// Grid quadrature `((2π)^d/|J_N| Σ_j f_j²)^{1/2}`; equals `l2_norm` for band-limited data.
pub fn quadrature_l2(f: &GridField) -> f64 {
    let g = f.grid();
    let vol = (2.0 * PI).powi(g.d() as i32);
    (vol / g.len() as f64 * f.values().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

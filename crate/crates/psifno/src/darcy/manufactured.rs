use num_complex::Complex64;

use super::{trig_coefficient, DarcyError, DarcyProblem, TrigSeries};
use crate::spectral::{
    dft, divergence, gradient, idft_unchecked, resample, sobolev_norm, Grid, GridField,
    SobolevIndex, SpectralCoeffs,
};

/// Truncation radius of the finite-regularity manufactured solution.
pub const ROUGH_REFERENCE_RADIUS: usize = 200;

/// Known `u*` with `f = -∇·(a∇u*)` computed exactly as a trigonometric polynomial.
#[derive(Clone, Debug)]
pub struct ManufacturedProblem {
    pub a: TrigSeries,
    /// `u*` and `f` on a grid fine enough to hold both exactly.
    pub u_exact: GridField,
    pub f_exact: GridField,
}

impl ManufacturedProblem {
    fn from_solution(a: TrigSeries, u_coeffs: &SpectralCoeffs) -> Result<Self, DarcyError> {
        let radius = u_coeffs.grid().n() + a.degree();
        let grid = u_coeffs.grid().with_n(radius)?;
        let u_exact = idft_unchecked(&u_coeffs.regrid(radius)?);
        let a_vals = a.sample(grid)?;
        // a∇u* has degree ≤ radius, so the pointwise product is exact on this grid
        let mut flux = gradient(&u_exact);
        for c in 0..flux.channels() {
            for (y, w) in flux.channel_mut(c).iter_mut().zip(a_vals.values()) {
                *y *= w;
            }
        }
        let f_exact = divergence(&flux)?.scaled(-1.0);
        Ok(ManufacturedProblem {
            a,
            u_exact,
            f_exact,
        })
    }

    /// `a` and `f` sampled on the `4N` grid; the sample mean of `f` (pure aliasing) is removed.
    pub fn problem(&self, n: usize, lambda: f64, k: u32) -> Result<DarcyProblem, DarcyError> {
        let g = self.u_exact.grid().with_n(4 * n)?;
        let a = self.a.sample(g)?;
        let f = resample(&self.f_exact, 4 * n)?;
        let mean = f.means()[0];
        let f = GridField::new(g, 1, f.values().iter().map(|x| x - mean).collect())?;
        DarcyProblem::new(a, f, lambda, k, n)
    }

    /// `‖u_N - u*‖_{H¹}`.
    pub fn h1_error(&self, u: &GridField) -> Result<f64, DarcyError> {
        let r = u.grid().n().max(self.u_exact.grid().n());
        let diff = resample(u, r)?.sub(&resample(&self.u_exact, r)?)?;
        Ok(sobolev_norm(&diff, SobolevIndex::H1))
    }
}

/// `u* = cos x_1 + sin x_d`, `a = 1 + amplitude·sin(x_1+…+x_d)`.
pub fn band_limited_problem(d: usize, amplitude: f64) -> Result<ManufacturedProblem, DarcyError> {
    let g = Grid::new(d, 1)?;
    let u = GridField::from_fn(g, 1, |x, _| x[0].cos() + x[d - 1].sin());
    ManufacturedProblem::from_solution(trig_coefficient(d, amplitude), &dft(&u))
}

/// `u* = Σ_{0<|m|_∞≤200} (1+|m|²)^{-q} e^{i⟨m,x⟩}` with `q = (k + 3/2 + d/2)/2`, so the best
/// `H¹` approximation from degree `N` decays like `N^{-(k+1/2)}`; `a = 1 + amplitude·sin(x_1+…+x_d)`.
pub fn rough_problem(d: usize, k: u32, amplitude: f64) -> Result<ManufacturedProblem, DarcyError> {
    let g = Grid::new(d, ROUGH_REFERENCE_RADIUS)?;
    let q = (k as f64 + 1.5 + d as f64 / 2.0) / 2.0;
    let mut c = SpectralCoeffs::zeros(g, 1);
    let k2 = g.k_squared();
    for (z, &m2) in c.channel_mut(0).iter_mut().zip(&k2) {
        if m2 > 0.0 {
            *z = Complex64::new((1.0 + m2).powf(-q), 0.0);
        }
    }
    ManufacturedProblem::from_solution(trig_coefficient(d, amplitude), &c)
}

use std::f64::consts::PI;
use std::sync::Arc;

use super::blocks::{mean_symbol, BlockPlan, Factor, Output, Source, Term};
use super::{calibrate_pass, calibrate_square, EmulationError, InputBound};
use crate::fno::{compose, lex_modes, Activation, PsiFno};
use crate::spectral::{Grid, GridField};

/// Channel of `Re v̂_k` (or `Im v̂_k`) in the coefficient layout: modes in lexicographic order
/// over `{-N..N}^d`, real part then imaginary part.
pub fn coefficient_channel(n: usize, k: &[i64], imaginary: bool) -> usize {
    let p = 2 * n as i64 + 1;
    let lex = k.iter().fold(0i64, |acc, &x| acc * p + x + n as i64) as usize;
    2 * lex + usize::from(imaginary)
}

/// `cos⟨k,x⟩` and `sin⟨k,x⟩` on the grid, one pair per mode in lexicographic order.
fn trig_fields(g: Grid) -> Vec<(Arc<Vec<f64>>, Arc<Vec<f64>>)> {
    let pts = g.points();
    let d = g.d();
    lex_modes(d, g.n())
        .iter()
        .map(|k| {
            let phase: Vec<f64> = pts
                .chunks(d)
                .map(|x| x.iter().zip(k).map(|(xi, ki)| xi * *ki as f64).sum())
                .collect();
            (
                Arc::new(phase.iter().map(|t: &f64| t.cos()).collect()),
                Arc::new(phase.iter().map(|t: &f64| t.sin()).collect()),
            )
        })
        .collect()
}

/// Ψ-FNO on the resolution-`N` grid mapping `v` to `2|K_N|` constant channels
/// `(Re v̂_k, Im v̂_k)`, each within `eps` of the discrete Fourier coefficient.
///
/// Layers: an exact layer injecting `cos⟨k,x⟩`, `sin⟨k,x⟩` as biases next to `v`; a σ-layer
/// forming the products `v cos⟨k,x⟩`, `v sin⟨k,x⟩`; an exact layer applying the zero-mode
/// multiplier `δ₀`, which replaces each product by its grid mean.
pub fn build_ft_emulator(
    d: usize,
    n: usize,
    bound: InputBound,
    eps: f64,
    activation: Activation,
) -> Result<PsiFno, EmulationError> {
    let grid = Grid::new(d, n)?;
    let trig = trig_fields(grid);
    let mut factors = vec![Factor::Channel(0)];
    let mut products = Vec::new();
    for (c, s) in &trig {
        factors.push(Factor::Field(c.clone()));
        products.push((0, factors.len() - 1));
        factors.push(Factor::Field(s.clone()));
        products.push((0, factors.len() - 1));
    }
    let delta = mean_symbol(d);
    let outputs = (0..trig.len())
        .flat_map(|p| {
            [
                Output::new(vec![Term::filtered(Source::Product(2 * p), &delta, 1.0)]),
                Output::new(vec![Term::filtered(Source::Product(2 * p + 1), &delta, -1.0)]),
            ]
        })
        .collect();
    let plan = BlockPlan {
        grid,
        inputs: 1,
        factors,
        products,
        carries: Vec::new(),
        outputs,
        scales: Vec::new(),
    };
    let factor_bound = bound.sup(d, n).max(1.0);
    // the mean of pointwise errors is bounded by their maximum
    let (square, _) = calibrate_square(activation, factor_bound, eps)?;
    let (pass, _) = calibrate_pass(activation, 1.0, eps)?;
    Ok(plan
        .build(square, pass, activation)?
        .with_metadata("eps", eps)
        .with_metadata("factor_bound", factor_bound))
}

/// Ψ-FNO mapping `2|K_N|` constant coefficient channels to `v = Σ_k c_k e^{i⟨k,x⟩}` on the
/// resolution-`N` grid, within `eps` in `L²` (and `eps/(2π)^{d/2}` at every grid point).
///
/// `bound` bounds the field whose coefficients are fed in.
pub fn build_ift_emulator(
    d: usize,
    n: usize,
    bound: InputBound,
    eps: f64,
    activation: Activation,
) -> Result<PsiFno, EmulationError> {
    let grid = Grid::new(d, n)?;
    let trig = trig_fields(grid);
    let modes = trig.len();
    let mut factors = Vec::new();
    let mut products = Vec::new();
    for (p, (c, s)) in trig.iter().enumerate() {
        factors.push(Factor::Channel(2 * p));
        factors.push(Factor::Field(c.clone()));
        products.push((factors.len() - 2, factors.len() - 1));
        factors.push(Factor::Channel(2 * p + 1));
        factors.push(Factor::Field(s.clone()));
        products.push((factors.len() - 2, factors.len() - 1));
    }
    // Σ_k c_k e^{ikx} = Σ_k (Re c_k cos⟨k,x⟩ - Im c_k sin⟨k,x⟩)
    let terms = (0..modes)
        .flat_map(|p| {
            [
                Term::local(Source::Product(2 * p), 1.0),
                Term::local(Source::Product(2 * p + 1), -1.0),
            ]
        })
        .collect();
    let plan = BlockPlan {
        grid,
        inputs: 2 * modes,
        factors,
        products,
        carries: Vec::new(),
        outputs: vec![Output::new(terms)],
        scales: Vec::new(),
    };
    let coef_bound = match bound {
        InputBound::L2(b) => b / (2.0 * PI).powf(d as f64 / 2.0),
        InputBound::Sup(b) => b,
    };
    let factor_bound = (coef_bound * (1.0 + 1e-3) + 1e-3).max(1.0);
    let eps_sq = eps / (2.0 * modes as f64 * (2.0 * PI).powf(d as f64 / 2.0));
    let (square, _) = calibrate_square(activation, factor_bound, eps_sq)?;
    let (pass, _) = calibrate_pass(activation, 1.0, eps_sq)?;
    Ok(plan
        .build(square, pass, activation)?
        .with_metadata("eps", eps)
        .with_metadata("factor_bound", factor_bound))
}

/// `ift ∘ conjugate ∘ ft`: a network acting on Fourier coefficients, wrapped so that it acts on
/// grid functions. `conjugate` must map `2|K_N|` channels to `2|K_N|` channels.
pub fn fourier_conjugate_pipeline(ft: &PsiFno, conjugate: &PsiFno, ift: &PsiFno) -> Result<PsiFno, EmulationError> {
    Ok(compose(ift, &compose(conjugate, ft)?)?)
}

/// Exact coefficient channels of `v`, in the layout produced by [`build_ft_emulator`].
pub fn coefficient_field(v: &GridField) -> Vec<f64> {
    let c = crate::spectral::dft(v);
    let n = v.grid().n();
    lex_modes(v.grid().d(), n)
        .iter()
        .flat_map(|k| {
            let z = c.get(0, k);
            [z.re, z.im]
        })
        .collect()
}

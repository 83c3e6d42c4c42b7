use std::f64::consts::PI;
use std::sync::Arc;

use super::blocks::{
    divergence_solve_symbol, derivative_symbol, matrix_net, multiplier_from, truncation_symbol, BlockPlan, Factor,
    Output, Source, Term,
};
use super::{calibrate_pass, calibrate_square, gradient_sup_from_h1, EmulationError, InputBound};
use crate::darcy::{iteration_count, zero_mean_truncation, DarcyError};
use crate::fno::{compose, Activation, Bias, FnoLayer, PsiFno};
use crate::spectral::{inverse_laplacian, resample, sobolev_norm, Grid, GridField, SobolevIndex};

/// Channels `(a, u)` to `([a,] P_N(a ∂_1 u), …, P_N(a ∂_d u))` on the `2N` grid.
fn nonlinearity_plan(d: usize, n: usize, carry: bool) -> Result<BlockPlan, EmulationError> {
    let grid = Grid::new(d, 2 * n)?;
    let mut factors = vec![Factor::Channel(0)];
    for j in 0..d {
        factors.push(Factor::Filtered {
            channel: 1,
            symbol: derivative_symbol(d, n, j),
        });
    }
    let trunc = truncation_symbol(d, n, false);
    let mut outputs = Vec::new();
    if carry {
        outputs.push(Output::new(vec![Term::local(Source::Carry(0), 1.0)]));
    }
    for j in 0..d {
        outputs.push(Output::new(vec![Term::filtered(Source::Product(j), &trunc, 1.0)]));
    }
    Ok(BlockPlan {
        grid,
        inputs: 2,
        factors,
        products: (0..d).map(|j| (0, 1 + j)).collect(),
        carries: if carry { vec![0] } else { Vec::new() },
        outputs,
        scales: Vec::new(),
    })
}

/// Factor scales `(s, 1/s, …, 1/s)` for the factors `(a, ∂_1 u, …, ∂_d u)`.
fn balanced_scales(d: usize, s: f64) -> Vec<f64> {
    std::iter::once(s).chain(std::iter::repeat(1.0 / s).take(d)).collect()
}

/// Ψ-FNO on the `2N` grid mapping `(a_N, u_N)` to `P_N(a_N ∇u_N)` (`d` channels).
///
/// `bound` controls both inputs; the output is within `eps` in `L²` of the exact de-aliased
/// product whenever the inputs have modes in `K_N` and respect `bound`.
pub fn build_nonlinearity_net_darcy(
    d: usize,
    n: usize,
    bound: InputBound,
    eps: f64,
    activation: Activation,
) -> Result<PsiFno, EmulationError> {
    let mut plan = nonlinearity_plan(d, n, false)?;
    let (a_sup, grad_sup) = (bound.sup(d, n), bound.derivative_sup(d, n));
    let balance = (grad_sup / a_sup).sqrt();
    plan.scales = balanced_scales(d, balance);
    let factor_bound = (a_sup * grad_sup).sqrt();
    // pointwise error e on the 2N grid costs at most (2π)^{d/2}√d·e in L²
    let eps_sq = eps / ((2.0 * PI).powf(d as f64 / 2.0) * (d as f64).sqrt());
    let (square, _) = calibrate_square(activation, factor_bound, eps_sq)?;
    let (pass, _) = calibrate_pass(activation, 1.0, eps_sq)?;
    Ok(plan
        .build(square, pass, activation)?
        .with_metadata("eps", eps)
        .with_metadata("factor_bound", factor_bound))
}

/// Ψ-FNO replaying the Picard iteration for `-∇·(a∇u) = f` with `K = iteration_count(λ, N, k)`.
///
/// Input: `a` (one channel, any grid with radius ≥ `2N`; it is resampled to the `2N` grid
/// exactly as the solver does). Output: `u_K` on the `2N` grid. For every `a` whose `ã_N`
/// respects `a_bound` on the `2N` grid, `‖output - u_K‖_{H¹} ≤ eps`.
///
/// Layers: one truncation layer producing `(ã_N, 0)`, then per iteration the three layers of
/// the nonlinearity (with `ã_N` carried) and one exact update layer
/// `(a, U) ↦ (a, Ṗ_N(-Δ)^{-1}∇·U + (-Δ)^{-1}f_N)`; depth `1 + 4K`.
pub fn build_darcy_emulator(
    f: &GridField,
    lambda: f64,
    n: usize,
    k: u32,
    a_bound: InputBound,
    eps: f64,
    activation: Activation,
) -> Result<PsiFno, EmulationError> {
    if f.channels() != 1 {
        return Err(EmulationError::BadParameters("source must be a scalar field".into()));
    }
    if !(eps > 0.0) {
        return Err(EmulationError::BadParameters(format!("accuracy must be positive, got {eps}")));
    }
    let d = f.grid().d();
    let iterations = iteration_count(lambda, n, k)?;
    if f.grid().n() < 2 * n {
        return Err(DarcyError::InsufficientResolution {
            have: f.grid().n(),
            need: 2 * n,
        }
        .into());
    }
    let a_sup = a_bound.sup(d, n);
    let limit = 1.0 - lambda / 2.0;
    if a_sup > limit {
        return Err(DarcyError::CoercivityViolation {
            what: "bound on |a~_N|",
            value: a_sup,
            limit,
        }
        .into());
    }
    let lip = a_sup;

    let f_n = zero_mean_truncation(&resample(f, 2 * n)?, n)?;
    let source = inverse_laplacian(&f_n);
    let iterate_h1 = sobolev_norm(&source, SobolevIndex::DOT_H1) / (1.0 - lip);
    let grad_sup = gradient_sup_from_h1(d, n, iterate_h1);

    // per-iteration pointwise budget; the contraction sums the iteration errors to ≤ eps
    let eps_p = eps * (1.0 - lip) / ((2.0 * PI).powf(d as f64 / 2.0) * (d as f64).sqrt());
    let eps_sq = eps_p / 2.0;
    let eps_pass = eps_p / (2.0 * iterations as f64 * grad_sup.max(1.0));
    let a_drift = a_sup + iterations as f64 * eps_pass;
    // a is scaled up and ∇u down by the same factor, so the square unit only has to cover
    // √(sup|a|·sup|∇u|)
    let a_ref = a_drift.max(1e-3);
    let grad_ref = grad_sup.max(a_ref);
    let balance = (grad_ref / a_ref).sqrt();
    let (square, _) = calibrate_square(activation, (a_ref * grad_ref).sqrt(), eps_sq)?;
    let (pass, _) = calibrate_pass(activation, a_ref * balance, eps_pass * balance)?;

    let grid = Grid::new(d, 2 * n)?;
    let trunc0 = truncation_symbol(d, n, true);
    let prep_layer = FnoLayer::new(vec![0.0; 4], Bias::Zero, multiplier_from(d, 2, &[(0, 0, &trunc0, 1.0)])?, false)?;
    let prep = PsiFno::new(grid, 1, 2, vec![1.0, 0.0], vec![prep_layer], vec![1.0, 0.0, 0.0, 1.0], activation)?;

    let mut plan = nonlinearity_plan(d, n, true)?;
    plan.scales = balanced_scales(d, balance);
    let nonlinearity = plan.build(square, pass, activation)?;

    let dim = 1 + d;
    let mut w = vec![0.0; dim * dim];
    w[0] = 1.0;
    let symbols: Vec<_> = (0..d).map(|j| divergence_solve_symbol(d, n, j)).collect();
    let terms: Vec<_> = (0..d).map(|j| (1, 1 + j, &symbols[j], 1.0)).collect();
    let mut bias_vals = vec![0.0; dim * grid.len()];
    bias_vals[grid.len()..2 * grid.len()].copy_from_slice(resample(&source, 2 * n)?.values());
    let update_layer = FnoLayer::new(
        w,
        Bias::Field(Arc::new(GridField::new(grid, dim, bias_vals)?)),
        multiplier_from(d, dim, &terms)?,
        false,
    )?;
    let mut select = vec![0.0; 2 * dim];
    select[0] = 1.0;
    select[dim + 1] = 1.0;
    let mut eye = vec![0.0; dim * dim];
    for i in 0..dim {
        eye[i * dim + i] = 1.0;
    }
    let update = PsiFno::new(grid, dim, 2, eye, vec![update_layer], select, activation)?;

    let mut net = prep;
    for _ in 0..iterations {
        net = compose(&nonlinearity, &net)?;
        net = compose(&update, &net)?;
    }
    let net = compose(&matrix_net(grid, 1, 2, vec![0.0, 1.0], activation)?, &net)?;
    Ok(net
        .with_metadata("eps", eps)
        .with_metadata("iterations", iterations as f64)
        .with_metadata("lambda", lambda)
        .with_metadata("lipschitz_bound", lip)
        .with_metadata("gradient_bound", grad_sup)
        .with_metadata("square_h", square.h)
        .with_metadata("pass_h", pass.h))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::darcy::{prepare_coefficients, random_decay_coefficient, solve, DarcyProblem};
    use crate::fno::size_report;
    use crate::spectral::{dealiased_product, derivative, idft, l2_norm, symmetrize, SpectralCoeffs};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn oracle(a: &GridField, u: &GridField) -> GridField {
        let parts: Vec<GridField> = (0..a.grid().d())
            .map(|j| dealiased_product(a, &derivative(u, j).unwrap()).unwrap())
            .collect();
        GridField::stack(&parts.iter().collect::<Vec<_>>()).unwrap()
    }

    /// Random real field with modes in `K_N`, `max|v| = scale`.
    pub(crate) fn band_limited(g: Grid, seed: u64, scale: f64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = SpectralCoeffs::zeros(g, 1);
        let k2 = g.k_squared();
        for (z, s) in c.channel_mut(0).iter_mut().zip(&k2) {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (1.0 + s);
        }
        let v = idft(&symmetrize(&c)).unwrap();
        let m = v.max_abs();
        v.scaled(scale / m)
    }

    #[test]
    fn nonlinearity_matches_dealiased_oracle() {
        let n = 4;
        let g = Grid::new(2, n).unwrap();
        let eps = 1e-4;
        let net = build_nonlinearity_net_darcy(2, n, InputBound::Sup(4.0), eps, Activation::Tanh).unwrap();
        let a = band_limited(g, 1, 1.0);
        let u = band_limited(g, 2, 0.3);
        let want = oracle(&a, &u);
        let got = resample(&net.forward(&GridField::stack(&[&a, &u]).unwrap()).unwrap(), n).unwrap();
        assert!(l2_norm(&got.sub(&want).unwrap()) <= eps);

        let zero = GridField::zeros(g, 1);
        let out = net.forward(&GridField::stack(&[&zero, &u]).unwrap()).unwrap();
        assert!(l2_norm(&out) <= eps);
    }

    #[test]
    fn nonlinearity_on_single_mode() {
        // a = 1, u = sin x₁: P_N(a∇u) = (cos x₁, 0)
        let n = 3;
        let g = Grid::new(2, n).unwrap();
        let net = build_nonlinearity_net_darcy(2, n, InputBound::Sup(2.0), 1e-5, Activation::Tanh).unwrap();
        let a = GridField::constant(g, &[1.0]);
        let u = GridField::from_fn(g, 1, |x, _| x[0].sin());
        let out = resample(&net.forward(&GridField::stack(&[&a, &u]).unwrap()).unwrap(), n).unwrap();
        let want = GridField::from_fn(g, 2, |x, c| if c == 0 { x[0].cos() } else { 0.0 });
        assert!(l2_norm(&out.sub(&want).unwrap()) <= 1e-5);
    }

    #[test]
    fn nonlinearity_width_scales_with_grid() {
        let sizes: Vec<_> = [4, 8, 16]
            .iter()
            .map(|&n| size_report(&build_nonlinearity_net_darcy(2, n, InputBound::Sup(1.0), 1e-3, Activation::Tanh).unwrap()))
            .collect();
        for (s, n) in sizes.iter().zip([4usize, 8, 16]) {
            assert_eq!(s.depth, 3);
            assert_eq!(s.lift, sizes[0].lift);
            assert_eq!(s.width, s.lift * (4 * n + 1).pow(2));
        }
    }

    #[test]
    fn emulator_tracks_solver() {
        let n = 4;
        let d = 2;
        let lambda = 0.5;
        let fine = Grid::new(d, 2 * n).unwrap();
        let f = GridField::from_fn(fine, 1, |x, _| x[0].cos() + 0.5 * (x[0] + 2.0 * x[1]).sin());
        let eps = 1e-3;
        let net = build_darcy_emulator(&f, lambda, n, 1, InputBound::Sup(1.0 - lambda / 2.0), eps, Activation::Tanh)
            .unwrap();
        let k = iteration_count(lambda, n, 1).unwrap();
        assert_eq!(net.depth(), 1 + 4 * k);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let a = random_decay_coefficient(d, 0.8, 3, lambda, &mut rng).sample(fine).unwrap();
            let prep = prepare_coefficients(&a, &f, n).unwrap();
            assert!(prep.a_tilde_sup < 1.0 - lambda / 2.0);
            let reference = solve(&DarcyProblem::new(a.clone(), f.clone(), lambda, 1, n).unwrap()).unwrap().u;
            let out = resample(&net.forward(&a).unwrap(), n).unwrap();
            let err = sobolev_norm(&out.sub(&reference).unwrap(), SobolevIndex::H1);
            assert!(err <= eps, "{err}");
        }
    }

    #[test]
    fn constant_coefficient_recovers_source_inverse() {
        // a ≡ 1, f = cos x₁: u = cos x₁
        let n = 4;
        let fine = Grid::new(2, 2 * n).unwrap();
        let f = GridField::from_fn(fine, 1, |x, _| x[0].cos());
        let net = build_darcy_emulator(&f, 0.5, n, 1, InputBound::Sup(0.75), 1e-3, Activation::Tanh).unwrap();
        let out = resample(&net.forward(&GridField::constant(fine, &[1.0])).unwrap(), n).unwrap();
        let want = GridField::from_fn(Grid::new(2, n).unwrap(), 1, |x, _| x[0].cos());
        assert!(sobolev_norm(&out.sub(&want).unwrap(), SobolevIndex::H1) <= 1e-3);
    }

    #[test]
    fn coercivity_is_required() {
        let fine = Grid::new(2, 8).unwrap();
        let f = GridField::from_fn(fine, 1, |x, _| x[0].cos());
        let r = build_darcy_emulator(&f, 0.5, 4, 1, InputBound::Sup(0.9), 1e-3, Activation::Tanh);
        assert!(matches!(r, Err(EmulationError::Darcy(DarcyError::CoercivityViolation { .. }))));
    }
}

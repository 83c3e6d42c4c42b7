use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::blocks::{
    derivative_symbol, helmholtz_symbol, leray_symbol, linear_net, matrix_net, multiplier_from, BlockPlan, Factor,
    Output, Source, Term,
};
use super::{calibrate_pass, calibrate_square, EmulationError, InputBound};
use crate::fno::{compose, Activation, Bias, PsiFno};
use crate::navier_stokes::{
    picard_iterates_first, random_divergence_free, step_first_order, taylor_green_scaled, NsConfig, NsState,
};
use crate::spectral::{gradient, l2_norm, resample, Grid, GridField};

/// Seed of the probe fields used to measure bounds and Lipschitz constants.
const PROBE_SEED: u64 = 0x5eed;
const RANDOM_PROBES: usize = 3;

/// Channels `(u, w)` to `([u,] ℙ_N(u·∇w))` on the `2N` grid; product `c·d + a` is `u_a ∂_a w_c`.
fn nonlinearity_plan(d: usize, n: usize, carry: bool) -> Result<BlockPlan, EmulationError> {
    let grid = Grid::new(d, 2 * n)?;
    let mut factors: Vec<Factor> = (0..d).map(Factor::Channel).collect();
    let derivs: Vec<_> = (0..d).map(|a| derivative_symbol(d, n, a)).collect();
    let mut products = Vec::new();
    for c in 0..d {
        for a in 0..d {
            factors.push(Factor::Filtered {
                channel: d + c,
                symbol: derivs[a].clone(),
            });
            products.push((a, factors.len() - 1));
        }
    }
    let mut leray = vec![None; d * d];
    for c in 0..d {
        for c2 in c..d {
            let s = leray_symbol(d, n, c, c2);
            leray[c * d + c2] = Some(s.clone());
            leray[c2 * d + c] = Some(s);
        }
    }
    let mut outputs = Vec::new();
    if carry {
        for a in 0..d {
            outputs.push(Output::new(vec![Term::local(Source::Carry(a), 1.0)]));
        }
    }
    for c in 0..d {
        let mut terms = Vec::new();
        for c2 in 0..d {
            let s = leray[c * d + c2].as_ref().expect("filled above");
            for a in 0..d {
                terms.push(Term::filtered(Source::Product(c2 * d + a), s, 1.0));
            }
        }
        outputs.push(Output::new(terms));
    }
    Ok(BlockPlan {
        grid,
        inputs: 2 * d,
        factors,
        products,
        carries: if carry { (0..d).collect() } else { Vec::new() },
        outputs,
        scales: Vec::new(),
    })
}

fn l2_factor(d: usize) -> f64 {
    (2.0 * PI).powf(d as f64 / 2.0)
}

/// Ψ-FNO on the `2N` grid mapping `(u_N, w_N)` (`2d` channels) to `ℙ_N(u_N·∇w_N)`, within `eps`
/// in `L²` when both inputs have modes in `K_N` and respect `bound`.
pub fn build_ns_nonlinearity_net(
    d: usize,
    n: usize,
    bound: InputBound,
    eps: f64,
    activation: Activation,
) -> Result<PsiFno, EmulationError> {
    let plan = nonlinearity_plan(d, n, false)?;
    let factor_bound = bound.sup(d, n).max(bound.derivative_sup(d, n));
    // each component sums d products; ℙ_N does not increase the L² norm
    let eps_sq = eps / (l2_factor(d) * (d as f64).powf(1.5));
    let (square, _) = calibrate_square(activation, factor_bound, eps_sq)?;
    let (pass, _) = calibrate_pass(activation, 1.0, eps_sq)?;
    Ok(plan
        .build(square, pass, activation)?
        .with_metadata("eps", eps)
        .with_metadata("factor_bound", factor_bound))
}

/// Bounds measured on solver trajectories from probe initial data of norm `U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasuredBounds {
    /// Largest grid value of `u^n` or of `∂_a w^{n,k}_c` on the `2N` grid, over all steps and inner iterates.
    pub factor_sup: f64,
    /// Largest observed `‖S(u+δ) - S(u)‖/‖δ‖` for one time step `S`.
    pub step_lipschitz: f64,
}

fn probe_fields(cfg: &NsConfig) -> Result<Vec<GridField>, EmulationError> {
    let mut out = Vec::new();
    if cfg.d == 2 {
        let tg = taylor_green_scaled(1.0, cfg.nu, 0.0, cfg.n)?;
        out.push(tg.scaled(cfg.u_bound / l2_norm(&tg)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let modes = cfg.n.min(3);
    for _ in 0..RANDOM_PROBES {
        out.push(random_divergence_free(cfg.d, cfg.n, modes, 1.0, cfg.u_bound, &mut rng)?);
    }
    Ok(out)
}

/// Factor bound and one-step Lipschitz constant measured on seeded probe trajectories.
pub fn measure_bounds(cfg: &NsConfig) -> Result<MeasuredBounds, EmulationError> {
    cfg.validate()?;
    let kappa = cfg.kappa_first()?;
    let fine = 2 * cfg.n;
    let mut factor_sup = 0.0f64;
    let mut step_lipschitz = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED + 1);
    for u0 in probe_fields(cfg)? {
        let mut u = u0;
        for step in 0..cfg.steps() {
            factor_sup = factor_sup.max(resample(&u, fine)?.max_abs());
            let iterates = picard_iterates_first(&u, cfg.nu, cfg.tau, kappa)?;
            for w in &iterates {
                factor_sup = factor_sup.max(resample(&gradient(w), fine)?.max_abs());
            }
            let delta = random_divergence_free(cfg.d, cfg.n, cfg.n.min(3), 1.0, 1e-6 * cfg.u_bound, &mut rng)?;
            let s = |v: &GridField| {
                step_first_order(
                    &NsState {
                        step,
                        u: v.clone(),
                    },
                    cfg,
                )
            };
            let moved = s(&u.add(&delta)?)?.u;
            let base = s(&u)?.u;
            step_lipschitz = step_lipschitz.max(l2_norm(&moved.sub(&base)?) / l2_norm(&delta));
            u = iterates.into_iter().last().expect("at least one iterate");
        }
    }
    Ok(MeasuredBounds {
        factor_sup,
        step_lipschitz,
    })
}

/// Ψ-FNO replaying the first-order scheme on `[0, T]`: input `u⁰` (`d` channels), output `u^{n_T}`
/// on the `2N` grid.
///
/// Per time step: `κ₀` blocks of [nonlinearity with `u^n` carried; exact layer
/// `(u, A) ↦ (u, Hu - τHA)`], then the shift `(u, w) ↦ (w, 0)` folded into the next block.
/// The per-block budget is `eps_total/(n_T κ₀ Λ)` with `Λ = 2 max(1, L_step)^{n_T}`, `L_step`
/// the measured one-step Lipschitz constant. `factor_bound` bounds the grid values of `u^n`
/// and `∂_a w`; when absent it is twice the value measured on probe trajectories.
pub fn build_ns_emulator(
    cfg: &NsConfig,
    eps_total: f64,
    factor_bound: Option<f64>,
    activation: Activation,
) -> Result<PsiFno, EmulationError> {
    cfg.validate()?;
    if !(eps_total > 0.0) {
        return Err(EmulationError::BadParameters(format!("accuracy must be positive, got {eps_total}")));
    }
    let (d, n, tau) = (cfg.d, cfg.n, cfg.tau);
    let steps = cfg.steps();
    let kappa = cfg.kappa_first()?;
    let measured = measure_bounds(cfg)?;
    let bound = factor_bound.unwrap_or(2.0 * measured.factor_sup);
    let amplification = 2.0 * measured.step_lipschitz.max(1.0).powi(steps as i32);
    let eps_block = eps_total / (steps as f64 * kappa as f64 * amplification);
    let df = d as f64;
    let eps_sq = eps_block / (2.0 * tau * l2_factor(d) * df.powf(1.5));
    let eps_pass = eps_block / (2.0 * l2_factor(d) * df.sqrt() * kappa as f64 * (1.0 + tau * df * bound));
    let (square, _) = calibrate_square(activation, bound, eps_sq)?;
    let (pass, _) = calibrate_pass(activation, bound, eps_pass)?;

    let grid = Grid::new(d, 2 * n)?;
    let nonlinearity = nonlinearity_plan(d, n, true)?.build(square, pass, activation)?;

    let dim = 2 * d;
    let mut w = vec![0.0; dim * dim];
    for a in 0..d {
        w[a * dim + a] = 1.0;
    }
    let hs = helmholtz_symbol(d, n, cfg.nu * tau);
    let mut terms = Vec::new();
    for c in 0..d {
        terms.push((d + c, c, &hs, 1.0));
        terms.push((d + c, d + c, &hs, -tau));
    }
    let implicit = linear_net(grid, dim, w, Bias::Zero, multiplier_from(d, dim, &terms)?, activation)?;

    let mut shift = vec![0.0; dim * dim];
    for a in 0..d {
        shift[a * dim + d + a] = 1.0;
    }
    let shift = matrix_net(grid, dim, dim, shift, activation)?;
    let mut lift = vec![0.0; dim * d];
    for a in 0..d {
        lift[a * d + a] = 1.0;
    }
    let mut net = matrix_net(grid, dim, d, lift, activation)?;
    for step in 0..steps {
        if step > 0 {
            net = compose(&shift, &net)?;
        }
        for _ in 0..kappa {
            net = compose(&nonlinearity, &net)?;
            net = compose(&implicit, &net)?;
        }
    }
    let mut select = vec![0.0; d * dim];
    for a in 0..d {
        select[a * dim + d + a] = 1.0;
    }
    let net = compose(&matrix_net(grid, d, dim, select, activation)?, &net)?;
    Ok(net
        .with_metadata("eps_total", eps_total)
        .with_metadata("eps_block", eps_block)
        .with_metadata("steps", steps as f64)
        .with_metadata("kappa", kappa as f64)
        .with_metadata("factor_bound", bound)
        .with_metadata("step_lipschitz", measured.step_lipschitz)
        .with_metadata("square_h", square.h)
        .with_metadata("pass_h", pass.h))
}

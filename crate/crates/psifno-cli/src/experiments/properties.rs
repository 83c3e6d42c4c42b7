use rayon::prelude::*;

use psifno::darcy::{picard_step, prepare_coefficients, random_decay_coefficient};
use psifno::navier_stokes::{max_cfl_timestep, picard_iterates_first, random_divergence_free, run_first_order, NsConfig};
use psifno::spectral::{l2_norm, sobolev_norm, Grid, GridField, SobolevIndex};

use crate::config::{ContractionParams, PropertySuiteParams, StabilityParams};
use crate::random::{band_limited, stream};
use crate::report::{num, CriterionResult, Outcome, Table};
use crate::{Context, HarnessError};

/// Slack on the contraction bound for rounding in the products.
const CONTRACTION_SLACK: f64 = 1e-8;
/// Relative slack on energy monotonicity, for rounding only.
const ENERGY_ROUNDING: f64 = 1e-12;
/// Relative slack on the geometric decay of the inner iterates.
const DECAY_SLACK: f64 = 1e-6;

struct PairResult {
    ratio: f64,
    a_tilde_sup: f64,
}

fn contraction_pair(p: &ContractionParams, seed: u64, i: usize) -> Result<PairResult, HarnessError> {
    let mut rng = stream(seed, 10_000 + i as u64);
    let fine = Grid::new(p.d, 4 * p.n).context(|| "coefficient grid".into())?;
    let a = random_decay_coefficient(p.d, p.ell, p.modes, p.lambda, &mut rng)
        .sample(fine)
        .context(|| "coefficient".into())?;
    let f = GridField::from_fn(fine, 1, |x, _| x[0].cos());
    let prep = prepare_coefficients(&a, &f, p.n).context(|| "coefficient preparation".into())?;
    let g = Grid::new(p.d, p.n).context(|| "grid".into())?;
    let u = band_limited(g, 1, 2.0, true, &mut rng);
    let v = band_limited(g, 1, 2.0, true, &mut rng);
    let fu = picard_step(&u, &prep.a_tilde, &prep.f).context(|| "Picard step".into())?;
    let fv = picard_step(&v, &prep.a_tilde, &prep.f).context(|| "Picard step".into())?;
    let num = sobolev_norm(&fu.sub(&fv).context(|| "difference".into())?, SobolevIndex::DOT_H1);
    let den = sobolev_norm(&u.sub(&v).context(|| "difference".into())?, SobolevIndex::DOT_H1);
    Ok(PairResult {
        ratio: num / den,
        a_tilde_sup: prep.a_tilde_sup,
    })
}

fn contraction(p: &ContractionParams, seed: u64, out: &mut Outcome) -> Result<CriterionResult, HarnessError> {
    let results: Vec<PairResult> = (0..p.pairs)
        .into_par_iter()
        .map(|i| contraction_pair(p, seed, i))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new("darcy_contraction", &["pair", "lipschitz_ratio", "a_tilde_sup"]);
    let limit = 1.0 - p.lambda / 2.0;
    let mut c = CriterionResult::new(3, "Darcy contraction");
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut worst_sup = 0.0f64;
    for (i, r) in results.iter().enumerate() {
        table.push(vec![i.to_string(), num(r.ratio), num(r.a_tilde_sup)]);
        worst_gap = worst_gap.max(r.ratio - r.a_tilde_sup);
        worst_ratio = worst_ratio.max(r.ratio);
        worst_sup = worst_sup.max(r.a_tilde_sup);
    }
    c.at_most("ratio_minus_a_tilde_sup", worst_gap, CONTRACTION_SLACK)
        .at_most("a_tilde_sup", worst_sup, limit)
        .record("max_ratio", worst_ratio)
        .record("pairs", p.pairs as f64);
    out.tables.push(table);
    Ok(c)
}

fn stability(p: &StabilityParams, seed: u64, out: &mut Outcome) -> Result<CriterionResult, HarnessError> {
    let d = 2;
    let mut rng = stream(seed, 20_000);
    let u0 = random_divergence_free(d, p.n, p.modes, 2.0, p.norm, &mut rng).context(|| "initial field".into())?;
    let tau = max_cfl_timestep(p.norm, p.n, d);
    let base = NsConfig {
        d,
        n: p.n,
        nu: p.nu,
        t_final: p.steps as f64 * tau,
        tau,
        u_bound: p.norm,
        inner_iterations: Some(p.reference_iterations),
    };
    let standard = NsConfig {
        inner_iterations: None,
        ..base.clone()
    };
    let (converged, standard_run) = rayon::join(|| run_first_order(&base, &u0), || run_first_order(&standard, &u0));
    let converged = converged.context(|| "converged-iteration run".into())?;
    let standard_run = standard_run.context(|| "standard run".into())?;

    let mut energy = Table::new("ns_energy", &["step", "energy_converged", "energy_standard"]);
    let mut worst_increase = f64::NEG_INFINITY;
    for (n, (a, b)) in converged.energies.iter().zip(&standard_run.energies).enumerate() {
        energy.push(vec![n.to_string(), num(*a), num(*b)]);
        if n > 0 {
            let prev = converged.energies[n - 1];
            worst_increase = worst_increase.max((a - prev) / prev);
        }
    }

    let kappa = standard_run.kappa;
    let checks: Vec<usize> = (0..p.decay_steps.min(p.steps)).collect();
    let decay: Vec<Vec<(f64, f64)>> = checks
        .par_iter()
        .map(|&n| {
            let un = &converged.states[n];
            let it = picard_iterates_first(un, p.nu, tau, p.reference_iterations.max(kappa))
                .context(|| format!("inner iterates at step {n}"))?;
            let fixed = it.last().expect("iterates");
            let norm = l2_norm(un);
            (0..=kappa)
                .map(|k| {
                    let dist = l2_norm(&fixed.sub(&it[k]).context(|| "difference".into())?);
                    Ok((dist, 0.5f64.powi(k as i32) * norm))
                })
                .collect::<Result<Vec<_>, HarnessError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut iter_table = Table::new("ns_inner_decay", &["step", "k", "distance", "bound"]);
    let mut worst_decay = 0.0f64;
    for (n, rows) in checks.iter().zip(&decay) {
        for (k, (dist, bound)) in rows.iter().enumerate() {
            iter_table.push(vec![n.to_string(), k.to_string(), num(*dist), num(*bound)]);
            if *bound > 0.0 {
                worst_decay = worst_decay.max(dist / bound);
            }
        }
    }

    let mut c = CriterionResult::new(6, "NS stability");
    c.at_most("relative_energy_increase", worst_increase, ENERGY_ROUNDING)
        .at_most("energy_max_ratio", standard_run.energy_max_ratio(), std::f64::consts::E)
        .at_most("inner_decay_ratio", worst_decay, 1.0 + DECAY_SLACK)
        .record("tau", tau)
        .record("kappa0", kappa as f64);
    out.tables.push(energy);
    out.tables.push(iter_table);
    Ok(c)
}

/// Darcy contraction over random coefficient pairs and Navier-Stokes energy stability and
/// inner-iterate decay at the largest admissible time step.
pub fn property_suite(p: &PropertySuiteParams, seed: u64) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::default();
    let c3 = contraction(&p.contraction, seed, &mut out)?;
    let c6 = stability(&p.stability, seed, &mut out)?;
    out.criteria.push(c3);
    out.criteria.push(c6);
    Ok(out)
}

use rayon::prelude::*;

use psifno::navier_stokes::{run_first_order, run_second_order, taylor_green_scaled, NsConfig, Startup};
use psifno::spectral::l2_norm;

use super::timed;
use crate::config::{NsConvergeParams, Scheme};
use crate::rate::{fill_local_rates, fit_rate, ConvergenceRow, Refinement};
use crate::report::{opt, CriterionResult, Outcome, Table};
use crate::{Context, HarnessError};

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::First => "first",
        Scheme::Second => "second",
    }
}

fn run_one(p: &NsConvergeParams, scheme: Scheme, tau: f64) -> Result<(ConvergenceRow, usize, usize), HarnessError> {
    let (result, seconds) = timed(|| -> Result<_, HarnessError> {
        let u0 = taylor_green_scaled(p.amplitude, p.nu, 0.0, p.n).context(|| "Taylor-Green initial state".into())?;
        let cfg = NsConfig {
            d: 2,
            n: p.n,
            nu: p.nu,
            t_final: p.t_final,
            tau,
            u_bound: l2_norm(&u0),
            inner_iterations: None,
        };
        cfg.validate().context(|| format!("time step {tau}"))?;
        let traj = match scheme {
            Scheme::First => run_first_order(&cfg, &u0),
            Scheme::Second => run_second_order(&cfg, &u0, Startup::Richardson),
        }
        .context(|| format!("{} order run, tau={tau}", scheme_name(scheme)))?;
        let exact = taylor_green_scaled(p.amplitude, p.nu, p.t_final, p.n).context(|| "exact solution".into())?;
        let err = l2_norm(&traj.final_state().sub(&exact).context(|| "error".into())?);
        Ok((err, cfg.steps(), traj.kappa))
    });
    let (err, steps, kappa) = result?;
    Ok((
        ConvergenceRow {
            parameter: tau,
            l2_error: Some(err),
            h1_error: None,
            local_rate: None,
            seconds,
        },
        steps,
        kappa,
    ))
}

/// Taylor-Green vortex against its exact decay: `L²` error at `T` over a time-step sweep, per
/// scheme, with the fitted temporal rate required to fall in the configured range.
pub fn ns_converge(p: &NsConvergeParams) -> Result<Outcome, HarnessError> {
    let jobs: Vec<(Scheme, f64)> = p
        .schemes
        .iter()
        .flat_map(|&s| p.taus.iter().map(move |&t| (s, t)))
        .collect();
    let runs: Vec<_> = jobs
        .par_iter()
        .map(|&(s, t)| run_one(p, s, t))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new("ns_converge", &["scheme", "tau", "steps", "kappa", "l2_error", "local_rate"]);
    let mut out = Outcome::default();
    for &scheme in &p.schemes {
        let mut rows = Vec::new();
        let mut extra = Vec::new();
        for ((s, _), (row, steps, kappa)) in jobs.iter().zip(&runs) {
            if *s == scheme {
                rows.push(row.clone());
                extra.push((*steps, *kappa));
            }
        }
        fill_local_rates(&mut rows, |r| r.l2_error, Refinement::Step);
        for (r, (steps, kappa)) in rows.iter().zip(&extra) {
            table.push(vec![
                scheme_name(scheme).into(),
                crate::report::num(r.parameter),
                steps.to_string(),
                kappa.to_string(),
                opt(r.l2_error),
                opt(r.local_rate),
            ]);
            out.timings.insert(format!("{}.tau{}", scheme_name(scheme), r.parameter), r.seconds);
        }
        let taus: Vec<f64> = rows.iter().map(|r| r.parameter).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.l2_error.unwrap_or(0.0)).collect();
        let rate = fit_rate(&taus, &errs, Refinement::Step)?;
        out.slopes.insert(format!("l2.{}", scheme_name(scheme)), rate);
        let mut c = match scheme {
            Scheme::First => CriterionResult::new(4, "NS first-order rate"),
            Scheme::Second => CriterionResult::new(5, "NS second-order rate"),
        };
        let range = match scheme {
            Scheme::First => p.first_range,
            Scheme::Second => p.second_range,
        };
        c.within("l2_rate", rate, range).record("T", p.t_final).record("N", p.n as f64);
        out.criteria.push(c);
    }
    out.tables.push(table);
    Ok(out)
}

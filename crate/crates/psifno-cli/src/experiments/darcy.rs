use rayon::prelude::*;

use psifno::darcy::{band_limited_problem, rough_problem, solve, ManufacturedProblem};
use psifno::spectral::{l2_norm, resample};

use super::timed;
use crate::config::{DarcyConvergeParams, ManufacturedKind};
use crate::rate::{fill_local_rates, fit_rate, ConvergenceRow, Refinement};
use crate::report::{opt, CriterionResult, Outcome, Table};
use crate::{Context, HarnessError};

fn manufactured(p: &DarcyConvergeParams, k: u32) -> Result<ManufacturedProblem, HarnessError> {
    match p.solution {
        ManufacturedKind::BandLimited => band_limited_problem(p.d, p.amplitude),
        ManufacturedKind::Rough => rough_problem(p.d, k, p.amplitude),
    }
    .context(|| format!("manufactured solution for k={k}"))
}

fn run_one(m: &ManufacturedProblem, p: &DarcyConvergeParams, k: u32, n: usize) -> Result<(ConvergenceRow, usize), HarnessError> {
    let (result, seconds) = timed(|| -> Result<_, HarnessError> {
        let problem = m.problem(n, p.lambda, k).context(|| format!("Darcy problem N={n} k={k}"))?;
        let sol = solve(&problem).context(|| format!("Darcy solve N={n} k={k}"))?;
        let h1 = m.h1_error(&sol.u).context(|| "H1 error".into())?;
        let r = sol.u.grid().n().max(m.u_exact.grid().n());
        let diff = resample(&sol.u, r)
            .and_then(|u| u.sub(&resample(&m.u_exact, r)?))
            .context(|| "L2 error".into())?;
        Ok((h1, l2_norm(&diff), sol.iterations))
    });
    let (h1, l2, iters) = result?;
    Ok((
        ConvergenceRow {
            parameter: n as f64,
            l2_error: Some(l2),
            h1_error: Some(h1),
            local_rate: None,
            seconds,
        },
        iters,
    ))
}

/// Galerkin-Picard solver against a manufactured solution: `H¹` error over a resolution sweep for
/// each `k`, with the fitted rate required to reach `k - slope_margin`.
pub fn darcy_converge(p: &DarcyConvergeParams) -> Result<Outcome, HarnessError> {
    let problems: Vec<(u32, ManufacturedProblem)> = p
        .k
        .par_iter()
        .map(|&k| Ok((k, manufactured(p, k)?)))
        .collect::<Result<_, HarnessError>>()?;
    let jobs: Vec<(usize, usize)> = (0..problems.len())
        .flat_map(|i| p.n.iter().map(move |&n| (i, n)))
        .collect();
    let runs: Vec<(ConvergenceRow, usize)> = jobs
        .par_iter()
        .map(|&(i, n)| run_one(&problems[i].1, p, problems[i].0, n))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new("darcy_converge", &["k", "N", "iterations", "l2_error", "h1_error", "local_rate"]);
    let mut out = Outcome::default();
    let mut crit = CriterionResult::new(2, "darcy rate");
    for (i, (k, _)) in problems.iter().enumerate() {
        let mut rows: Vec<ConvergenceRow> = Vec::new();
        let mut iters = Vec::new();
        for ((j, _), (row, it)) in jobs.iter().zip(&runs) {
            if *j == i {
                rows.push(row.clone());
                iters.push(*it);
            }
        }
        fill_local_rates(&mut rows, |r| r.h1_error, Refinement::Resolution);
        for (r, it) in rows.iter().zip(&iters) {
            table.push(vec![
                k.to_string(),
                (r.parameter as usize).to_string(),
                it.to_string(),
                opt(r.l2_error),
                opt(r.h1_error),
                opt(r.local_rate),
            ]);
            out.timings.insert(format!("k{k}.N{}", r.parameter), r.seconds);
        }
        let ns: Vec<f64> = rows.iter().map(|r| r.parameter).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.h1_error.unwrap_or(0.0)).collect();
        let rate = fit_rate(&ns, &errs, Refinement::Resolution)?;
        out.slopes.insert(format!("h1.k{k}"), rate);
        crit.at_least(&format!("h1_rate.k{k}"), rate, *k as f64 - p.slope_margin);
    }
    crit.record("lambda", p.lambda);
    out.criteria.push(crit);
    out.tables.push(table);
    Ok(out)
}

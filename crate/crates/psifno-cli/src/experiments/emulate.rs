use rayon::prelude::*;

use psifno::darcy::{prepare_coefficients, random_decay_coefficient, solve, DarcyProblem};
use psifno::emulation::{build_darcy_emulator, build_ft_emulator, build_ift_emulator, build_ns_emulator,
    coefficient_field, fourier_conjugate_pipeline, InputBound};
use psifno::fno::{size_report, PsiFno, SizeReport};
use psifno::navier_stokes::{random_divergence_free, run_first_order, taylor_green_scaled, NsConfig};
use psifno::spectral::{dft, l2_norm, resample, sobolev_norm, Grid, GridField, SobolevIndex};

use super::timed;
use crate::config::{DarcyEmulateParams, FtEmulateParams, NsEmulateParams};
use crate::random::{band_limited, stream};
use crate::report::{num, CriterionResult, Outcome, Table};
use crate::{Context, HarnessError};

fn source_term(fine: Grid) -> GridField {
    let d = fine.d();
    GridField::from_fn(fine, 1, |x, _| x[0].cos() + 0.5 * (x[0] + 2.0 * x[d - 1]).sin())
}

struct DarcySweepPoint {
    n: usize,
    size: SizeReport,
    errors: Vec<f64>,
    a_tilde_sup: f64,
    build_seconds: f64,
    probe_seconds: f64,
}

fn darcy_point(p: &DarcyEmulateParams, seed: u64, n: usize) -> Result<DarcySweepPoint, HarnessError> {
    let fine = Grid::new(p.d, 2 * n).context(|| "grid".into())?;
    let f = source_term(fine);
    let a_bound = InputBound::Sup(1.0 - p.lambda / 2.0);
    let (net, build_seconds) = timed(|| build_darcy_emulator(&f, p.lambda, n, p.k, a_bound, p.eps, p.activation));
    let net = net.context(|| format!("Darcy emulator N={n}"))?;
    let (results, probe_seconds) = timed(|| {
        (0..p.probes)
            .into_par_iter()
            .map(|i| -> Result<(f64, f64), HarnessError> {
                // the same coefficient sequence at every resolution
                let mut rng = stream(seed, 30_000 + i as u64);
                let a = random_decay_coefficient(p.d, p.ell, p.modes, p.lambda, &mut rng)
                    .sample(fine)
                    .context(|| "coefficient".into())?;
                let prep = prepare_coefficients(&a, &f, n).context(|| "coefficient check".into())?;
                let problem = DarcyProblem::new(a.clone(), f.clone(), p.lambda, p.k, n).context(|| "problem".into())?;
                let reference = solve(&problem).context(|| format!("reference solve N={n}"))?.u;
                let out = net.forward(&a).context(|| "emulator forward".into())?;
                let out = resample(&out, n).context(|| "resample".into())?;
                let diff = out.sub(&reference).context(|| "difference".into())?;
                Ok((sobolev_norm(&diff, SobolevIndex::H1), prep.a_tilde_sup))
            })
            .collect::<Result<Vec<_>, _>>()
    });
    let results = results?;
    Ok(DarcySweepPoint {
        n,
        size: size_report(&net),
        errors: results.iter().map(|r| r.0).collect(),
        a_tilde_sup: results.iter().map(|r| r.1).fold(0.0, f64::max),
        build_seconds,
        probe_seconds,
    })
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Darcy emulator against the solver on random coercive coefficients, with the depth and width
/// growth across the resolution sweep.
pub fn darcy_emulate(p: &DarcyEmulateParams, seed: u64) -> Result<Outcome, HarnessError> {
    let points: Vec<DarcySweepPoint> = p
        .n
        .iter()
        .map(|&n| darcy_point(p, seed, n))
        .collect::<Result<_, _>>()?;
    let mut out = Outcome::default();
    let mut errors = Table::new("darcy_emulate", &["N", "probe", "h1_error"]);
    let mut sizes = Table::new(
        "darcy_emulate_size",
        &["N", "depth", "width", "lift", "size", "depth_per_log_n", "width_per_n_d", "max_h1_error"],
    );
    let mut c = CriterionResult::new(7, "Darcy emulator");
    let mut worst = 0.0f64;
    let mut depth_ratio = Vec::new();
    let mut width_ratio = Vec::new();
    for pt in &points {
        for (i, e) in pt.errors.iter().enumerate() {
            errors.push(vec![pt.n.to_string(), i.to_string(), num(*e)]);
        }
        let max_err = pt.errors.iter().cloned().fold(0.0, f64::max);
        worst = worst.max(max_err);
        let nf = pt.n as f64;
        let dr = pt.size.depth as f64 / nf.ln();
        let wr = pt.size.width as f64 / nf.powi(p.d as i32);
        depth_ratio.push(dr);
        width_ratio.push(wr);
        sizes.push(vec![
            pt.n.to_string(),
            pt.size.depth.to_string(),
            pt.size.width.to_string(),
            pt.size.lift.to_string(),
            pt.size.size.to_string(),
            num(dr),
            num(wr),
            num(max_err),
        ]);
        c.at_most(&format!("a_tilde_sup.N{}", pt.n), pt.a_tilde_sup, 1.0 - p.lambda / 2.0);
        out.timings.insert(format!("build.N{}", pt.n), pt.build_seconds);
        out.timings.insert(format!("probes.N{}", pt.n), pt.probe_seconds);
    }
    c.at_most("h1_error", worst, p.eps)
        .at_most("depth_per_log_n_spread", spread(&depth_ratio), p.spread_limit)
        .at_most("width_per_n_d_spread", spread(&width_ratio), p.spread_limit);
    out.criteria.push(c);
    out.tables.push(errors);
    out.tables.push(sizes);
    Ok(out)
}

/// Navier-Stokes emulator against the first-order solver on Taylor-Green and random initial data.
pub fn ns_emulate(p: &NsEmulateParams, seed: u64) -> Result<Outcome, HarnessError> {
    let cfg = NsConfig {
        d: 2,
        n: p.n,
        nu: p.nu,
        t_final: p.t_final,
        tau: p.tau,
        u_bound: p.u_bound,
        inner_iterations: None,
    };
    cfg.validate().context(|| "Navier-Stokes configuration".into())?;
    let (net, build_seconds) = timed(|| build_ns_emulator(&cfg, p.eps_total, None, p.activation));
    let net = net.context(|| "Navier-Stokes emulator".into())?;

    let mut probes = vec![(
        "taylor-green".to_string(),
        taylor_green_scaled(p.taylor_green_amplitude, p.nu, 0.0, p.n).context(|| "Taylor-Green".into())?,
    )];
    for i in 0..p.random_fields {
        let mut rng = stream(seed, 40_000 + i as u64);
        let u0 = random_divergence_free(2, p.n, p.random_modes.min(p.n), 1.0, p.random_norm, &mut rng)
            .context(|| "random initial field".into())?;
        probes.push((format!("random-{i}"), u0));
    }
    let (errors, probe_seconds) = timed(|| {
        probes
            .par_iter()
            .map(|(name, u0)| -> Result<f64, HarnessError> {
                let reference = run_first_order(&cfg, u0).context(|| format!("solver on {name}"))?;
                let out = resample(&net.forward(u0).context(|| "emulator forward".into())?, p.n)
                    .context(|| "resample".into())?;
                Ok(l2_norm(&out.sub(reference.final_state()).context(|| "difference".into())?))
            })
            .collect::<Result<Vec<_>, _>>()
    });
    let errors = errors?;

    let mut table = Table::new("ns_emulate", &["probe", "initial_l2", "l2_error"]);
    for ((name, u0), e) in probes.iter().zip(&errors) {
        table.push(vec![name.clone(), num(l2_norm(u0)), num(*e)]);
    }
    let size = size_report(&net);
    let mut c = CriterionResult::new(8, "NS emulator");
    c.at_most("l2_error", errors.iter().cloned().fold(0.0, f64::max), p.eps_total)
        .record("steps", cfg.steps() as f64)
        .record("depth", size.depth as f64)
        .record("width", size.width as f64);
    let mut out = Outcome::default();
    out.criteria.push(c);
    out.tables.push(table);
    out.timings.insert("build".into(), build_seconds);
    out.timings.insert("probes".into(), probe_seconds);
    Ok(out)
}

struct FtCase {
    pipeline_error: Vec<f64>,
    forward_error: Vec<f64>,
    depth: usize,
}

fn ft_case(p: &FtEmulateParams, seed: u64, case: usize) -> Result<FtCase, HarnessError> {
    let (d, n) = (p.cases[case].d, p.cases[case].n);
    let bound = InputBound::L2(p.bound);
    let ft = build_ft_emulator(d, n, bound, p.eps / 4.0, p.activation).context(|| format!("FT emulator d={d} N={n}"))?;
    let ift =
        build_ift_emulator(d, n, bound, p.eps / 4.0, p.activation).context(|| format!("IFT emulator d={d} N={n}"))?;
    let eye = PsiFno::identity(ft.grid(), ft.d_u(), p.activation);
    let pipe = fourier_conjugate_pipeline(&ft, &eye, &ift).context(|| "pipeline".into())?;
    let g = ft.grid();
    let mut out = FtCase {
        pipeline_error: Vec::new(),
        forward_error: Vec::new(),
        depth: pipe.depth(),
    };
    for i in 0..p.probes {
        let mut rng = stream(seed, 50_000 + (case * 1000 + i) as u64);
        let v = band_limited(g, 1, 1.0, false, &mut rng);
        // norms spread over (0, B]
        let target = p.bound * (i + 1) as f64 / p.probes as f64;
        let v = v.scaled(target / l2_norm(&v));
        let back = pipe.forward(&v).context(|| "pipeline forward".into())?;
        let (a, b) = (dft(&back), dft(&v));
        out.pipeline_error
            .push(a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
        let coefs = ft.forward(&v).context(|| "FT forward".into())?;
        let exact = coefficient_field(&v);
        let mut worst = 0.0f64;
        for (c, want) in exact.iter().enumerate() {
            for got in coefs.channel(c) {
                worst = worst.max((got - want).abs());
            }
        }
        out.forward_error.push(worst);
    }
    Ok(out)
}

/// Fourier-coefficient emulators: `ift ∘ ft` against the identity on band-limited fields, measured
/// as the largest coefficient error.
pub fn ft_emulate(p: &FtEmulateParams, seed: u64) -> Result<Outcome, HarnessError> {
    let (cases, seconds) = timed(|| {
        (0..p.cases.len())
            .into_par_iter()
            .map(|i| ft_case(p, seed, i))
            .collect::<Result<Vec<_>, _>>()
    });
    let cases = cases?;
    let mut table = Table::new("ft_emulate", &["d", "N", "probe", "l2_norm", "ft_sup_error", "roundtrip_sup_error"]);
    let mut c = CriterionResult::new(9, "FT/IFT emulators");
    let mut worst = 0.0f64;
    let mut worst_ft = 0.0f64;
    for (gc, r) in p.cases.iter().zip(&cases) {
        for i in 0..r.pipeline_error.len() {
            let norm = p.bound * (i + 1) as f64 / p.probes as f64;
            table.push(vec![
                gc.d.to_string(),
                gc.n.to_string(),
                i.to_string(),
                num(norm),
                num(r.forward_error[i]),
                num(r.pipeline_error[i]),
            ]);
            worst = worst.max(r.pipeline_error[i]);
            worst_ft = worst_ft.max(r.forward_error[i]);
        }
        c.record(&format!("depth.d{}N{}", gc.d, gc.n), r.depth as f64);
    }
    c.at_most("roundtrip_sup_error", worst, p.eps).record("ft_sup_error", worst_ft);
    let mut out = Outcome::default();
    out.criteria.push(c);
    out.tables.push(table);
    out.timings.insert("cases".into(), seconds);
    Ok(out)
}

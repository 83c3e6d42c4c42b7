use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use psifno::spectral::{
    dealiased_product, dft, divergence, idft, l2_norm, leray_project, quadrature_l2, sobolev_norm, Grid, GridField,
    SobolevIndex,
};

use crate::config::SpectralCheckParams;
use crate::random::{stream, unit_field};
use crate::report::{num, CriterionResult, Outcome, Table};
use crate::{Context, HarnessError};

#[derive(Clone, Copy, Debug, Default)]
struct Defects {
    roundtrip: f64,
    parseval: f64,
    h0: f64,
    product: f64,
    idempotence: f64,
    divergence: f64,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `P_N(uv)` by direct convolution of the coefficient lists.
fn brute_force_product(g: Grid, u: &GridField, v: &GridField) -> Vec<Complex64> {
    let (d, n) = (g.d(), g.n() as i64);
    let p = 2 * n + 1;
    let (uc, vc) = (dft(u).to_lex(), dft(v).to_lex());
    let modes: Vec<Vec<i64>> = (0..uc.len())
        .map(|flat| {
            let mut k = vec![0i64; d];
            let mut f = flat as i64;
            for a in (0..d).rev() {
                k[a] = f % p - n;
                f /= p;
            }
            k
        })
        .collect();
    let lex = |k: &[i64]| -> Option<usize> {
        let mut idx = 0i64;
        for &x in k {
            if x.abs() > n {
                return None;
            }
            idx = idx * p + x + n;
        }
        Some(idx as usize)
    };
    let mut diff = vec![0i64; d];
    modes
        .iter()
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, q) in modes.iter().enumerate() {
                for a in 0..d {
                    diff[a] = k[a] - q[a];
                }
                if let Some(j) = lex(&diff) {
                    acc += uc[i] * vc[j];
                }
            }
            acc
        })
        .collect()
}

fn check(d: usize, n: usize, seed: u64, probe: usize) -> Result<Defects, HarnessError> {
    let g = Grid::new(d, n).context(|| format!("grid d={d} N={n}"))?;
    let id = ((d * 1000 + n) * 100 + probe) as u64;
    let mut rng = stream(seed, id);
    let u = unit_field(g, 1, &mut rng);
    let v = unit_field(g, 1, &mut rng);
    let w = unit_field(g, d, &mut rng);

    let back = idft(&dft(&u)).context(|| "inverse transform".into())?;
    let roundtrip = max_diff(back.values(), u.values());

    // (2π)^d Σ|û|² against the grid quadrature; H⁰ against L²
    let c = dft(&u);
    let spectral = ((2.0 * PI).powi(d as i32) * c.data().iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    let quad = quadrature_l2(&u);
    let parseval = (spectral - quad).abs().max((l2_norm(&u) - quad).abs()) / quad;
    let h0 = sobolev_norm(&u, SobolevIndex::new(0.0, false).context(|| "H0 index".into())?);
    let h0 = (h0 - quad).abs() / quad;

    let fast = dft(&dealiased_product(&u, &v).context(|| "de-aliased product".into())?).to_lex();
    let slow = brute_force_product(g, &u, &v);
    let product = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    let p1 = leray_project(&w).context(|| "Leray projection".into())?;
    let p2 = leray_project(&p1).context(|| "Leray projection".into())?;
    let idempotence = max_diff(p1.values(), p2.values());
    let divergence = divergence(&p1).context(|| "divergence".into())?.max_abs();

    Ok(Defects {
        roundtrip,
        parseval,
        h0,
        product,
        idempotence,
        divergence,
    })
}

/// Transform round trip, Parseval, `H⁰ = L²`, de-aliased product against direct convolution,
/// and Leray projection, on random band-limited fields for every `d` and `N ≤ max_n`.
pub fn spectral_check(p: &SpectralCheckParams, seed: u64) -> Result<Outcome, HarnessError> {
    let cases: Vec<(usize, usize, usize)> = p
        .dims
        .iter()
        .flat_map(|&d| (1..=p.max_n).flat_map(move |n| (0..p.probes).map(move |k| (d, n, k))))
        .collect();
    let results: Vec<Defects> = cases
        .par_iter()
        .map(|&(d, n, k)| check(d, n, seed, k))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(
        "spectral_check",
        &["d", "N", "probe", "roundtrip", "parseval", "h0_vs_l2", "product", "leray_idempotence", "divergence"],
    );
    let mut worst = Defects::default();
    for ((d, n, k), r) in cases.iter().zip(&results) {
        table.push(vec![
            d.to_string(),
            n.to_string(),
            k.to_string(),
            num(r.roundtrip),
            num(r.parseval),
            num(r.h0),
            num(r.product),
            num(r.idempotence),
            num(r.divergence),
        ]);
        worst.roundtrip = worst.roundtrip.max(r.roundtrip);
        worst.parseval = worst.parseval.max(r.parseval);
        worst.h0 = worst.h0.max(r.h0);
        worst.product = worst.product.max(r.product);
        worst.idempotence = worst.idempotence.max(r.idempotence);
        worst.divergence = worst.divergence.max(r.divergence);
    }
    let mut c = CriterionResult::new(1, "spectral foundations");
    c.at_most("roundtrip", worst.roundtrip, p.roundtrip_tol)
        .at_most("parseval", worst.parseval, p.parseval_tol)
        .at_most("h0_vs_l2", worst.h0, p.parseval_tol)
        .at_most("product", worst.product, p.product_tol)
        .at_most("leray_idempotence", worst.idempotence, p.leray_tol)
        .at_most("divergence", worst.divergence, p.leray_tol)
        .record("cases", cases.len() as f64);
    Ok(Outcome {
        criteria: vec![c],
        tables: vec![table],
        ..Default::default()
    })
}

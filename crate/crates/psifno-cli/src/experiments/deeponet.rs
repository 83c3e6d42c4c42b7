use rayon::prelude::*;
use std::path::Path;

use psifno::emulation::{read_deeponet, to_deeponet, write_deeponet};
use psifno::fno::size_report;
use psifno::spectral::Grid;

use crate::config::DeepOnetParams;
use crate::random::{points, random_network, stream, unit_field};
use crate::report::{num, CriterionResult, Outcome, Table};
use crate::{Context, HarnessError};

const POINTS_PER_PROBE: usize = 4;

struct CaseResult {
    worst: f64,
    branch_worst: f64,
    file_worst: f64,
    gram: f64,
    depth_ok: bool,
    width_ok: bool,
    p: usize,
    width: usize,
    depth: usize,
}

fn run_case(p: &DeepOnetParams, seed: u64, case: usize, out: &Path) -> Result<(CaseResult, Option<std::path::PathBuf>), HarnessError> {
    let gc = p.cases[case];
    let g = Grid::new(gc.d, gc.n).context(|| "grid".into())?;
    let mut rng = stream(seed, 60_000 + case as u64);
    let net = random_network(g, p.lift, p.depth, &mut rng);
    let inputs: Vec<_> = (0..p.probes).map(|_| unit_field(g, 1, &mut rng)).collect();
    let pts: Vec<Vec<f64>> = (0..p.probes).map(|_| points(gc.d, POINTS_PER_PROBE, &mut rng)).collect();

    let reference: Vec<Vec<f64>> = inputs
        .par_iter()
        .zip(&pts)
        .map(|(a, y)| net.evaluate_at(a, y).context(|| "network evaluation".into()))
        .collect::<Result<_, _>>()?;
    let bound = 2.0 * reference.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let ex = to_deeponet(&net, bound);
    let dense = ex.dense_layers().context(|| "explicit branch".into())?;
    let size = size_report(&net);

    let mut worst = 0.0f64;
    let mut branch_worst = 0.0f64;
    for ((a, y), want) in inputs.iter().zip(&pts).zip(&reference) {
        let got = ex.evaluate(a, y).context(|| "DeepONet evaluation".into())?;
        let scale = want.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(got.iter().zip(want).map(|(x, w)| (x - w).abs()).fold(0.0, f64::max) / scale);
        let beta = ex.branch(a).context(|| "branch".into())?;
        let explicit = dense.eval(a.values());
        let bscale = beta.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        branch_worst =
            branch_worst.max(beta.iter().zip(&explicit).map(|(x, w)| (x - w).abs()).fold(0.0, f64::max) / bscale);
    }

    let mut dir = None;
    let mut file_worst = 0.0f64;
    if p.write_export {
        let path = out.join("deeponet").join(format!("d{}_n{}", gc.d, gc.n));
        write_deeponet(&path, &ex).context(|| format!("writing export to {}", path.display()))?;
        let back = read_deeponet(&path).context(|| "reading export".into())?;
        for (a, y) in inputs.iter().zip(&pts).take(10) {
            let x = ex.evaluate(a, y).context(|| "evaluation".into())?;
            let z = back.evaluate(a, y).context(|| "evaluation".into())?;
            file_worst = file_worst.max(x.iter().zip(&z).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
        }
        dir = Some(path);
    }
    Ok((
        CaseResult {
            worst,
            branch_worst,
            file_worst,
            gram: ex.gram_defect(),
            depth_ok: dense.depth() == size.depth && ex.depth() == size.depth,
            width_ok: dense.width() == size.width && ex.width() == size.width,
            p: ex.p(),
            width: ex.width(),
            depth: ex.depth(),
        },
        dir,
    ))
}

/// Converts random Ψ-FNOs to DeepONets and checks them off the grid, against the explicit
/// branch matrices, and through the export files.
pub fn deeponet_export(p: &DeepOnetParams, seed: u64, out: &Path) -> Result<Outcome, HarnessError> {
    let results: Vec<_> = (0..p.cases.len())
        .into_par_iter()
        .map(|i| run_case(p, seed, i, out))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(
        "deeponet_export",
        &["d", "N", "p", "width", "depth", "offgrid_rel_error", "branch_rel_error", "gram_defect"],
    );
    let mut c = CriterionResult::new(10, "DeepONet export");
    let mut outcome = Outcome::default();
    let (mut worst, mut bworst, mut gram, mut fworst) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (gc, (r, dir)) in p.cases.iter().zip(results) {
        table.push(vec![
            gc.d.to_string(),
            gc.n.to_string(),
            r.p.to_string(),
            r.width.to_string(),
            r.depth.to_string(),
            num(r.worst),
            num(r.branch_worst),
            num(r.gram),
        ]);
        worst = worst.max(r.worst);
        bworst = bworst.max(r.branch_worst);
        gram = gram.max(r.gram);
        fworst = fworst.max(r.file_worst);
        c.require(r.depth_ok, format!("depth mismatch for d={} N={}", gc.d, gc.n));
        c.require(r.width_ok, format!("width mismatch for d={} N={}", gc.d, gc.n));
        if let Some(dir) = dir {
            outcome.files.push(dir);
        }
    }
    c.at_most("offgrid_rel_error", worst, p.tolerance)
        .at_most("branch_rel_error", bworst, p.tolerance)
        .at_most("gram_defect", gram, p.gram_tolerance)
        .at_most("file_round_trip", fworst, 0.0)
        .record("probes", p.probes as f64);
    outcome.criteria.push(c);
    outcome.tables.push(table);
    Ok(outcome)
}

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::DarcyError;
use crate::spectral::{
    dealiased_product, dft, divergence, gradient, idft_unchecked, inverse_laplacian, resample,
    sobolev_norm, GridField, SobolevIndex,
};

/// Coefficient `a`, source `f` (both one channel, sampled at radius ≥ 2N), coercivity `λ`,
/// target rate `k` and solve radius `N`.
#[derive(Clone, Debug)]
pub struct DarcyProblem {
    a: GridField,
    f: GridField,
    lambda: f64,
    k: u32,
    n: usize,
}

impl DarcyProblem {
    pub fn new(a: GridField, f: GridField, lambda: f64, k: u32, n: usize) -> Result<Self, DarcyError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(DarcyError::BadParameters(format!("lambda must lie in (0,1), got {lambda}")));
        }
        if k < 1 || n < 1 {
            return Err(DarcyError::BadParameters(format!("need k >= 1 and N >= 1 (k={k}, N={n})")));
        }
        if a.channels() != 1 || f.channels() != 1 {
            return Err(DarcyError::BadParameters("a and f must be scalar fields".into()));
        }
        if a.grid().d() != f.grid().d() {
            return Err(DarcyError::BadParameters("a and f live in different dimensions".into()));
        }
        for g in [a.grid(), f.grid()] {
            if g.n() < 2 * n {
                return Err(DarcyError::InsufficientResolution { have: g.n(), need: 2 * n });
            }
        }
        let mean = f.means()[0];
        if mean.abs() > 1e-10 * f.max_abs().max(f64::MIN_POSITIVE) {
            return Err(DarcyError::BadParameters(format!("source has nonzero mean {mean:.3e}")));
        }
        Ok(DarcyProblem { a, f, lambda, k, n })
    }

    pub fn a(&self) -> &GridField {
        &self.a
    }

    pub fn f(&self) -> &GridField {
        &self.f
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// `ã_N = Ṗ_N I_{2N}(a-1)`, `f_N = Ṗ_N I_{2N} f`, with grid diagnostics on the 2N grid.
#[derive(Clone, Debug)]
pub struct PreparedCoefficients {
    pub a_tilde: GridField,
    pub f: GridField,
    /// `min_j a(x_j)` over the 2N grid.
    pub a_min: f64,
    /// `max_j |ã_N(x_j)|` over the 2N grid; bounds the Lipschitz constant of the Picard map.
    pub a_tilde_sup: f64,
}

pub(crate) fn zero_mean_truncation(f: &GridField, n: usize) -> Result<GridField, DarcyError> {
    let mut c = dft(f).restrict(n)?;
    let g = c.grid();
    let zero = vec![0i64; g.d()];
    c.set(0, &zero, num_complex::Complex64::new(0.0, 0.0))?;
    Ok(idft_unchecked(&c))
}

pub fn prepare_coefficients(a: &GridField, f: &GridField, n: usize) -> Result<PreparedCoefficients, DarcyError> {
    for g in [a.grid(), f.grid()] {
        if g.n() < 2 * n {
            return Err(DarcyError::InsufficientResolution { have: g.n(), need: 2 * n });
        }
    }
    let a2 = resample(a, 2 * n)?;
    let a_min = a2.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted = GridField::new(a2.grid(), 1, a2.values().iter().map(|x| x - 1.0).collect())?;
    let a_tilde = zero_mean_truncation(&shifted, n)?;
    let f_n = zero_mean_truncation(&resample(f, 2 * n)?, n)?;
    let a_tilde_sup = resample(&a_tilde, 2 * n)?.max_abs();
    Ok(PreparedCoefficients {
        a_tilde,
        f: f_n,
        a_min,
        a_tilde_sup,
    })
}

/// `Ṗ_N(-Δ)^{-1}∇·(ã_N∇u)`, the product formed on the 2N grid.
fn linear_part(u: &GridField, a_tilde: &GridField) -> Result<GridField, DarcyError> {
    let flux = dealiased_product(a_tilde, &gradient(u))?;
    Ok(inverse_laplacian(&divergence(&flux)?))
}

/// One Picard step `F_N(u) = Ṗ_N(-Δ)^{-1}∇·(ã_N∇u) + (-Δ)^{-1}f_N`.
pub fn picard_step(u: &GridField, a_tilde: &GridField, f_n: &GridField) -> Result<GridField, DarcyError> {
    Ok(linear_part(u, a_tilde)?.add(&inverse_laplacian(f_n))?)
}

/// `K = ⌈log(λ^{-1}N^{-k}) / log(1-λ/2)⌉`, at least 1.
pub fn iteration_count(lambda: f64, n: usize, k: u32) -> Result<usize, DarcyError> {
    if !(lambda > 0.0 && lambda < 1.0) || n < 1 || k < 1 {
        return Err(DarcyError::BadParameters(format!(
            "need lambda in (0,1), N >= 1, k >= 1 (lambda={lambda}, N={n}, k={k})"
        )));
    }
    let num = -(lambda.ln() + k as f64 * (n as f64).ln());
    let k_raw = (num / (1.0 - lambda / 2.0).ln()).ceil();
    Ok(if k_raw < 1.0 { 1 } else { k_raw as usize })
}

#[derive(Clone, Debug)]
pub struct DarcySolution {
    pub u: GridField,
    pub iterations: usize,
    /// `‖u^k - u^{k-1}‖_{Ḣ¹}` for `k = 1..=K`.
    pub residuals: Vec<f64>,
    pub prepared: PreparedCoefficients,
}

pub fn solve(p: &DarcyProblem) -> Result<DarcySolution, DarcyError> {
    let prepared = prepare_coefficients(&p.a, &p.f, p.n)?;
    let half = p.lambda / 2.0;
    if prepared.a_min < half {
        return Err(DarcyError::CoercivityViolation {
            what: "min a on the 2N grid",
            value: prepared.a_min,
            limit: half,
        });
    }
    if prepared.a_tilde_sup >= 1.0 - half {
        return Err(DarcyError::CoercivityViolation {
            what: "max |a~_N| on the 2N grid",
            value: prepared.a_tilde_sup,
            limit: 1.0 - half,
        });
    }
    let iterations = iteration_count(p.lambda, p.n, p.k)?;
    let source = inverse_laplacian(&prepared.f);
    let mut u = GridField::zeros(prepared.f.grid(), 1);
    let mut residuals = Vec::with_capacity(iterations);
    for it in 1..=iterations {
        let next = linear_part(&u, &prepared.a_tilde)?.add(&source)?;
        if next.values().iter().any(|x| !x.is_finite()) {
            return Err(DarcyError::NonFiniteIterate(it));
        }
        residuals.push(sobolev_norm(&next.sub(&u)?, SobolevIndex::DOT_H1));
        u = next;
    }
    Ok(DarcySolution {
        u,
        iterations,
        residuals,
        prepared,
    })
}

/// Sufficient Sobolev test `C‖ã‖_{H^s} ≤ 1-λ` with a computed embedding constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityAdvisory {
    /// Upper bound for the norm of `H^s ↪ L^∞`.
    pub embedding_constant: f64,
    pub hs_norm: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// `|g(x)| ≤ Σ|ĝ_k| ≤ (Σ_k 2/((2π)^d(1+|k|^{2s})))^{1/2}‖g‖_{H^s}`. The lattice sum is taken
/// exactly for `|k|_∞ ≤ R` and the tail is bounded by `2d·3^{d-1}R^{d-2s}/(2s-d)`.
pub fn coercivity_advisory(a_tilde: &GridField, s: f64, lambda: f64) -> Result<CoercivityAdvisory, DarcyError> {
    let d = a_tilde.grid().d();
    if s <= d as f64 / 2.0 {
        return Err(DarcyError::BadParameters(format!("need s > d/2 for the embedding (s={s}, d={d})")));
    }
    const R: i64 = 64;
    let p = (2 * R + 1) as usize;
    let mut sum = 0.0;
    let mut k = vec![0i64; d];
    for flat in 0..p.pow(d as u32) {
        let mut f = flat;
        for a in (0..d).rev() {
            k[a] = (f % p) as i64 - R;
            f /= p;
        }
        let k2: f64 = k.iter().map(|x| (x * x) as f64).sum();
        sum += 1.0 / (1.0 + k2.powf(s));
    }
    let df = d as f64;
    sum += 2.0 * df * 3f64.powi(d as i32 - 1) * (R as f64).powf(df - 2.0 * s) / (2.0 * s - df);
    let embedding_constant = (2.0 * sum / (2.0 * PI).powi(d as i32)).sqrt();
    let hs_norm = sobolev_norm(a_tilde, crate::spectral::SobolevIndex::new(s, false)?);
    let bound = embedding_constant * hs_norm;
    Ok(CoercivityAdvisory {
        embedding_constant,
        hs_norm,
        bound,
        satisfied: bound <= 1.0 - lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darcy::trig_coefficient;
    use crate::spectral::{sobolev_norm, Grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iteration_count_examples() {
        assert_eq!(iteration_count(0.5, 16, 1).unwrap(), 8);
        assert_eq!(iteration_count(0.9, 1, 1).unwrap(), 1);
        assert!(iteration_count(0.5, 2, 0).is_err());
        assert!(iteration_count(1.0, 2, 1).is_err());
        let mut last = 0;
        for n in 1..200 {
            let k = iteration_count(0.3, n, 2).unwrap();
            assert!(k >= last);
            last = k;
        }
    }

    #[test]
    fn prepare_is_exact_on_trig_polynomials() {
        let g = Grid::new(2, 8).unwrap();
        let a = trig_coefficient(2, 0.3).sample(g).unwrap();
        let f = GridField::zeros(g, 1);
        let p = prepare_coefficients(&a, &f, 4).unwrap();
        let want = GridField::from_fn(p.a_tilde.grid(), 1, |x, _| 0.3 * (x[0] + x[1]).sin());
        assert!(p.a_tilde.sub(&want).unwrap().max_abs() < 1e-14);
        let ones = GridField::constant(g, &[1.0]);
        assert!(prepare_coefficients(&ones, &f, 4).unwrap().a_tilde.max_abs() < 1e-15);
        assert!(matches!(
            prepare_coefficients(&a, &f, 5),
            Err(DarcyError::InsufficientResolution { .. })
        ));
    }

    #[test]
    fn rough_coefficient_projection_converges() {
        // |sin x| has coefficients decaying like k^-2
        let fine = Grid::new(1, 512).unwrap();
        let a = GridField::from_fn(fine, 1, |x, _| 1.0 + 0.4 * (x[0].sin().abs() - 2.0 / PI));
        let a_minus_one = a.sub(&GridField::constant(fine, &[1.0])).unwrap();
        let zero = GridField::zeros(fine, 1);
        let mut last = f64::INFINITY;
        for n in [4, 8, 16, 32] {
            let p = prepare_coefficients(&a, &zero, n).unwrap();
            let err = resample(&p.a_tilde, 512).unwrap().sub(&a_minus_one).unwrap().max_abs();
            assert!(err < last, "n={n}: {err}");
            last = err;
        }
    }

    #[test]
    fn picard_examples() {
        let g = Grid::new(2, 4).unwrap();
        let cos = GridField::from_fn(g, 1, |x, _| x[0].cos());
        let zero = GridField::zeros(g, 1);
        let out = picard_step(&cos, &zero, &cos).unwrap();
        assert!(out.sub(&cos).unwrap().max_abs() < 1e-14);
        let f = GridField::from_fn(g, 1, |x, _| (2.0 * x[1]).sin());
        let out = picard_step(&zero, &cos, &f).unwrap();
        assert!(out.sub(&f.scaled(0.25)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn picard_map_contracts_with_sup_of_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Grid::new(2, 6).unwrap();
        let a_tilde = GridField::from_fn(g, 1, |x, _| 0.5 * (x[0] + x[1]).sin());
        let sup = resample(&a_tilde, 12).unwrap().max_abs();
        let f = GridField::zeros(g, 1);
        for _ in 0..20 {
            let mut rand_field = || {
                let vals = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                GridField::new(g, 1, vals).unwrap()
            };
            let (u, v) = (rand_field(), rand_field());
            let num = sobolev_norm(
                &picard_step(&u, &a_tilde, &f).unwrap().sub(&picard_step(&v, &a_tilde, &f).unwrap()).unwrap(),
                SobolevIndex::DOT_H1,
            );
            let den = sobolev_norm(&u.sub(&v).unwrap(), SobolevIndex::DOT_H1);
            assert!(num / den <= sup + 1e-8, "{} > {sup}", num / den);
        }
    }

    #[test]
    fn constant_coefficient_solves_in_one_step() {
        let g = Grid::new(2, 8).unwrap();
        let a = GridField::constant(g, &[1.0]);
        let f = GridField::from_fn(g, 1, |x, _| x[0].cos());
        let sol = solve(&DarcyProblem::new(a, f, 0.5, 1, 4).unwrap()).unwrap();
        let want = GridField::from_fn(sol.u.grid(), 1, |x, _| x[0].cos());
        assert!(sol.u.sub(&want).unwrap().max_abs() < 1e-12);
        assert!(sol.residuals[1..].iter().all(|&r| r < 1e-13));
    }

    #[test]
    fn coercivity_violation_reported() {
        let g = Grid::new(1, 8).unwrap();
        let a = GridField::from_fn(g, 1, |x, _| 1.0 + 0.9 * x[0].cos());
        let f = GridField::from_fn(g, 1, |x, _| x[0].sin());
        let err = solve(&DarcyProblem::new(a, f, 0.5, 1, 4).unwrap()).unwrap_err();
        assert!(matches!(err, DarcyError::CoercivityViolation { .. }));
    }

    #[test]
    fn problem_validation() {
        let g = Grid::new(1, 8).unwrap();
        let a = GridField::constant(g, &[1.0]);
        let f = GridField::constant(g, &[1.0]);
        assert!(matches!(DarcyProblem::new(a.clone(), f, 0.5, 1, 4), Err(DarcyError::BadParameters(_))));
        let f0 = GridField::zeros(g, 1);
        assert!(matches!(
            DarcyProblem::new(a.clone(), f0.clone(), 0.5, 1, 5),
            Err(DarcyError::InsufficientResolution { .. })
        ));
        assert!(DarcyProblem::new(a, f0, 1.5, 1, 4).is_err());
    }

    #[test]
    fn advisory_is_conservative() {
        let g = Grid::new(2, 8).unwrap();
        let a_tilde = GridField::from_fn(g, 1, |x, _| 0.2 * (x[0] - x[1]).cos());
        let adv = coercivity_advisory(&a_tilde, 1.5, 0.5).unwrap();
        assert!(adv.bound >= a_tilde.max_abs());
        assert!(coercivity_advisory(&a_tilde, 1.0, 0.5).is_err());
    }
}

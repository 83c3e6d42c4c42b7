use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::spectral::{idft_unchecked, Grid, GridField, SpectralCoeffs, SpectralError};

/// `c·cos⟨k,x⟩ + s·sin⟨k,x⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: Vec<i64>,
    pub cos: f64,
    pub sin: f64,
}

/// Real trigonometric polynomial `constant + Σ terms`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    pub d: usize,
    pub constant: f64,
    pub terms: Vec<TrigTerm>,
}

impl TrigSeries {
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|x| x.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    /// `|constant| + Σ |(c, s)|`, an upper bound for the sup norm.
    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.terms.iter().map(|t| t.cos.hypot(t.sin)).sum::<f64>()
    }

    /// Exact coefficients on a grid of radius `max(degree, 1)`.
    pub fn coeffs(&self) -> Result<SpectralCoeffs, SpectralError> {
        let g = Grid::new(self.d, self.degree().max(1))?;
        let mut c = SpectralCoeffs::zeros(g, 1);
        let zero = vec![0i64; self.d];
        let add = |c: &mut SpectralCoeffs, k: &[i64], z: Complex64| {
            let old = c.get(0, k);
            c.set(0, k, old + z).expect("mode within degree");
        };
        add(&mut c, &zero, Complex64::new(self.constant, 0.0));
        for t in &self.terms {
            if t.k.len() != self.d {
                return Err(SpectralError::BadParameter(format!(
                    "wavevector {:?} is not {}-dimensional",
                    t.k, self.d
                )));
            }
            if t.k.iter().all(|&x| x == 0) {
                add(&mut c, &zero, Complex64::new(t.cos, 0.0));
                continue;
            }
            let neg: Vec<i64> = t.k.iter().map(|x| -x).collect();
            add(&mut c, &t.k, Complex64::new(0.5 * t.cos, -0.5 * t.sin));
            add(&mut c, &neg, Complex64::new(0.5 * t.cos, 0.5 * t.sin));
        }
        Ok(c)
    }

    /// Point values on `grid`.
    pub fn sample(&self, grid: Grid) -> Result<GridField, SpectralError> {
        if grid.d() != self.d {
            return Err(SpectralError::BadParameter(format!(
                "series is {}-dimensional, grid is {}-dimensional",
                self.d,
                grid.d()
            )));
        }
        Ok(idft_unchecked(&self.coeffs()?.regrid(grid.n())?))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| {
                    let kx: f64 = t.k.iter().zip(x).map(|(k, y)| *k as f64 * y).sum();
                    t.cos * kx.cos() + t.sin * kx.sin()
                })
                .sum::<f64>()
    }
}

/// `1 + amplitude·sin(x_1 + … + x_d)`.
pub fn trig_coefficient(d: usize, amplitude: f64) -> TrigSeries {
    TrigSeries {
        d,
        constant: 1.0,
        terms: vec![TrigTerm {
            k: vec![1; d],
            cos: 0.0,
            sin: amplitude,
        }],
    }
}

/// `1 + Σ_{0<|k|_∞≤modes} C e^{-ℓ|k|}(Y_k cos⟨k,x⟩ + Y'_k sin⟨k,x⟩)` with `Y, Y'` uniform on
/// `[-1, 1]`; `C` is chosen so that `‖a - 1‖_∞ ≤ 1 - λ` for every draw.
pub fn random_decay_coefficient<R: Rng + ?Sized>(
    d: usize,
    ell: f64,
    modes: usize,
    lambda: f64,
    rng: &mut R,
) -> TrigSeries {
    let mut ks = Vec::new();
    let p = 2 * modes + 1;
    let mut k = vec![0i64; d];
    for flat in 0..p.pow(d as u32) {
        let mut f = flat;
        for a in (0..d).rev() {
            k[a] = (f % p) as i64 - modes as i64;
            f /= p;
        }
        // one representative per ±k pair
        if let Some(first) = k.iter().find(|&&x| x != 0) {
            if *first > 0 {
                ks.push(k.clone());
            }
        }
    }
    let decay = |k: &[i64]| (-ell * (k.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt()).exp();
    let worst: f64 = ks.iter().map(|k| std::f64::consts::SQRT_2 * decay(k)).sum();
    let c = if worst > 0.0 { (1.0 - lambda) / worst } else { 0.0 };
    let terms = ks
        .into_iter()
        .map(|k| {
            let b = c * decay(&k);
            TrigTerm {
                cos: b * rng.gen_range(-1.0..=1.0),
                sin: b * rng.gen_range(-1.0..=1.0),
                k,
            }
        })
        .collect();
    TrigSeries {
        d,
        constant: 1.0,
        terms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sample_matches_pointwise_evaluation() {
        let s = TrigSeries {
            d: 2,
            constant: 0.5,
            terms: vec![
                TrigTerm { k: vec![1, -2], cos: 0.3, sin: -0.7 },
                TrigTerm { k: vec![0, 3], cos: 0.0, sin: 1.1 },
            ],
        };
        for n in [1, 3, 6] {
            let g = Grid::new(2, n).unwrap();
            let f = s.sample(g).unwrap();
            for j in 0..g.len() {
                assert!((f.values()[j] - s.eval(&g.point(j))).abs() < 1e-13, "n={n}");
            }
        }
    }

    #[test]
    fn random_coefficient_is_coercive_for_every_draw() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let a = random_decay_coefficient(2, 0.5, 6, 0.5, &mut rng);
            assert!(a.sup_bound() - 1.0 <= 0.5 + 1e-12);
            let g = Grid::new(2, 12).unwrap();
            let min = a.sample(g).unwrap().values().iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let a = random_decay_coefficient(1, 1.0, 4, 0.3, &mut ChaCha8Rng::seed_from_u64(1));
        let b = random_decay_coefficient(1, 1.0, 4, 0.3, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        assert_eq!(a.terms.len(), 4);
    }
}

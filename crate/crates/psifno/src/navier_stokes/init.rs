use num_complex::Complex64;
use rand::Rng;

use super::NsError;
use crate::spectral::{idft_unchecked, l2_norm, leray_project, symmetrize, Grid, GridField, SpectralCoeffs};

/// `(cos x₁ sin x₂, -sin x₁ cos x₂) e^{-2νt}`, an exact solution in two dimensions.
pub fn taylor_green(nu: f64, t: f64, n: usize) -> Result<GridField, NsError> {
    taylor_green_scaled(1.0, nu, t, n)
}

/// Taylor-Green vortex with amplitude `amplitude` at time `t`.
pub fn taylor_green_scaled(amplitude: f64, nu: f64, t: f64, n: usize) -> Result<GridField, NsError> {
    let g = Grid::new(2, n)?;
    let s = amplitude * (-2.0 * nu * t).exp();
    Ok(GridField::from_fn(g, 2, |x, c| {
        if c == 0 {
            s * x[0].cos() * x[1].sin()
        } else {
            -s * x[0].sin() * x[1].cos()
        }
    }))
}

/// Random zero-mean divergence-free field with modes `|k|_∞ ≤ modes`, spectrum
/// `(1+|k|²)^{-decay/2}`, normalized to `‖u‖_{L²} = norm`.
pub fn random_divergence_free<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    modes: usize,
    decay: f64,
    norm: f64,
    rng: &mut R,
) -> Result<GridField, NsError> {
    if modes == 0 || modes > n {
        return Err(NsError::BadParameters(format!("need 1 <= modes <= N (modes={modes}, N={n})")));
    }
    let g = Grid::new(d, n)?;
    let mut c = SpectralCoeffs::zeros(g, d);
    let modes_flat = g.modes();
    let k2 = g.k_squared();
    for ch in 0..d {
        let data = c.channel_mut(ch);
        for i in 0..g.len() {
            let k = &modes_flat[i * d..(i + 1) * d];
            if k.iter().any(|x| x.unsigned_abs() as usize > modes) || k2[i] == 0.0 {
                continue;
            }
            let amp = (1.0 + k2[i]).powf(-decay / 2.0);
            data[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
        }
    }
    let u = leray_project(&idft_unchecked(&symmetrize(&c)))?;
    let current = l2_norm(&u);
    if current == 0.0 {
        return Err(NsError::BadParameters("random field vanished".into()));
    }
    Ok(u.scaled(norm / current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::divergence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn taylor_green_norm_and_divergence() {
        let u = taylor_green(0.3, 0.0, 4).unwrap();
        assert!((l2_norm(&u) - (2.0 * PI * PI).sqrt()).abs() < 1e-12);
        assert!(divergence(&u).unwrap().max_abs() < 1e-13);
        assert_eq!(taylor_green(0.0, 5.0, 3).unwrap(), taylor_green(0.0, 0.0, 3).unwrap());
    }

    #[test]
    fn random_field_is_solenoidal_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [2, 3] {
            let u = random_divergence_free(d, 4, 3, 2.0, 0.7, &mut rng).unwrap();
            assert!((l2_norm(&u) - 0.7).abs() < 1e-12);
            assert!(divergence(&u).unwrap().max_abs() < 1e-12);
            assert!(u.means().iter().all(|m| m.abs() < 1e-14));
        }
    }
}

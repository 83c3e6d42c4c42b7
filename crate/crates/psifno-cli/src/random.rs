//! Seeded generators for probe data. Every draw comes from a ChaCha8 stream selected by
//! `(seed, stream)`, so work items can run in any order and still see the same numbers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use psifno::fno::{symbol_from_fn, Activation, Bias, FnoLayer, FourierMultiplier, MultiplierEntry, PsiFno};
use psifno::spectral::{idft, symmetrize, Grid, GridField, SpectralCoeffs};

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Real field with every mode of the grid populated, amplitude `(1+|k|²)^{-decay/2}` times a
/// uniform complex draw; `zero_mean` drops `k = 0`. Not normalized.
pub fn band_limited<R: Rng + ?Sized>(g: Grid, channels: usize, decay: f64, zero_mean: bool, rng: &mut R) -> GridField {
    let mut c = SpectralCoeffs::zeros(g, channels);
    let k2 = g.k_squared();
    for ch in 0..channels {
        for (z, s) in c.channel_mut(ch).iter_mut().zip(&k2) {
            let amp = (1.0 + s).powf(-decay / 2.0);
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            if zero_mean && *s == 0.0 {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    idft(&symmetrize(&c)).expect("symmetrized coefficients are real")
}

/// Band-limited field rescaled to `max|v| = 1`.
pub fn unit_field<R: Rng + ?Sized>(g: Grid, channels: usize, rng: &mut R) -> GridField {
    let v = band_limited(g, channels, 1.0, false, rng);
    let m = v.max_abs();
    v.scaled(1.0 / m)
}

/// `count` points of `[0, 2π)^d`, flattened.
pub fn points<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count * d).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
}

/// Ψ-FNO with `depth` layers of lift `lift`, scalar input and output, entries uniform on
/// `[-1, 1]`. Each layer couples every channel pair through one smoothing symbol
/// `c/(1+|k|²)`; odd layers skip the activation.
pub fn random_network<R: Rng + ?Sized>(g: Grid, lift: usize, depth: usize, rng: &mut R) -> PsiFno {
    let (d, n) = (g.d(), g.n());
    let mut r = || rng.gen_range(-1.0..1.0);
    let layers = (0..depth)
        .map(|i| {
            let c = r();
            let sym = symbol_from_fn(d, n, |k| {
                Complex64::new(c / (1.0 + k.iter().map(|x| (x * x) as f64).sum::<f64>()), 0.0)
            });
            let mut entries = Vec::new();
            for out in 0..lift {
                for inp in 0..lift {
                    entries.push(MultiplierEntry { out, inp, symbol: 0, coef: r() });
                }
            }
            let m = FourierMultiplier::new(d, n, lift, vec![sym], entries).expect("valid multiplier");
            let w = (0..lift * lift).map(|_| r() / lift as f64).collect();
            let b = (0..lift).map(|_| r()).collect();
            FnoLayer::new(w, Bias::Constant(b), m, i % 2 == 0).expect("valid layer")
        })
        .collect();
    let lift_m = (0..lift).map(|_| r()).collect();
    let proj = (0..lift).map(|_| r()).collect();
    PsiFno::new(g, 1, 1, lift_m, layers, proj, Activation::Tanh).expect("valid network")
}

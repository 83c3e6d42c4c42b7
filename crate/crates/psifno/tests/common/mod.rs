#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psifno::fno::{symbol_from_fn, Activation, Bias, FnoLayer, FourierMultiplier, MultiplierEntry, PsiFno};
use psifno::spectral::{idft, symmetrize, Grid, GridField, SpectralCoeffs};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real field with every grid mode populated, amplitudes `(1+|k|²)^{-1/2}` times uniform draws.
pub fn random_field(g: Grid, channels: usize, zero_mean: bool, rng: &mut ChaCha8Rng) -> GridField {
    let mut c = SpectralCoeffs::zeros(g, channels);
    let k2 = g.k_squared();
    for ch in 0..channels {
        for (z, s) in c.channel_mut(ch).iter_mut().zip(&k2) {
            *z = if zero_mean && *s == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (1.0 + s).sqrt()
            };
        }
    }
    idft(&symmetrize(&c)).unwrap()
}

pub fn max_diff(a: &GridField, b: &GridField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Scalar-to-scalar network with `depth` layers of lift `lift`; every channel pair is coupled
/// through a smoothing symbol `c/(1+|k|²)`, odd layers are linear.
pub fn random_network(g: Grid, lift: usize, depth: usize, rng: &mut ChaCha8Rng) -> PsiFno {
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
            let m = FourierMultiplier::new(d, n, lift, vec![sym], entries).unwrap();
            let w = (0..lift * lift).map(|_| r() / lift as f64).collect();
            let b = (0..lift).map(|_| r()).collect();
            FnoLayer::new(w, Bias::Constant(b), m, i % 2 == 0).unwrap()
        })
        .collect();
    let lift_m = (0..lift).map(|_| r()).collect();
    let proj = (0..lift).map(|_| r()).collect();
    PsiFno::new(g, 1, 1, lift_m, layers, proj, Activation::Tanh).unwrap()
}

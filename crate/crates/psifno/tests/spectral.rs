mod common;

use proptest::prelude::*;
use std::f64::consts::PI;

use common::{max_diff, random_field, rng};
use psifno::spectral::{
    dealiased_product, dft, divergence, gradient, helmholtz_inverse, idft, interpolate, inverse_laplacian,
    l2_norm, leray_project, quadrature_l2, resample, sobolev_norm, Grid, GridField, SobolevIndex,
};

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..=3, 1usize..=5).prop_filter_map("grid too large", |(d, n)| {
        if d == 3 && n > 3 {
            None
        } else {
            Grid::new(d, n).ok()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip(g in grid_strategy(), seed in any::<u64>()) {
        let f = random_field(g, 2, false, &mut rng(seed));
        let back = idft(&dft(&f)).unwrap();
        prop_assert!(max_diff(&f, &back) <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn parseval_matches_quadrature(g in grid_strategy(), seed in any::<u64>()) {
        let f = random_field(g, 1, false, &mut rng(seed));
        let (a, b) = (l2_norm(&f), quadrature_l2(&f));
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn sobolev_norms_increase_with_s(g in grid_strategy(), seed in any::<u64>(), s in 0.0f64..2.0, ds in 0.1f64..1.0) {
        let f = random_field(g, 1, false, &mut rng(seed));
        let lo = sobolev_norm(&f, SobolevIndex::new(s, false).unwrap());
        let hi = sobolev_norm(&f, SobolevIndex::new(s + ds, false).unwrap());
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        // |k|^{2s} ≤ 1 + |k|^{2s}, and the inhomogeneous weight carries a factor 1/2
        let hom = sobolev_norm(&f, SobolevIndex::new(s, true).unwrap());
        prop_assert!(hom <= std::f64::consts::SQRT_2 * lo * (1.0 + 1e-12));
    }

    #[test]
    fn product_is_commutative_with_unit(g in grid_strategy(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = random_field(g, 1, false, &mut r);
        let v = random_field(g, 1, false, &mut r);
        let uv = dealiased_product(&u, &v).unwrap();
        let vu = dealiased_product(&v, &u).unwrap();
        prop_assert!(max_diff(&uv, &vu) <= 1e-12 * uv.max_abs().max(1.0));
        let one = GridField::constant(g, &[1.0]);
        let u1 = dealiased_product(&u, &one).unwrap();
        prop_assert!(max_diff(&u1, &u) <= 1e-12 * u.max_abs().max(1.0));
    }

    #[test]
    fn leray_projection(n in 1usize..=6, d in 2usize..=3, seed in any::<u64>()) {
        let g = Grid::new(d, n.min(if d == 3 { 3 } else { 6 })).unwrap();
        let mut r = rng(seed);
        let w = random_field(g, d, false, &mut r);
        let p = leray_project(&w).unwrap();
        let pp = leray_project(&p).unwrap();
        prop_assert!(max_diff(&p, &pp) <= 1e-12 * p.max_abs().max(1.0));
        prop_assert!(divergence(&p).unwrap().max_abs() <= 1e-11 * (n as f64) * w.max_abs().max(1.0));
        // gradients are removed entirely
        let phi = random_field(g, 1, true, &mut r);
        prop_assert!(leray_project(&gradient(&phi)).unwrap().max_abs() <= 1e-11 * (n as f64) * phi.max_abs().max(1.0));
        // orthogonal projection: never increases the norm
        prop_assert!(l2_norm(&p) <= l2_norm(&w) * (1.0 + 1e-12));
    }

    #[test]
    fn inverse_laplacian_inverts_minus_laplacian(g in grid_strategy(), seed in any::<u64>()) {
        let f = random_field(g, 1, true, &mut rng(seed));
        let u = inverse_laplacian(&f);
        let grad = gradient(&u);
        let minus_lap = divergence(&grad).unwrap().scaled(-1.0);
        prop_assert!(max_diff(&minus_lap, &f) <= 1e-11 * f.max_abs().max(1.0));
    }

    #[test]
    fn helmholtz_inverse_is_a_contraction(g in grid_strategy(), seed in any::<u64>(), alpha in 0.0f64..3.0) {
        let f = random_field(g, 1, false, &mut rng(seed));
        let u = helmholtz_inverse(&f, alpha).unwrap();
        prop_assert!(l2_norm(&u) <= l2_norm(&f) * (1.0 + 1e-12));
        // (1 - αΔ)u = f
        let lap = divergence(&gradient(&u)).unwrap();
        let back = u.axpy(-alpha, &lap).unwrap();
        prop_assert!(max_diff(&back, &f) <= 1e-11 * f.max_abs().max(1.0));
    }

    #[test]
    fn resample_up_then_down_is_identity(g in grid_strategy(), seed in any::<u64>(), extra in 1usize..4) {
        let f = random_field(g, 1, false, &mut rng(seed));
        let up = resample(&f, g.n() + extra).unwrap();
        prop_assert!((l2_norm(&up) - l2_norm(&f)).abs() <= 1e-12 * l2_norm(&f));
        let down = resample(&up, g.n()).unwrap();
        prop_assert!(max_diff(&down, &f) <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn interpolant_passes_through_grid_values(g in grid_strategy(), seed in any::<u64>()) {
        let f = random_field(g, 1, false, &mut rng(seed));
        let got = interpolate(&f, &g.points());
        let worst = got.iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-11 * f.max_abs().max(1.0));
    }
}

/// `|sin x|³` has Fourier coefficients of order `|k|^{-4}`, so it lies in `H^s` for `s < 7/2` and
/// its trigonometric interpolant converges at the algebraic rate `N^{-7/2}` in `L²`.
#[test]
fn interpolation_error_decays_algebraically_for_finite_smoothness() {
    let f = |x: f64| x.sin().abs().powi(3);
    let fine = Grid::new(1, 1 << 13).unwrap();
    let exact = GridField::from_fn(fine, 1, |x, _| f(x[0]));
    let ns = [8usize, 16, 32, 64];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let g = Grid::new(1, n).unwrap();
            let interp = resample(&GridField::from_fn(g, 1, |x, _| f(x[0])), fine.n()).unwrap();
            quadrature_l2(&interp.sub(&exact).unwrap())
        })
        .collect();
    let rates: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for r in &rates {
        assert!((3.0..=4.0).contains(r), "rates {rates:?}, errors {errs:?}");
    }
}

/// For a band-limited function the interpolant is exact once the grid resolves every mode.
#[test]
fn interpolation_is_exact_for_band_limited_data() {
    let f = |x: &[f64]| (2.0 * x[0] - x[1]).cos() + 0.3 * (3.0 * x[1]).sin();
    let g = Grid::new(2, 3).unwrap();
    let u = GridField::from_fn(g, 1, |x, _| f(x));
    let pts: Vec<f64> = (0..20).flat_map(|i| [0.31 * i as f64 % (2.0 * PI), 0.77 * i as f64 % (2.0 * PI)]).collect();
    let got = interpolate(&u, &pts);
    for (i, v) in got.iter().enumerate() {
        assert!((v - f(&pts[2 * i..2 * i + 2])).abs() < 1e-12);
    }
}

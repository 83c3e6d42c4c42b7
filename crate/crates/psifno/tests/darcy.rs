mod common;

use proptest::prelude::*;

use common::{random_field, rng};
use psifno::darcy::{
    iteration_count, picard_step, prepare_coefficients, random_decay_coefficient, solve, DarcyProblem,
};
use psifno::spectral::{dft, idft, inverse_laplacian, resample, sobolev_norm, Grid, GridField, SobolevIndex};

fn source(g: Grid) -> GridField {
    let d = g.d();
    GridField::from_fn(g, 1, |x, _| x[0].cos() + 0.5 * (x[0] + 2.0 * x[d - 1]).sin())
}

fn h1(f: &GridField) -> f64 {
    sobolev_norm(f, SobolevIndex::DOT_H1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn picard_map_contracts_by_the_coefficient_sup(
        seed in any::<u64>(), d in 1usize..=2, n in 2usize..=8, lambda in 0.2f64..0.9, ell in 0.3f64..1.5,
    ) {
        let mut r = rng(seed);
        let coarse = Grid::new(d, 2 * n).unwrap();
        let a = random_decay_coefficient(d, ell, 3, lambda, &mut r).sample(coarse).unwrap();
        let prep = prepare_coefficients(&a, &source(coarse), n).unwrap();
        prop_assert!(prep.a_tilde_sup < 1.0 - lambda / 2.0);
        let g = Grid::new(d, n).unwrap();
        let u = random_field(g, 1, true, &mut r);
        let v = random_field(g, 1, true, &mut r);
        let fu = picard_step(&u, &prep.a_tilde, &prep.f).unwrap();
        let fv = picard_step(&v, &prep.a_tilde, &prep.f).unwrap();
        let ratio = h1(&fu.sub(&fv).unwrap()) / h1(&u.sub(&v).unwrap());
        prop_assert!(ratio <= prep.a_tilde_sup + 1e-12, "ratio {} sup {}", ratio, prep.a_tilde_sup);
    }

    #[test]
    fn residuals_shrink_geometrically(seed in any::<u64>(), n in 2usize..=8, lambda in 0.3f64..0.9) {
        let g = Grid::new(2, 2 * n).unwrap();
        let a = random_decay_coefficient(2, 0.8, 3, lambda, &mut rng(seed)).sample(g).unwrap();
        let p = DarcyProblem::new(a, source(g), lambda, 1, n).unwrap();
        let sol = solve(&p).unwrap();
        let q = sol.prepared.a_tilde_sup;
        for w in sol.residuals.windows(2) {
            prop_assert!(w[1] <= q * w[0] + 1e-13 * sol.residuals[0]);
        }
    }

    #[test]
    fn unit_coefficient_gives_the_poisson_solution(seed in any::<u64>(), d in 1usize..=2, n in 1usize..=6) {
        let g = Grid::new(d, 2 * n).unwrap();
        let f = random_field(g, 1, true, &mut rng(seed));
        let p = DarcyProblem::new(GridField::constant(g, &[1.0]), f.clone(), 0.5, 1, n).unwrap();
        let u = solve(&p).unwrap().u;
        // the solver truncates the source to |k|_∞ ≤ N, it does not interpolate it
        let want = inverse_laplacian(&idft(&dft(&f).restrict(n).unwrap()).unwrap());
        prop_assert!(h1(&u.sub(&want).unwrap()) <= 1e-12 * h1(&want).max(1e-300));
    }

    #[test]
    fn iteration_count_is_monotone(lambda in 0.05f64..0.95, n in 1usize..200, k in 1u32..4) {
        let base = iteration_count(lambda, n, k).unwrap();
        prop_assert!(iteration_count(lambda, n + 1, k).unwrap() >= base);
        prop_assert!(iteration_count(lambda, n, k + 1).unwrap() >= base);
    }
}

/// Solutions at increasing `N` approach a fine reference (`N = 128`) in `Ḣ¹`.
#[test]
fn self_convergence_towards_a_fine_reference() {
    let (lambda, k, fine) = (0.5, 2, 128);
    let g = Grid::new(2, 2 * fine).unwrap();
    let a = random_decay_coefficient(2, 0.8, 4, lambda, &mut rng(11)).sample(g).unwrap();
    let f = source(g);
    let solve_at = |n: usize| solve(&DarcyProblem::new(a.clone(), f.clone(), lambda, k, n).unwrap()).unwrap().u;
    let reference = solve_at(fine);
    let errs: Vec<f64> = [4usize, 8, 16, 32]
        .iter()
        .map(|&n| h1(&resample(&solve_at(n), fine).unwrap().sub(&reference).unwrap()))
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] / 4.0, "errors {errs:?}");
    }
}

#[test]
fn coarse_coefficients_are_rejected() {
    let g = Grid::new(2, 5).unwrap();
    let f = source(g);
    assert!(DarcyProblem::new(GridField::constant(g, &[1.0]), f, 0.5, 1, 3).is_err());
}

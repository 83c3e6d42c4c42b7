mod common;

use proptest::prelude::*;

use common::rng;
use psifno::navier_stokes::{
    max_cfl_timestep, random_divergence_free, run_first_order, run_second_order, taylor_green_scaled, NsConfig,
    Startup,
};
use psifno::spectral::{divergence, l2_norm};

fn config(d: usize, n: usize, nu: f64, steps: usize, u_bound: f64) -> NsConfig {
    let tau = 0.9 * max_cfl_timestep(u_bound, n, d);
    NsConfig { d, n, nu, t_final: steps as f64 * tau, tau, u_bound, inner_iterations: None }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_stay_divergence_free_and_mean_free(
        seed in any::<u64>(), d in 2usize..=3, n in 2usize..=4, nu in 0.0f64..0.2, second in any::<bool>(),
    ) {
        let u0 = random_divergence_free(d, n, n, 1.0, 0.5, &mut rng(seed)).unwrap();
        let cfg = config(d, n, nu, 4, 0.5);
        let traj = if second {
            run_second_order(&cfg, &u0, Startup::Richardson).unwrap()
        } else {
            run_first_order(&cfg, &u0).unwrap()
        };
        prop_assert_eq!(traj.states.len(), 5);
        for u in &traj.states {
            prop_assert!(divergence(u).unwrap().max_abs() <= 1e-12 * n as f64);
            prop_assert!(u.means().iter().all(|m| m.abs() <= 1e-14));
        }
    }

    #[test]
    fn converged_first_order_steps_never_gain_energy(seed in any::<u64>(), n in 2usize..=6, nu in 0.0f64..0.2) {
        let u0 = random_divergence_free(2, n, n.min(4), 1.0, 0.5, &mut rng(seed)).unwrap();
        let mut cfg = config(2, n, nu, 8, 0.5);
        cfg.inner_iterations = Some(60);
        let traj = run_first_order(&cfg, &u0).unwrap();
        for w in traj.energies.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "energies {:?}", traj.energies);
        }
    }
}

/// The Taylor-Green advection term is a gradient, so after projection both schemes reduce to
/// their action on the heat equation at `|k|² = 2`.
#[test]
fn taylor_green_decays_by_the_exact_step_factors() {
    let (nu, n, amp) = (0.1, 4, 0.05);
    let u0 = taylor_green_scaled(amp, nu, 0.0, n).unwrap();
    let mut cfg = config(2, n, nu, 10, 1.2 * l2_norm(&u0));
    cfg.t_final = 10.0 * cfg.tau;
    let tau = cfg.tau;

    let first = run_first_order(&cfg, &u0).unwrap();
    let r1 = 1.0 / (1.0 + 2.0 * nu * tau);
    for w in first.states.windows(2) {
        assert!(w[1].sub(&w[0].scaled(r1)).unwrap().max_abs() < 1e-15);
    }

    let second = run_second_order(&cfg, &u0, Startup::Richardson).unwrap();
    let r2 = (1.0 - nu * tau) / (1.0 + nu * tau);
    for w in second.states[1..].windows(2) {
        assert!(w[1].sub(&w[0].scaled(r2)).unwrap().max_abs() < 1e-15);
    }
}

#[test]
fn inviscid_taylor_green_is_steady() {
    let n = 3;
    let u0 = taylor_green_scaled(0.1, 0.0, 0.0, n).unwrap();
    let cfg = config(2, n, 0.0, 5, 1.2 * l2_norm(&u0));
    let traj = run_second_order(&cfg, &u0, Startup::Richardson).unwrap();
    assert!(traj.final_state().sub(&traj.states[0]).unwrap().max_abs() < 1e-15);
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use super::NsError;
use crate::spectral::{
    dft, divergence, gradient_coeffs, helmholtz_symbol, idft_unchecked, l2_norm, leray_coeffs, resample,
    Grid, GridField,
};

/// Run parameters. `inner_iterations` overrides the iteration count from the algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NsConfig {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub nu: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub tau: f64,
    #[serde(rename = "U")]
    pub u_bound: f64,
    #[serde(default)]
    pub inner_iterations: Option<usize>,
}

impl NsConfig {
    pub fn validate(&self) -> Result<(), NsError> {
        let bad = |m: String| Err(NsError::BadParameters(m));
        if !(self.d == 2 || self.d == 3) {
            return bad(format!("d must be 2 or 3, got {}", self.d));
        }
        if self.n < 1 {
            return bad("N must be at least 1".into());
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad(format!("viscosity must be finite and non-negative, got {}", self.nu));
        }
        if !(self.t_final > 0.0 && self.tau > 0.0 && self.tau <= self.t_final) {
            return bad(format!("need 0 < tau <= T (tau={}, T={})", self.tau, self.t_final));
        }
        let ratio = self.t_final / self.tau;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return bad(format!("T/tau = {ratio} is not an integer"));
        }
        if !(self.u_bound > 0.0 && self.u_bound.is_finite()) {
            return bad(format!("U must be positive, got {}", self.u_bound));
        }
        let tau_max = max_cfl_timestep(self.u_bound, self.n, self.d);
        if self.tau > tau_max * (1.0 + 1e-12) {
            return Err(NsError::CflViolation {
                step: 0,
                value: self.tau,
                limit: tau_max,
            });
        }
        Ok(())
    }

    /// `n_T = T/τ`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.tau).round() as usize
    }

    pub fn grid(&self) -> Result<Grid, NsError> {
        Ok(Grid::new(self.d, self.n)?)
    }

    pub fn kappa_first(&self) -> Result<usize, NsError> {
        match self.inner_iterations {
            Some(k) => Ok(k),
            None => kappa0(self.t_final, self.tau),
        }
    }

    pub fn kappa_second(&self) -> Result<usize, NsError> {
        match self.inner_iterations {
            Some(k) => Ok(k),
            None => kappa2(self.t_final, self.tau),
        }
    }
}

fn ceil_log2(x: f64) -> usize {
    let v = (x.log2() - 1e-9).ceil();
    if v < 1.0 {
        1
    } else {
        v as usize
    }
}

fn check_times(t: f64, tau: f64) -> Result<(), NsError> {
    if !(tau > 0.0 && tau <= t && t.is_finite()) {
        return Err(NsError::BadParameters(format!("need 0 < tau <= T (tau={tau}, T={t})")));
    }
    Ok(())
}

/// `κ₀ = ⌈log₂(T²/τ²)⌉`, at least 1.
pub fn kappa0(t: f64, tau: f64) -> Result<usize, NsError> {
    check_times(t, tau)?;
    Ok(ceil_log2((t / tau).powi(2)))
}

/// `⌈log₂(T³/τ³)⌉`, at least 1 (second-order scheme).
pub fn kappa2(t: f64, tau: f64) -> Result<usize, NsError> {
    check_times(t, tau)?;
    Ok(ceil_log2((t / tau).powi(3)))
}

/// `τ_max = 1/(2e·U·N^{d/2+1})`.
pub fn max_cfl_timestep(u_bound: f64, n: usize, d: usize) -> f64 {
    1.0 / (2.0 * E * u_bound * (n as f64).powf(d as f64 / 2.0 + 1.0))
}

pub fn energy(u: &GridField) -> f64 {
    l2_norm(u)
}

/// `ℙ_N(v·∇w)` with `v` sampled once on the `2N` grid.
struct Advector {
    n: usize,
    fine: GridField,
}

impl Advector {
    fn new(v: &GridField) -> Result<Self, NsError> {
        let n = v.grid().n();
        Ok(Advector {
            n,
            fine: resample(v, 2 * n)?,
        })
    }

    fn apply(&self, w: &GridField) -> Result<GridField, NsError> {
        let d = w.grid().d();
        let grad = idft_unchecked(&gradient_coeffs(&dft(w)).regrid(2 * self.n)?);
        let fg = self.fine.grid();
        let len = fg.len();
        let mut prod = vec![0.0; d * len];
        for c in 0..d {
            let dst = &mut prod[c * len..(c + 1) * len];
            for a in 0..d {
                for ((y, v), g) in dst.iter_mut().zip(self.fine.channel(a)).zip(grad.channel(c * d + a)) {
                    *y += v * g;
                }
            }
        }
        let coeffs = dft(&GridField::new(fg, d, prod)?).restrict(self.n)?;
        Ok(idft_unchecked(&leray_coeffs(&coeffs)))
    }
}

/// `ℙ_N(v·∇w)`, with the product formed exactly on the `2N` grid.
pub fn advect(v: &GridField, w: &GridField) -> Result<GridField, NsError> {
    check_velocity(v)?;
    check_velocity(w)?;
    if v.grid() != w.grid() {
        return Err(NsError::BadParameters("fields on different grids".into()));
    }
    Advector::new(v)?.apply(w)
}

fn check_velocity(u: &GridField) -> Result<(), NsError> {
    if u.channels() != u.grid().d() {
        return Err(NsError::BadParameters(format!(
            "velocity needs {} channels, got {}",
            u.grid().d(),
            u.channels()
        )));
    }
    Ok(())
}

/// `(1 - αΔ)^{-1} f`.
fn apply_helmholtz(f: &GridField, alpha: f64) -> GridField {
    idft_unchecked(&dft(f).apply_symbol(|k| helmholtz_symbol(k, alpha)))
}

/// `(1 + βΔ) f`.
fn apply_explicit_diffusion(f: &GridField, beta: f64) -> GridField {
    idft_unchecked(&dft(f).apply_symbol(|k| {
        let k2: i64 = k.iter().map(|x| x * x).sum();
        Complex64::new(1.0 - beta * k2 as f64, 0.0)
    }))
}

/// `F(w) = (1-ντΔ)^{-1}u^n - τ(1-ντΔ)^{-1}ℙ_N(u^n·∇w)`.
pub fn picard_map_first(w: &GridField, u_n: &GridField, nu: f64, tau: f64) -> Result<GridField, NsError> {
    let adv = advect(u_n, w)?;
    Ok(apply_helmholtz(&u_n.axpy(-tau, &adv)?, nu * tau))
}

/// `F₂(w)` for the second-order scheme (see module docs).
pub fn picard_map_second(
    w: &GridField,
    u_prev: &GridField,
    u_n: &GridField,
    nu: f64,
    tau: f64,
) -> Result<GridField, NsError> {
    let ubar = u_n.scaled(1.5).axpy(-0.5, u_prev)?;
    let adv = Advector::new(&ubar)?;
    let rhs = apply_explicit_diffusion(u_n, nu * tau / 2.0).axpy(-tau / 2.0, &adv.apply(u_n)?)?;
    Ok(apply_helmholtz(&rhs.axpy(-tau / 2.0, &adv.apply(w)?)?, nu * tau / 2.0))
}

fn check_finite(u: &GridField, step: usize) -> Result<(), NsError> {
    if u.values().iter().any(|x| !x.is_finite()) {
        return Err(NsError::NonFiniteState(step));
    }
    Ok(())
}

fn cfl_value(tau: f64, u: &GridField) -> f64 {
    let g = u.grid();
    tau * l2_norm(u) * (g.n() as f64).powf(g.d() as f64 / 2.0 + 1.0)
}

/// Iterates `w^{n,0} = 0, …, w^{n,κ}` of the first-order map.
pub fn picard_iterates_first(
    u_n: &GridField,
    nu: f64,
    tau: f64,
    kappa: usize,
) -> Result<Vec<GridField>, NsError> {
    let adv = Advector::new(u_n)?;
    let h = nu * tau;
    let mut out = vec![GridField::zeros(u_n.grid(), u_n.channels())];
    for _ in 0..kappa {
        let w = out.last().expect("non-empty");
        let next = apply_helmholtz(&u_n.axpy(-tau, &adv.apply(w)?)?, h);
        out.push(next);
    }
    Ok(out)
}

fn first_order_update(u_n: &GridField, nu: f64, tau: f64, kappa: usize, step: usize) -> Result<GridField, NsError> {
    let value = cfl_value(tau, u_n);
    if value > 0.5 {
        return Err(NsError::CflViolation { step, value, limit: 0.5 });
    }
    let adv = Advector::new(u_n)?;
    let hu = apply_helmholtz(u_n, nu * tau);
    let mut w = GridField::zeros(u_n.grid(), u_n.channels());
    for _ in 0..kappa {
        w = hu.axpy(-tau, &apply_helmholtz(&adv.apply(&w)?, nu * tau))?;
    }
    check_finite(&w, step + 1)?;
    Ok(w)
}

fn second_order_update(
    u_prev: &GridField,
    u_n: &GridField,
    nu: f64,
    tau: f64,
    kappa: usize,
    step: usize,
) -> Result<GridField, NsError> {
    let ubar = u_n.scaled(1.5).axpy(-0.5, u_prev)?;
    let value = cfl_value(tau / 2.0, &ubar);
    if value > 0.5 {
        return Err(NsError::CflViolation { step, value, limit: 0.5 });
    }
    let adv = Advector::new(&ubar)?;
    let alpha = nu * tau / 2.0;
    let rhs = apply_explicit_diffusion(u_n, alpha).axpy(-tau / 2.0, &adv.apply(u_n)?)?;
    let base = apply_helmholtz(&rhs, alpha);
    let mut w = GridField::zeros(u_n.grid(), u_n.channels());
    for _ in 0..kappa {
        w = base.axpy(-tau / 2.0, &apply_helmholtz(&adv.apply(&w)?, alpha))?;
    }
    check_finite(&w, step + 1)?;
    Ok(w)
}

/// `u^n` at step `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NsState {
    pub step: usize,
    pub u: GridField,
}

impl NsState {
    pub fn energy(&self) -> f64 {
        l2_norm(&self.u)
    }
}

pub fn step_first_order(state: &NsState, cfg: &NsConfig) -> Result<NsState, NsError> {
    let u = first_order_update(&state.u, cfg.nu, cfg.tau, cfg.kappa_first()?, state.step)?;
    Ok(NsState {
        step: state.step + 1,
        u,
    })
}

/// One step of the second-order scheme from `(u^{n-1}, u^n)`.
pub fn step_second_order(prev: &NsState, cur: &NsState, cfg: &NsConfig) -> Result<NsState, NsError> {
    let u = second_order_update(&prev.u, &cur.u, cfg.nu, cfg.tau, cfg.kappa_second()?, cur.step)?;
    Ok(NsState {
        step: cur.step + 1,
        u,
    })
}

/// How `u¹` is produced for the second-order scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Startup {
    /// `2·S(2m) - S(m)`, where `S(m)` runs the first-order scheme on `[0,τ]` with `m = n_T`
    /// sub-steps; removes the leading first-order error of the start value.
    #[default]
    Richardson,
    /// First-order scheme on `[0,τ]` with the given number of sub-steps (`0` means `n_T`).
    Substeps(usize),
}

fn first_order_on_interval(u0: &GridField, nu: f64, tau: f64, sub: usize) -> Result<GridField, NsError> {
    let dt = tau / sub as f64;
    let kappa = kappa0(tau, dt)?;
    let mut u = u0.clone();
    for s in 0..sub {
        u = first_order_update(&u, nu, dt, kappa, s)?;
    }
    Ok(u)
}

/// Start value `u¹ ≈ u(τ)`.
pub fn startup_state(u0: &GridField, cfg: &NsConfig, startup: Startup) -> Result<GridField, NsError> {
    let m = cfg.steps();
    match startup {
        Startup::Substeps(s) => first_order_on_interval(u0, cfg.nu, cfg.tau, if s == 0 { m } else { s }),
        Startup::Richardson => {
            let coarse = first_order_on_interval(u0, cfg.nu, cfg.tau, m)?;
            let fine = first_order_on_interval(u0, cfg.nu, cfg.tau, 2 * m)?;
            Ok(fine.scaled(2.0).axpy(-1.0, &coarse)?)
        }
    }
}

/// States `u⁰ … u^{n_T}` and their energies.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<GridField>,
    pub energies: Vec<f64>,
    pub kappa: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &GridField {
        self.states.last().expect("trajectory holds u0")
    }

    /// `max_n ‖u^n‖ / ‖u⁰‖`.
    pub fn energy_max_ratio(&self) -> f64 {
        let e0 = self.energies[0];
        let m = self.energies.iter().cloned().fold(0.0, f64::max);
        if e0 == 0.0 {
            if m == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            m / e0
        }
    }
}

/// `u⁰_N = I_N u0`, checked for channels, zero mean, divergence and `‖u⁰‖ ≤ U`.
fn initial_state(cfg: &NsConfig, u0: &GridField) -> Result<GridField, NsError> {
    cfg.validate()?;
    if u0.grid().d() != cfg.d || u0.channels() != cfg.d {
        return Err(NsError::BadParameters(format!(
            "initial data must be a {0}-channel field in {0} dimensions",
            cfg.d
        )));
    }
    let u = resample(u0, cfg.n)?;
    let scale = u.max_abs().max(f64::MIN_POSITIVE);
    if u.means().iter().any(|m| m.abs() > 1e-10 * scale) {
        return Err(NsError::BadParameters("initial data has nonzero mean".into()));
    }
    let div = l2_norm(&divergence(&u)?);
    if div > 1e-10 * (cfg.n as f64) * l2_norm(&u).max(f64::MIN_POSITIVE) {
        return Err(NsError::BadParameters(format!("initial data not divergence free ({div:.3e})")));
    }
    let e = l2_norm(&u);
    if e > cfg.u_bound * (1.0 + 1e-12) {
        return Err(NsError::BadParameters(format!("‖u0‖ = {e} exceeds U = {}", cfg.u_bound)));
    }
    Ok(u)
}

pub fn run_first_order(cfg: &NsConfig, u0: &GridField) -> Result<Trajectory, NsError> {
    let u = initial_state(cfg, u0)?;
    let kappa = cfg.kappa_first()?;
    let mut states = vec![u];
    for n in 0..cfg.steps() {
        let next = first_order_update(&states[n], cfg.nu, cfg.tau, kappa, n)?;
        states.push(next);
    }
    let energies = states.iter().map(l2_norm).collect();
    Ok(Trajectory {
        states,
        energies,
        kappa,
    })
}

pub fn run_second_order(cfg: &NsConfig, u0: &GridField, startup: Startup) -> Result<Trajectory, NsError> {
    let u = initial_state(cfg, u0)?;
    let kappa = cfg.kappa_second()?;
    let u1 = startup_state(&u, cfg, startup)?;
    let mut states = vec![u, u1];
    for n in 1..cfg.steps() {
        let next = second_order_update(&states[n - 1], &states[n], cfg.nu, cfg.tau, kappa, n)?;
        states.push(next);
    }
    states.truncate(cfg.steps() + 1);
    let energies = states.iter().map(l2_norm).collect();
    Ok(Trajectory {
        states,
        energies,
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navier_stokes::{random_divergence_free, taylor_green_scaled};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shear(n: usize, amp: f64) -> GridField {
        GridField::from_fn(Grid::new(2, n).unwrap(), 2, |x, c| if c == 0 { amp * x[1].sin() } else { 0.0 })
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa0(1.0, 0.01).unwrap(), 14);
        assert_eq!(kappa0(1.0, 1.0).unwrap(), 1);
        assert_eq!(kappa2(1.0, 0.1).unwrap(), 10);
        assert_eq!(kappa0(1.0, 0.25).unwrap(), 4);
        assert!(kappa0(1.0, 2.0).is_err());
    }

    #[test]
    fn cfl_timestep_examples() {
        let t = max_cfl_timestep(1.0, 8, 2);
        assert!((t - 1.0 / (128.0 * E)).abs() < 1e-18);
        assert!((t - 2.874e-3).abs() < 1e-6);
        assert!((max_cfl_timestep(2.0, 8, 2) - t / 2.0).abs() < 1e-15);
        assert!((max_cfl_timestep(1.0, 8, 3) - t / 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn picard_map_trivial_cases() {
        let g = Grid::new(2, 4).unwrap();
        let zero = GridField::zeros(g, 2);
        let u = taylor_green_scaled(0.1, 0.0, 0.0, 4).unwrap();
        let w = shear(4, 0.3);
        assert_eq!(picard_map_first(&w, &zero, 0.1, 0.01).unwrap().max_abs(), 0.0);
        let f0 = picard_map_first(&zero, &u, 0.1, 0.01).unwrap();
        // single |k|² = 2 mode
        assert!(f0.sub(&u.scaled(1.0 / (1.0 + 0.002))).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn shear_mode_decays_like_backward_euler() {
        let (nu, tau, n) = (0.5, 0.1, 4);
        let u0 = shear(n, 1e-3);
        let cfg = NsConfig { d: 2, n, nu, t_final: 1.0, tau, u_bound: 1e-2, inner_iterations: None };
        let traj = run_first_order(&cfg, &u0).unwrap();
        let want = u0.scaled((1.0 + nu * tau).powi(10).recip());
        assert!(traj.final_state().sub(&want).unwrap().max_abs() < 1e-15);
        let traj2 = run_second_order(&cfg, &u0, Startup::Richardson).unwrap();
        let r = (1.0 - nu * tau / 2.0) / (1.0 + nu * tau / 2.0);
        for w in traj2.states[1..].windows(2) {
            assert!(w[1].sub(&w[0].scaled(r)).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::new(2, 3).unwrap();
        let cfg = NsConfig { d: 2, n: 3, nu: 0.1, t_final: 0.1, tau: 0.01, u_bound: 1.0, inner_iterations: None };
        let traj = run_first_order(&cfg, &GridField::zeros(g, 2)).unwrap();
        assert!(traj.states.iter().all(|s| s.max_abs() == 0.0));
        let traj = run_second_order(&cfg, &GridField::zeros(g, 2), Startup::Richardson).unwrap();
        assert_eq!(traj.states.len(), 11);
        assert!(traj.states.iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn inner_iterates_converge_geometrically() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 6;
        let u = random_divergence_free(2, n, 4, 1.0, 1.0, &mut rng).unwrap();
        let tau = 0.5 / (l2_norm(&u) * (n as f64).powi(2));
        let its = picard_iterates_first(&u, 0.02, tau, 60).unwrap();
        let star = &its[60];
        let un = l2_norm(&u);
        for (k, w) in its.iter().enumerate().take(30) {
            let err = l2_norm(&star.sub(w).unwrap());
            assert!(err <= 0.5f64.powi(k as i32) * un * (1.0 + 1e-6), "k={k}");
        }
    }

    #[test]
    fn states_stay_solenoidal_with_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u0 = random_divergence_free(2, 5, 5, 1.0, 0.01, &mut rng).unwrap();
        let cfg = NsConfig { d: 2, n: 5, nu: 0.01, t_final: 0.5, tau: 0.05, u_bound: 0.01, inner_iterations: None };
        cfg.validate().unwrap();
        for traj in [run_first_order(&cfg, &u0).unwrap(), run_second_order(&cfg, &u0, Startup::Richardson).unwrap()] {
            for s in &traj.states {
                assert!(l2_norm(&divergence(s).unwrap()) <= 1e-9 * l2_norm(s).max(1e-300) * 5.0);
                assert!(s.means().iter().all(|m| m.abs() < 1e-15));
            }
        }
    }

    #[test]
    fn config_validation() {
        let ok = NsConfig { d: 2, n: 4, nu: 0.1, t_final: 1.0, tau: 0.01, u_bound: 0.1, inner_iterations: None };
        ok.validate().unwrap();
        assert_eq!(ok.steps(), 100);
        let mut c = ok.clone();
        c.tau = 0.03;
        assert!(matches!(c.validate(), Err(NsError::BadParameters(_))));
        let mut c = ok.clone();
        c.u_bound = 10.0;
        assert!(matches!(c.validate(), Err(NsError::CflViolation { .. })));
        let mut c = ok;
        c.d = 1;
        assert!(c.validate().is_err());
    }
}

use std::f64::consts::PI;

use super::units::halve_until;
use super::{calibrate_pass, pass_error, EmulationError, PassUnit};
use crate::fno::{lex_modes, Activation, Bias, FnoLayer, PsiFno, LINEAR_EXPANSION_POINT};
use crate::spectral::{Grid, GridField};

/// Target of [`build_affine_approx`]: the affine map `v ↦ Wv + b + F^{-1}(P·Fv)` of `layer`
/// (its activation flag is ignored), to be matched within `eps` at every grid point for all
/// band-limited inputs with `‖v‖_{L²} ≤ bound`.
#[derive(Clone, Debug)]
pub struct AffineApproxSpec {
    pub layer: FnoLayer,
    pub grid: Grid,
    pub bound: f64,
    pub eps: f64,
    pub x0: f64,
    pub activation: Activation,
}

impl AffineApproxSpec {
    pub fn new(layer: FnoLayer, grid: Grid, bound: f64, eps: f64, activation: Activation) -> Self {
        AffineApproxSpec {
            layer,
            grid,
            bound,
            eps,
            x0: LINEAR_EXPANSION_POINT,
            activation,
        }
    }
}

/// An activated layer on `2·dim` channels whose readout `readout·σ(·)` approximates the target.
#[derive(Clone, Debug)]
pub struct AffineApprox {
    pub layer: FnoLayer,
    /// `dim × 2dim`, row-major.
    pub readout: Vec<f64>,
    pub unit: PassUnit,
    /// Bound on the target's pre-activation values over the admissible inputs.
    pub value_bound: f64,
    pub probe_error: f64,
}

impl AffineApprox {
    /// Network `v ↦ readout·σ(layer([v; 0]))` with a single activated layer.
    pub fn network(&self, grid: Grid) -> Result<PsiFno, EmulationError> {
        let dim = self.layer.dim() / 2;
        Ok(PsiFno::new(
            grid,
            dim,
            dim,
            embed(dim),
            vec![self.layer.clone()],
            self.readout.clone(),
            self.unit.activation,
        )?)
    }
}

fn eye(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// `[I; 0]`, `2n × n`.
fn embed(n: usize) -> Vec<f64> {
    let mut m = eye(n);
    m.resize(2 * n * n, 0.0);
    m
}

/// `[I, 0]`, `n × 2n`.
fn select(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; 2 * n * n];
    for i in 0..n {
        m[i * 2 * n + i] = 1.0;
    }
    m
}

/// `[hI; -hI]`, `2n × n`.
fn split(n: usize, h: f64) -> Vec<f64> {
    let mut m = vec![0.0; 2 * n * n];
    for i in 0..n {
        m[i * n + i] = h;
        m[(n + i) * n + i] = -h;
    }
    m
}

/// `c·[I, -I]`, `n × 2n`.
fn merge(n: usize, c: f64) -> Vec<f64> {
    let mut m = vec![0.0; 2 * n * n];
    for i in 0..n {
        m[i * 2 * n + i] = c;
        m[i * 2 * n + n + i] = -c;
    }
    m
}

/// `σ(x₀ ± h·(Wv + b + Kv))` on `2·dim` channels, reading `v` from `right·s`.
fn split_layer(layer: &FnoLayer, right: &[f64], unit: &PassUnit) -> FnoLayer {
    let n = layer.dim();
    layer.transformed(&split(n, unit.h), 2 * n, right, 2 * n, &vec![unit.x0; 2 * n], 2 * n, true)
}

/// Rigorous bound on `|(Wv + b + Kv)_o(x_j)|` over band-limited `v` with `‖v‖_{L²} ≤ bound`.
fn affine_value_bound(layer: &FnoLayer, grid: Grid, bound: f64) -> f64 {
    let (d, n, dim) = (grid.d(), grid.n(), layer.dim());
    let modes = (2 * n + 1).pow(d as u32) as f64;
    // Nikolskii: ‖g‖_∞ ≤ sqrt(|K_N|/(2π)^d) ‖g‖_{L²} on trigonometric polynomials of degree N
    let nik = (modes / (2.0 * PI).powi(d as i32)).sqrt();
    let m = layer.multiplier();
    let p_norm = lex_modes(d, m.width())
        .iter()
        .map(|k| m.matrix_at(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let w = layer.weight();
    let b_sup = match layer.bias() {
        Bias::Zero => vec![0.0; dim],
        Bias::Constant(b) => b.iter().map(|x| x.abs()).collect(),
        Bias::Field(f) => (0..dim).map(|o| f.channel(o).iter().fold(0.0f64, |m, x| m.max(x.abs()))).collect(),
    };
    (0..dim)
        .map(|o| {
            let w_row = w[o * dim..(o + 1) * dim].iter().map(|x| x * x).sum::<f64>().sqrt();
            nik * bound * (w_row + p_norm) + b_sup[o]
        })
        .fold(0.0, f64::max)
}

/// One activated layer plus a linear readout approximating an affine Ψ-FNO layer, via
/// `ψ_h(y) = (σ(x₀+hy) - σ(x₀-hy))/(2hσ'(x₀))` applied to every pre-activation value.
pub fn build_affine_approx(spec: &AffineApproxSpec) -> Result<AffineApprox, EmulationError> {
    if !(spec.bound >= 0.0) || !(spec.eps > 0.0) {
        return Err(EmulationError::BadParameters("bound must be non-negative and eps positive".into()));
    }
    spec.layer.check_grid(spec.grid)?;
    let n = spec.layer.dim();
    let value_bound = affine_value_bound(&spec.layer, spec.grid, spec.bound);
    let (unit, probe_error) = halve_until(
        "pass-through",
        1.0,
        spec.eps,
        |h| PassUnit::new(spec.activation, h, spec.x0),
        |u| pass_error(u, value_bound),
    )?;
    Ok(AffineApprox {
        layer: split_layer(&spec.layer, &select(n), &unit),
        readout: merge(n, unit.weight()),
        unit,
        value_bound,
        probe_error,
    })
}

/// Fully activated rewrite with lift `2·d_v` for the given unit per unactivated layer.
fn strict_with(net: &PsiFno, units: &[Option<PassUnit>]) -> Result<PsiFno, EmulationError> {
    let dv = net.d_v();
    let mut lift = net.lift_matrix().to_vec();
    lift.resize(2 * dv * net.d_a(), 0.0);
    // hidden state of `net` = m · hidden state of the rewrite
    let mut m = select(dv);
    let mut layers = Vec::with_capacity(net.depth());
    for (layer, unit) in net.layers().iter().zip(units) {
        match unit {
            None => {
                layers.push(layer.transformed(&eye(dv), dv, &m, 2 * dv, &vec![0.0; dv], 2 * dv, true));
                m = select(dv);
            }
            Some(u) => {
                layers.push(split_layer(layer, &m, u));
                m = merge(dv, u.weight());
            }
        }
    }
    let q = net.projection();
    let du = net.d_u();
    let mut proj = vec![0.0; du * 2 * dv];
    for r in 0..du {
        for k in 0..dv {
            let x = q[r * dv + k];
            if x != 0.0 {
                for j in 0..2 * dv {
                    proj[r * 2 * dv + j] += x * m[k * 2 * dv + j];
                }
            }
        }
    }
    Ok(PsiFno::new(net.grid(), net.d_a(), du, lift, layers, proj, net.activation())?)
}

fn sup_distance(a: &GridField, b: &GridField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Replaces every unactivated layer of `net` by an activated one on twice the lift, so that
/// every layer of the result applies `σ`. The pass-through step of each replaced layer is
/// calibrated against the values seen on `probes`, then tightened until the rewrite matches
/// `net` within `eps` at every grid point of every probe.
pub fn strictify(net: &PsiFno, probes: &[GridField], eps: f64) -> Result<PsiFno, EmulationError> {
    if probes.is_empty() || !(eps > 0.0) {
        return Err(EmulationError::BadParameters("strictify needs probes and a positive eps".into()));
    }
    let mut bounds = vec![0.0f64; net.depth()];
    let mut targets = Vec::with_capacity(probes.len());
    for a in probes {
        let states = net.hidden_states(a)?;
        for (i, layer) in net.layers().iter().enumerate() {
            if !layer.activates() {
                bounds[i] = bounds[i].max(layer.affine_part(&states[i])?.max_abs());
            }
        }
        targets.push(net.forward(a)?);
    }
    let replaced = net.layers().iter().filter(|l| !l.activates()).count().max(1);
    let mut tol = eps / replaced as f64;
    let mut best = f64::INFINITY;
    loop {
        let units = net
            .layers()
            .iter()
            .zip(&bounds)
            .map(|(l, b)| {
                if l.activates() {
                    Ok(None)
                } else {
                    calibrate_pass(net.activation(), 1.5 * b + 1e-12, tol).map(|(u, _)| Some(u))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| EmulationError::CalibrationFailed { what: "strict network", target: eps, best })?;
        let strict = strict_with(net, &units)?;
        let mut err = 0.0f64;
        for (a, want) in probes.iter().zip(&targets) {
            err = err.max(sup_distance(&strict.forward(a)?, want));
        }
        if err <= eps {
            let step = units.iter().flatten().map(|u| u.h).fold(f64::NAN, f64::min);
            let mut strict = strict.with_metadata("strict_probe_error", err);
            for (k, v) in net.metadata() {
                strict.set_metadata(k.clone(), *v);
            }
            if step.is_finite() {
                strict.set_metadata("strict_min_step", step);
            }
            return Ok(strict);
        }
        best = best.min(err);
        tol /= 4.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulation::darcy::tests::band_limited;
    use crate::emulation::{build_ft_emulator, build_nonlinearity_net_darcy, InputBound};
    use crate::fno::{symbol_from_fn, FourierMultiplier, MultiplierEntry};
    use crate::spectral::{derivative, l2_norm};
    use num_complex::Complex64;

    fn unit_l2(g: Grid, seed: u64) -> GridField {
        let v = band_limited(g, seed, 1.0);
        let s = l2_norm(&v);
        v.scaled(1.0 / s)
    }

    #[test]
    fn pass_through_vanishes_at_zero() {
        for act in [Activation::Tanh, Activation::Gelu] {
            let u = PassUnit::new(act, 0.3, LINEAR_EXPANSION_POINT).unwrap();
            assert_eq!(u.pass(0.0), 0.0);
        }
    }

    #[test]
    fn identity_layer_is_reproduced() {
        let g = Grid::new(2, 4).unwrap();
        let spec = AffineApproxSpec::new(FnoLayer::identity(2, 1), g, 1.0, 1e-6, Activation::Tanh);
        let approx = build_affine_approx(&spec).unwrap();
        assert!(approx.layer.activates());
        let net = approx.network(g).unwrap();
        for seed in 0..10 {
            let v = unit_l2(g, seed);
            assert!(sup_distance(&net.forward(&v).unwrap(), &v) <= 1e-6);
        }
    }

    #[test]
    fn derivative_layer_is_reproduced() {
        let (d, n) = (1, 6);
        let g = Grid::new(d, n).unwrap();
        let sym = symbol_from_fn(d, n, |k| Complex64::new(0.0, k[0] as f64));
        let mult = FourierMultiplier::new(d, n, 1, vec![sym], vec![MultiplierEntry { out: 0, inp: 0, symbol: 0, coef: 1.0 }])
            .unwrap();
        let layer = FnoLayer::new(vec![0.0], Bias::Zero, mult, false).unwrap();
        let eps = 1e-5;
        let approx = build_affine_approx(&AffineApproxSpec::new(layer, g, 1.0, eps, Activation::Tanh)).unwrap();
        let net = approx.network(g).unwrap();
        for seed in 0..5 {
            let v = unit_l2(g, seed);
            assert!(sup_distance(&net.forward(&v).unwrap(), &derivative(&v, 0).unwrap()) <= eps);
        }
    }

    #[test]
    fn strict_rewrite_activates_every_layer() {
        let n = 2;
        let net = build_nonlinearity_net_darcy(1, n, InputBound::Sup(2.0), 1e-6, Activation::Tanh).unwrap();
        assert!(net.layers().iter().any(|l| !l.activates()));
        let g = net.grid();
        let probes: Vec<GridField> = (0..4)
            .map(|s| GridField::stack(&[&band_limited(g, 2 * s, 1.0), &band_limited(g, 2 * s + 1, 0.5)]).unwrap())
            .collect();
        let eps = 1e-4;
        let strict = strictify(&net, &probes, eps).unwrap();
        assert!(strict.layers().iter().all(|l| l.activates()));
        assert_eq!(strict.depth(), net.depth());
        assert_eq!(strict.d_v(), 2 * net.d_v());
        let fresh = GridField::stack(&[&band_limited(g, 40, 0.8), &band_limited(g, 41, 0.4)]).unwrap();
        assert!(sup_distance(&strict.forward(&fresh).unwrap(), &net.forward(&fresh).unwrap()) <= 10.0 * eps);
    }

    #[test]
    fn gelu_rewrite_is_exact_up_to_rounding() {
        let net = build_ft_emulator(1, 2, InputBound::Sup(1.0), 1e-3, Activation::Gelu).unwrap();
        let g = net.grid();
        let probes = vec![band_limited(g, 3, 1.0)];
        let strict = strictify(&net, &probes, 1e-10).unwrap();
        assert!(strict.metadata()["strict_probe_error"] <= 1e-10);
    }
}

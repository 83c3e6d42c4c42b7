use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{DenseLayer, DenseNet, EmulationError};
use crate::fno::{Activation, LINEAR_EXPANSION_POINT, QUADRATIC_EXPANSION_POINT};

/// Halving stops below this step.
const MIN_STEP: f64 = 1e-10;
const PRODUCT_PROBES: usize = 101;
const PASS_PROBES: usize = 2001;

/// `sq_h(y) = (σ(x₀+hy) + σ(x₀-hy) - 2σ(x₀)) / (h²σ''(x₀)) ≈ y²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareUnit {
    pub activation: Activation,
    pub h: f64,
    pub x0: f64,
}

impl SquareUnit {
    pub fn new(activation: Activation, h: f64, x0: f64) -> Result<Self, EmulationError> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(EmulationError::BadParameters(format!("step h must lie in (0, 1], got {h}")));
        }
        if activation.d2(x0).abs() < 1e-3 {
            return Err(EmulationError::BadParameters(format!(
                "σ''({x0}) = {:.3e} is too close to zero",
                activation.d2(x0)
            )));
        }
        Ok(SquareUnit { activation, h, x0 })
    }

    /// Coefficient of each `σ(x₀ ± hy)`.
    pub fn weight(&self) -> f64 {
        1.0 / (self.h * self.h * self.activation.d2(self.x0))
    }

    /// Constant term `-2σ(x₀)·weight`.
    pub fn offset(&self) -> f64 {
        -2.0 * self.activation.eval(self.x0) * self.weight()
    }

    pub fn square(&self, y: f64) -> f64 {
        let s = self.activation;
        self.weight() * (s.eval(self.x0 + self.h * y) + s.eval(self.x0 - self.h * y)) + self.offset()
    }

    /// `ab = ((a+b)² - a² - b²)/2` with every square replaced by `sq_h`.
    pub fn product(&self, a: f64, b: f64) -> f64 {
        0.5 * (self.square(a + b) - self.square(a) - self.square(b))
    }

    /// Constant left over when three squares are combined into a product.
    pub fn product_offset(&self) -> f64 {
        -0.5 * self.offset()
    }
}

/// `ψ_h(y) = (σ(x₀+hy) - σ(x₀-hy)) / (2hσ'(x₀)) ≈ y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassUnit {
    pub activation: Activation,
    pub h: f64,
    pub x0: f64,
}

impl PassUnit {
    pub fn new(activation: Activation, h: f64, x0: f64) -> Result<Self, EmulationError> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(EmulationError::BadParameters(format!("step h must lie in (0, 1], got {h}")));
        }
        if activation.d1(x0).abs() < 1e-3 {
            return Err(EmulationError::BadParameters(format!(
                "σ'({x0}) = {:.3e} is too close to zero",
                activation.d1(x0)
            )));
        }
        Ok(PassUnit { activation, h, x0 })
    }

    /// Coefficient `1/(2hσ'(x₀))` of `σ(x₀+hy)`; `σ(x₀-hy)` gets its negative.
    pub fn weight(&self) -> f64 {
        1.0 / (2.0 * self.h * self.activation.d1(self.x0))
    }

    pub fn pass(&self, y: f64) -> f64 {
        let s = self.activation;
        self.weight() * (s.eval(self.x0 + self.h * y) - s.eval(self.x0 - self.h * y))
    }
}

fn probe_points(bound: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| -bound + 2.0 * bound * i as f64 / (count - 1) as f64)
        .collect()
}

/// Halve `h` from `h0` until `error(h) ≤ target`.
pub(crate) fn halve_until<U>(
    what: &'static str,
    h0: f64,
    target: f64,
    make: impl Fn(f64) -> Result<U, EmulationError>,
    error: impl Fn(&U) -> f64,
) -> Result<(U, f64), EmulationError> {
    if !(target > 0.0) {
        return Err(EmulationError::BadParameters(format!("accuracy must be positive, got {target}")));
    }
    let mut h = h0;
    let mut best = f64::INFINITY;
    while h >= MIN_STEP {
        let unit = make(h)?;
        let err = error(&unit);
        if err <= target {
            return Ok((unit, err));
        }
        best = best.min(err);
        h /= 2.0;
    }
    Err(EmulationError::CalibrationFailed { what, target, best })
}

/// Largest `|sq_h`-product error on a uniform probe of `[-B, B]²`.
pub fn product_error(unit: &SquareUnit, bound: f64) -> f64 {
    let pts = probe_points(bound, PRODUCT_PROBES);
    let mut worst = 0.0f64;
    for &a in &pts {
        for &b in &pts {
            worst = worst.max((unit.product(a, b) - a * b).abs());
        }
    }
    worst
}

/// Largest `|ψ_h(y) - y|` on a uniform probe of `[-B, B]`.
pub fn pass_error(unit: &PassUnit, bound: f64) -> f64 {
    probe_points(bound, PASS_PROBES)
        .iter()
        .map(|&y| (unit.pass(y) - y).abs())
        .fold(0.0, f64::max)
}

/// Square unit whose products are `eps`-accurate on `[-B, B]²`.
pub fn calibrate_square(activation: Activation, bound: f64, eps: f64) -> Result<(SquareUnit, f64), EmulationError> {
    halve_until(
        "product",
        1.0,
        eps,
        |h| SquareUnit::new(activation, h, QUADRATIC_EXPANSION_POINT),
        |u| product_error(u, bound),
    )
}

/// Pass-through unit that is `eps`-accurate on `[-B, B]`.
pub fn calibrate_pass(activation: Activation, bound: f64, eps: f64) -> Result<(PassUnit, f64), EmulationError> {
    halve_until(
        "pass-through",
        1.0,
        eps,
        |h| PassUnit::new(activation, h, LINEAR_EXPANSION_POINT),
        |u| pass_error(u, bound),
    )
}

/// Target accuracy and input range for a two-input product network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductNetSpec {
    /// Inputs satisfy `|a|, |b| ≤ bound`.
    pub bound: f64,
    pub eps: f64,
    /// Initial step; calibration only ever halves it.
    pub h: f64,
    pub x0: f64,
}

impl ProductNetSpec {
    pub fn new(bound: f64, eps: f64) -> Self {
        ProductNetSpec {
            bound,
            eps,
            h: 1.0,
            x0: QUADRATIC_EXPANSION_POINT,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductNet {
    pub net: DenseNet,
    pub unit: SquareUnit,
    /// Largest error seen on the calibration probe.
    pub probe_error: f64,
}

/// Two-input network `(a, b) ↦ ≈ab`: one hidden layer of six neurons, then a linear readout.
pub fn build_product_net(spec: ProductNetSpec, activation: Activation) -> Result<ProductNet, EmulationError> {
    if !(spec.bound >= 0.0 && spec.bound.is_finite()) {
        return Err(EmulationError::BadParameters(format!("bad input bound {}", spec.bound)));
    }
    let (unit, probe_error) = halve_until(
        "product",
        spec.h,
        spec.eps,
        |h| SquareUnit::new(activation, h, spec.x0),
        |u| product_error(u, spec.bound),
    )?;
    let (h, x0, c) = (unit.h, unit.x0, 0.5 * unit.weight());
    // neurons: σ(x₀ ± h(a+b)), σ(x₀ ± ha), σ(x₀ ± hb)
    let hidden = DenseLayer {
        rows: 6,
        cols: 2,
        weight: vec![h, h, -h, -h, h, 0.0, -h, 0.0, 0.0, h, 0.0, -h],
        bias: vec![x0; 6],
        activate: true,
    };
    let readout = DenseLayer {
        rows: 1,
        cols: 6,
        weight: vec![c, c, -c, -c, -c, -c],
        bias: vec![unit.product_offset()],
        activate: false,
    };
    Ok(ProductNet {
        net: DenseNet {
            layers: vec![hidden, readout],
            activation,
        },
        unit,
        probe_error,
    })
}

/// Bound on a field, either through its `L²` norm or directly on its grid values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum InputBound {
    L2(f64),
    /// Bound on every grid value, and on every grid value of first derivatives where those
    /// enter a product.
    Sup(f64),
}

fn mode_count(d: usize, n: usize) -> f64 {
    ((2 * n + 1) as f64).powi(d as i32)
}

impl InputBound {
    pub fn value(&self) -> f64 {
        match *self {
            InputBound::L2(b) | InputBound::Sup(b) => b,
        }
    }

    /// `sup|v| ≤ (|K_N|/(2π)^d)^{1/2} ‖v‖_{L²}` for `v` with modes in `K_N`.
    pub fn sup(&self, d: usize, n: usize) -> f64 {
        match *self {
            InputBound::L2(b) => (mode_count(d, n) / (2.0 * PI).powi(d as i32)).sqrt() * b,
            InputBound::Sup(b) => b,
        }
    }

    /// `sup|∂_j v| ≤ (Σ_{K_N} k_j² / (2π)^d)^{1/2} ‖v‖_{L²}`, with `Σ k_j² = |K_N| N(N+1)/3`.
    pub fn derivative_sup(&self, d: usize, n: usize) -> f64 {
        match *self {
            InputBound::L2(b) => {
                let nf = n as f64;
                (mode_count(d, n) * nf * (nf + 1.0) / 3.0 / (2.0 * PI).powi(d as i32)).sqrt() * b
            }
            InputBound::Sup(b) => b,
        }
    }
}

/// `sup|∂_j u| ≤ ((|K_N|-1)/(d(2π)^d))^{1/2} ‖u‖_{Ḣ¹}` for zero-mean `u` with modes in `K_N`.
pub fn gradient_sup_from_h1(d: usize, n: usize, h1: f64) -> f64 {
    ((mode_count(d, n) - 1.0) / (d as f64 * (2.0 * PI).powi(d as i32))).sqrt() * h1
}

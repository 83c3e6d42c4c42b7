//! Three-layer Ψ-FNO blocks: factors (exact F-layer), σ-layer of square and pass-through
//! neurons, exact recombination F-layer.

use num_complex::Complex64;
use std::sync::Arc;

use super::{EmulationError, PassUnit, SquareUnit};
use crate::fno::{symbol_from_fn, Activation, Bias, FnoLayer, FourierMultiplier, MultiplierEntry, PsiFno, Symbol};
use crate::spectral::{Grid, GridField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn k2(k: &[i64]) -> f64 {
    k.iter().map(|x| (x * x) as f64).sum()
}

/// Indicator of `K_N`, optionally without `k = 0`.
pub(crate) fn truncation_symbol(d: usize, n: usize, zero_mean: bool) -> Symbol {
    symbol_from_fn(d, n, |k| if zero_mean && k2(k) == 0.0 { ZERO } else { ONE })
}

/// `i k_axis` on `K_N`.
pub(crate) fn derivative_symbol(d: usize, n: usize, axis: usize) -> Symbol {
    symbol_from_fn(d, n, |k| Complex64::new(0.0, k[axis] as f64))
}

/// `i k_axis / |k|²` on `K_N \ {0}`: one component of `(-Δ)^{-1}∇·`.
pub(crate) fn divergence_solve_symbol(d: usize, n: usize, axis: usize) -> Symbol {
    symbol_from_fn(d, n, |k| {
        let s = k2(k);
        if s == 0.0 {
            ZERO
        } else {
            Complex64::new(0.0, k[axis] as f64 / s)
        }
    })
}

/// Entry `(a, b)` of the Leray projector `δ_ab - k_a k_b/|k|²` on `K_N \ {0}`.
pub(crate) fn leray_symbol(d: usize, n: usize, a: usize, b: usize) -> Symbol {
    symbol_from_fn(d, n, |k| {
        let s = k2(k);
        if s == 0.0 {
            return ZERO;
        }
        let delta = if a == b { 1.0 } else { 0.0 };
        Complex64::new(delta - (k[a] * k[b]) as f64 / s, 0.0)
    })
}

/// `(1 + α|k|²)^{-1}` on `K_N`.
pub(crate) fn helmholtz_symbol(d: usize, n: usize, alpha: f64) -> Symbol {
    symbol_from_fn(d, n, |k| Complex64::new(1.0 / (1.0 + alpha * k2(k)), 0.0))
}

/// `δ₀(k)`: keeps only the mean.
pub(crate) fn mean_symbol(d: usize) -> Symbol {
    symbol_from_fn(d, 0, |_| ONE)
}

fn symbol_width(d: usize, s: &Symbol) -> usize {
    let p = (s.len() as f64).powf(1.0 / d as f64).round() as usize;
    (p - 1) / 2
}

/// Zero-extend a symbol from its width to `to`.
fn widened(d: usize, s: &Symbol, to: usize) -> Symbol {
    let from = symbol_width(d, s);
    if from == to {
        return s.clone();
    }
    let p = 2 * from + 1;
    symbol_from_fn(d, to, |k| {
        if k.iter().any(|x| x.unsigned_abs() as usize > from) {
            return ZERO;
        }
        let lex = k.iter().fold(0usize, |acc, &x| acc * p + (x + from as i64) as usize);
        s[lex]
    })
}

fn at_zero(s: &Symbol) -> f64 {
    s[(s.len() - 1) / 2].re
}

/// Collects symbols for one layer, sharing identical `Arc`s.
struct SymbolTable {
    d: usize,
    symbols: Vec<Symbol>,
    entries: Vec<MultiplierEntry>,
}

impl SymbolTable {
    fn new(d: usize) -> Self {
        SymbolTable {
            d,
            symbols: Vec::new(),
            entries: Vec::new(),
        }
    }

    fn push(&mut self, out: usize, inp: usize, symbol: &Symbol, coef: f64) {
        let id = match self.symbols.iter().position(|s| Arc::ptr_eq(s, symbol)) {
            Some(i) => i,
            None => {
                self.symbols.push(symbol.clone());
                self.symbols.len() - 1
            }
        };
        self.entries.push(MultiplierEntry {
            out,
            inp,
            symbol: id,
            coef,
        });
    }

    fn finish(self, dim: usize) -> Result<FourierMultiplier, EmulationError> {
        if self.entries.is_empty() {
            return Ok(FourierMultiplier::zero(self.d, dim));
        }
        let width = self.symbols.iter().map(|s| symbol_width(self.d, s)).max().unwrap_or(0);
        let symbols = self.symbols.iter().map(|s| widened(self.d, s, width)).collect();
        Ok(FourierMultiplier::new(self.d, width, dim, symbols, self.entries)?)
    }
}

/// A factor or carried quantity formed by the first layer.
#[derive(Clone, Debug)]
pub(crate) enum Factor {
    Channel(usize),
    Filtered { channel: usize, symbol: Symbol },
    /// Fixed field on the block grid.
    Field(Arc<Vec<f64>>),
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Source {
    /// Index into the product list.
    Product(usize),
    /// Index into the carry list.
    Carry(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct Term {
    pub source: Source,
    pub symbol: Option<Symbol>,
    pub coef: f64,
}

impl Term {
    pub fn local(source: Source, coef: f64) -> Self {
        Term {
            source,
            symbol: None,
            coef,
        }
    }

    pub fn filtered(source: Source, symbol: &Symbol, coef: f64) -> Self {
        Term {
            source,
            symbol: Some(symbol.clone()),
            coef,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Output {
    pub terms: Vec<Term>,
    pub bias: Option<Arc<Vec<f64>>>,
}

impl Output {
    pub fn new(terms: Vec<Term>) -> Self {
        Output { terms, bias: None }
    }
}

/// `input → factors → σ(products, carries) → outputs`.
#[derive(Clone, Debug)]
pub(crate) struct BlockPlan {
    pub grid: Grid,
    pub inputs: usize,
    pub factors: Vec<Factor>,
    /// Pairs of factor indices.
    pub products: Vec<(usize, usize)>,
    /// Factor indices passed through the σ-layer.
    pub carries: Vec<usize>,
    pub outputs: Vec<Output>,
    /// Exact rescaling of each factor before the σ-layer, undone in the recombination; lets
    /// factors with very different bounds share one square unit. Empty means all ones.
    pub scales: Vec<f64>,
}

impl BlockPlan {
    fn scale(&self, f: usize) -> f64 {
        self.scales.get(f).copied().unwrap_or(1.0)
    }

    fn neurons(&self) -> usize {
        6 * self.products.len() + 2 * self.carries.len()
    }

    pub fn dim(&self) -> usize {
        self.inputs.max(self.factors.len()).max(self.neurons()).max(self.outputs.len())
    }

    pub fn build(&self, square: SquareUnit, pass: PassUnit, activation: Activation) -> Result<PsiFno, EmulationError> {
        let g = self.grid;
        let d = g.d();
        let dim = self.dim();
        let n = g.len();

        let mut w = vec![0.0; dim * dim];
        let mut table = SymbolTable::new(d);
        let mut bias_vals: Option<Vec<f64>> = None;
        for (f, factor) in self.factors.iter().enumerate() {
            let s = self.scale(f);
            match factor {
                Factor::Channel(c) => w[f * dim + c] = s,
                Factor::Filtered { channel, symbol } => table.push(f, *channel, symbol, s),
                Factor::Field(vals) => {
                    let b = bias_vals.get_or_insert_with(|| vec![0.0; dim * n]);
                    for (y, v) in b[f * n..(f + 1) * n].iter_mut().zip(vals.iter()) {
                        *y = s * v;
                    }
                }
            }
        }
        let bias = match bias_vals {
            Some(v) => Bias::Field(Arc::new(GridField::new(g, dim, v)?)),
            None => Bias::Zero,
        };
        let factors = FnoLayer::new(w, bias, table.finish(dim)?, false)?;

        let mut w = vec![0.0; dim * dim];
        let mut b = vec![0.0; dim];
        let h = square.h;
        for (p, &(fa, fb)) in self.products.iter().enumerate() {
            let rows = [(fa, Some(fb)), (fa, None), (fb, None)];
            for (j, (x, y)) in rows.into_iter().enumerate() {
                for (sign, r) in [(1.0, 6 * p + 2 * j), (-1.0, 6 * p + 2 * j + 1)] {
                    w[r * dim + x] += sign * h;
                    if let Some(y) = y {
                        w[r * dim + y] += sign * h;
                    }
                    b[r] = square.x0;
                }
            }
        }
        let base = 6 * self.products.len();
        for (c, &f) in self.carries.iter().enumerate() {
            for (sign, r) in [(1.0, base + 2 * c), (-1.0, base + 2 * c + 1)] {
                w[r * dim + f] = sign * pass.h;
                b[r] = pass.x0;
            }
        }
        let sigma = FnoLayer::local(d, dim, w, Bias::Constant(b), true)?;

        let mut w = vec![0.0; dim * dim];
        let mut table = SymbolTable::new(d);
        let mut constants = vec![0.0; dim];
        let mut fields: Option<Vec<f64>> = None;
        let half = 0.5 * square.weight();
        let product_coefs = [half, half, -half, -half, -half, -half];
        let pw = pass.weight();
        for (o, out) in self.outputs.iter().enumerate() {
            for t in &out.terms {
                let (neurons, constant, unscale): (Vec<(usize, f64)>, f64, f64) = match t.source {
                    Source::Product(p) => {
                        let (fa, fb) = self.products[p];
                        (
                            (0..6).map(|j| (6 * p + j, product_coefs[j])).collect(),
                            square.product_offset(),
                            1.0 / (self.scale(fa) * self.scale(fb)),
                        )
                    }
                    Source::Carry(c) => (
                        vec![(base + 2 * c, pw), (base + 2 * c + 1, -pw)],
                        0.0,
                        1.0 / self.scale(self.carries[c]),
                    ),
                };
                let coef = t.coef * unscale;
                match &t.symbol {
                    None => {
                        for (r, c) in neurons {
                            w[o * dim + r] += coef * c;
                        }
                        constants[o] += coef * constant;
                    }
                    Some(s) => {
                        for (r, c) in neurons {
                            table.push(o, r, s, coef * c);
                        }
                        constants[o] += coef * constant * at_zero(s);
                    }
                }
            }
            if let Some(vals) = &out.bias {
                let f = fields.get_or_insert_with(|| vec![0.0; dim * n]);
                f[o * n..(o + 1) * n].copy_from_slice(vals);
            }
        }
        let bias = match fields {
            Some(mut f) => {
                for (o, c) in constants.iter().enumerate() {
                    f[o * n..(o + 1) * n].iter_mut().for_each(|y| *y += c);
                }
                Bias::Field(Arc::new(GridField::new(g, dim, f)?))
            }
            None => Bias::Constant(constants),
        };
        let combine = FnoLayer::new(w, bias, table.finish(dim)?, false)?;

        let mut lift = vec![0.0; dim * self.inputs];
        for i in 0..self.inputs {
            lift[i * self.inputs + i] = 1.0;
        }
        let outs = self.outputs.len();
        let mut proj = vec![0.0; outs * dim];
        for o in 0..outs {
            proj[o * dim + o] = 1.0;
        }
        let net = PsiFno::new(g, self.inputs, outs, lift, vec![factors, sigma, combine], proj, activation)?;
        Ok(net
            .with_metadata("square_h", square.h)
            .with_metadata("pass_h", pass.h))
    }
}

/// Single-layer network `v ↦ W v + b + K v` (no activation) with identity lifting and projection.
pub(crate) fn linear_net(
    grid: Grid,
    channels: usize,
    w: Vec<f64>,
    bias: Bias,
    multiplier: FourierMultiplier,
    activation: Activation,
) -> Result<PsiFno, EmulationError> {
    let layer = FnoLayer::new(w, bias, multiplier, false)?;
    let mut eye = vec![0.0; channels * channels];
    for i in 0..channels {
        eye[i * channels + i] = 1.0;
    }
    Ok(PsiFno::new(grid, channels, channels, eye.clone(), vec![layer], eye, activation)?)
}

/// Multiplier built from `(out, inp, symbol, coef)` tuples.
pub(crate) fn multiplier_from(
    d: usize,
    dim: usize,
    terms: &[(usize, usize, &Symbol, f64)],
) -> Result<FourierMultiplier, EmulationError> {
    let mut table = SymbolTable::new(d);
    for &(o, i, s, c) in terms {
        table.push(o, i, s, c);
    }
    table.finish(dim)
}

/// Zero-layer network applying the `rows×cols` matrix `m`.
pub(crate) fn matrix_net(grid: Grid, rows: usize, cols: usize, m: Vec<f64>, activation: Activation) -> Result<PsiFno, EmulationError> {
    let mut eye = vec![0.0; cols * cols];
    for i in 0..cols {
        eye[i * cols + i] = 1.0;
    }
    Ok(PsiFno::new(grid, cols, rows, eye, Vec::new(), m, activation)?)
}

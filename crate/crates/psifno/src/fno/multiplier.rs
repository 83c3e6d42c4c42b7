use num_complex::Complex64;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::FnoError;
use crate::spectral::{transform, Grid, GridField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Scalar symbol sampled on `K_W` in lexicographic order.
pub type Symbol = Arc<[Complex64]>;

/// Every `k ∈ K_W` (`|k|_∞ ≤ W`) in lexicographic order.
pub(crate) fn lex_modes(d: usize, width: usize) -> Vec<Vec<i64>> {
    let p = 2 * width + 1;
    let len = p.pow(d as u32);
    (0..len)
        .map(|flat| {
            let mut k = vec![0i64; d];
            let mut f = flat;
            for a in (0..d).rev() {
                k[a] = (f % p) as i64 - width as i64;
                f /= p;
            }
            k
        })
        .collect()
}

/// Sample `m(k)` on `K_W` (lexicographic order over `{-W..W}^d`).
pub fn symbol_from_fn(d: usize, width: usize, m: impl Fn(&[i64]) -> Complex64) -> Symbol {
    lex_modes(d, width).iter().map(|k| m(k)).collect()
}

/// One term `coef * symbol(k)` of the matrix entry `P(k)[out][inp]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierEntry {
    pub out: usize,
    pub inp: usize,
    pub symbol: usize,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct Group {
    out: usize,
    symbol: usize,
    inputs: Vec<(usize, f64)>,
}

/// Fourier multiplier `P(k)`, a `dim×dim` complex matrix per `k ∈ K_W`, zero outside.
///
/// Stored sparsely: `P(k)[o][i] = Σ coef · symbol(k)` over entries with that `(o, i)`.
/// Symbols are shared, so a truncation or derivative applied to many channels is
/// stored once. Every symbol must satisfy `s(-k) = conj(s(k))`, which together with
/// real coefficients makes the layer map real fields to real fields.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierMultiplier {
    d: usize,
    width: usize,
    dim: usize,
    symbols: Vec<Symbol>,
    entries: Vec<MultiplierEntry>,
    groups: Vec<Group>,
}

impl FourierMultiplier {
    pub fn new(
        d: usize,
        width: usize,
        dim: usize,
        symbols: Vec<Symbol>,
        entries: Vec<MultiplierEntry>,
    ) -> Result<Self, FnoError> {
        let len = (2 * width + 1).pow(d as u32);
        for (i, s) in symbols.iter().enumerate() {
            if s.len() != len {
                return Err(FnoError::Dimension(format!(
                    "symbol {i} has {} modes, width {width} needs {len}",
                    s.len()
                )));
            }
            let scale = s.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            let defect = (0..len)
                .map(|p| (s[len - 1 - p] - s[p].conj()).norm())
                .fold(0.0f64, f64::max);
            if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(FnoError::NotConjugateSymmetric { symbol: i, defect });
            }
            if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(FnoError::NonFinite);
            }
        }
        for e in &entries {
            if e.out >= dim || e.inp >= dim || e.symbol >= symbols.len() {
                return Err(FnoError::Dimension(format!(
                    "multiplier entry {e:?} out of range (dim {dim}, {} symbols)",
                    symbols.len()
                )));
            }
            if !e.coef.is_finite() {
                return Err(FnoError::NonFinite);
            }
        }
        let groups = build_groups(&entries);
        Ok(FourierMultiplier {
            d,
            width,
            dim,
            symbols,
            entries,
            groups,
        })
    }

    pub fn zero(d: usize, dim: usize) -> Self {
        FourierMultiplier {
            d,
            width: 0,
            dim,
            symbols: Vec::new(),
            entries: Vec::new(),
            groups: Vec::new(),
        }
    }

    /// Dense constructor: `m(k)` returns the row-major `dim×dim` matrix `P(k)`.
    pub fn from_dense(
        d: usize,
        width: usize,
        dim: usize,
        m: impl Fn(&[i64]) -> Vec<Complex64>,
    ) -> Result<Self, FnoError> {
        let mats: Vec<Vec<Complex64>> = lex_modes(d, width).iter().map(|k| m(k)).collect();
        let mut symbols = Vec::new();
        let mut entries = Vec::new();
        for o in 0..dim {
            for i in 0..dim {
                let s: Vec<Complex64> = mats.iter().map(|p| p[o * dim + i]).collect();
                if s.iter().any(|z| *z != ZERO) {
                    entries.push(MultiplierEntry {
                        out: o,
                        inp: i,
                        symbol: symbols.len(),
                        coef: 1.0,
                    });
                    symbols.push(s.into());
                }
            }
        }
        FourierMultiplier::new(d, width, dim, symbols, entries)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn entries(&self) -> &[MultiplierEntry] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense `P(k)` (row-major), zero for `k ∉ K_W`.
    pub fn matrix_at(&self, k: &[i64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim * self.dim];
        let w = self.width as i64;
        if k.iter().any(|x| x.abs() > w) {
            return out;
        }
        let p = 2 * w + 1;
        let lex = k.iter().fold(0i64, |acc, &x| acc * p + x + w) as usize;
        for e in &self.entries {
            out[e.out * self.dim + e.inp] += self.symbols[e.symbol][lex] * e.coef;
        }
        out
    }

    /// Same entries acting on a wider channel space.
    pub(crate) fn padded(&self, dim: usize) -> Self {
        debug_assert!(dim >= self.dim);
        let mut out = self.clone();
        out.dim = dim;
        out
    }

    /// `P(k) · M` for a real `dim×dim` matrix `M` (row-major).
    pub(crate) fn right_multiply(&self, m: &[f64]) -> Self {
        let dim = self.dim;
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        self.sandwiched(&eye, dim, m, dim, dim)
    }

    /// `L · P(k) · R` for real `L` (`rows×dim`) and `R` (`dim×cols`), acting on `out_dim` channels.
    pub(crate) fn sandwiched(&self, left: &[f64], rows: usize, right: &[f64], cols: usize, out_dim: usize) -> Self {
        let dim = self.dim;
        debug_assert!(rows <= out_dim && cols <= out_dim);
        let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for e in &self.entries {
            for r in 0..rows {
                let l = left[r * dim + e.out];
                if l == 0.0 {
                    continue;
                }
                for j in 0..cols {
                    let m = right[e.inp * cols + j];
                    if m != 0.0 {
                        *acc.entry((r, j, e.symbol)).or_insert(0.0) += l * e.coef * m;
                    }
                }
            }
        }
        let entries: Vec<MultiplierEntry> = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((out, inp, symbol), coef)| MultiplierEntry {
                out,
                inp,
                symbol,
                coef,
            })
            .collect();
        let groups = build_groups(&entries);
        FourierMultiplier {
            d: self.d,
            width: self.width,
            dim: out_dim,
            symbols: self.symbols.clone(),
            entries,
            groups,
        }
    }

    /// `F^{-1}(P · F v)` on the grid of `v`, accumulated into `out` (channel-major, `dim` channels).
    pub(crate) fn apply_into(&self, v: &GridField, out: &mut [f64]) {
        if self.entries.is_empty() {
            return;
        }
        let spec = self.apply_spectral(v);
        let g = v.grid();
        let n = g.len();
        for (o, buf) in spec.into_iter().enumerate() {
            if let Some(mut buf) = buf {
                transform(&mut buf, g, true);
                for (dst, z) in out[o * n..(o + 1) * n].iter_mut().zip(&buf) {
                    *dst += z.re;
                }
            }
        }
    }

    /// Full complex result, for checking the imaginary residue.
    pub fn apply_complex(&self, v: &GridField) -> Vec<Vec<Complex64>> {
        let g = v.grid();
        self.apply_spectral(v)
            .into_iter()
            .map(|buf| match buf {
                Some(mut b) => {
                    transform(&mut b, g, true);
                    b
                }
                None => vec![ZERO; g.len()],
            })
            .collect()
    }

    fn apply_spectral(&self, v: &GridField) -> Vec<Option<Vec<Complex64>>> {
        let g = v.grid();
        let n = g.len();
        let scale = 1.0 / n as f64;
        let index = lex_to_grid(g, self.width);
        let mut cache: HashMap<usize, Vec<Complex64>> = HashMap::new();
        let mut out: Vec<Option<Vec<Complex64>>> = vec![None; self.dim];
        let forward = |vals: Vec<Complex64>| {
            let mut b = vals;
            transform(&mut b, g, false);
            for z in &mut b {
                *z *= scale;
            }
            b
        };
        for grp in &self.groups {
            let sym = &self.symbols[grp.symbol];
            let (spec, coef): (&[Complex64], f64) = if grp.inputs.len() == 1 {
                let (i, c) = grp.inputs[0];
                let s = cache
                    .entry(i)
                    .or_insert_with(|| {
                        forward(v.channel(i).iter().map(|&x| Complex64::new(x, 0.0)).collect())
                    });
                (s.as_slice(), c)
            } else {
                let mut comb = vec![0.0; n];
                for &(i, c) in &grp.inputs {
                    for (dst, x) in comb.iter_mut().zip(v.channel(i)) {
                        *dst += c * x;
                    }
                }
                let s = forward(comb.into_iter().map(|x| Complex64::new(x, 0.0)).collect());
                cache.insert(usize::MAX - grp.out, s);
                (cache[&(usize::MAX - grp.out)].as_slice(), 1.0)
            };
            let dst = out[grp.out].get_or_insert_with(|| vec![ZERO; n]);
            for (p, &gi) in index.iter().enumerate() {
                dst[gi] += sym[p] * spec[gi] * coef;
            }
        }
        out
    }
}

fn build_groups(entries: &[MultiplierEntry]) -> Vec<Group> {
    let mut map: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for e in entries {
        map.entry((e.out, e.symbol)).or_default().push((e.inp, e.coef));
    }
    map.into_iter()
        .map(|((out, symbol), inputs)| Group {
            out,
            symbol,
            inputs,
        })
        .collect()
}

/// Grid FFT slot for each lexicographic position of `K_W`.
fn lex_to_grid(g: Grid, width: usize) -> Vec<usize> {
    lex_modes(g.d(), width)
        .iter()
        .map(|k| g.mode_index(k).expect("multiplier width within grid radius"))
        .collect()
}

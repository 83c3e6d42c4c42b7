use std::sync::Arc;

use super::{Activation, FnoError, FourierMultiplier};
use crate::spectral::{Grid, GridField};

/// Additive term `b(x)` of a layer.
#[derive(Clone, Debug, PartialEq)]
pub enum Bias {
    Zero,
    /// Same vector at every grid point.
    Constant(Vec<f64>),
    Field(Arc<GridField>),
}

impl Bias {
    fn padded(&self, dim: usize) -> Bias {
        match self {
            Bias::Zero => Bias::Zero,
            Bias::Constant(b) => {
                let mut b = b.clone();
                b.resize(dim, 0.0);
                Bias::Constant(b)
            }
            Bias::Field(f) => {
                if f.channels() == dim {
                    return Bias::Field(f.clone());
                }
                let mut vals = f.values().to_vec();
                vals.resize(dim * f.grid().len(), 0.0);
                Bias::Field(Arc::new(GridField::from_parts(f.grid(), dim, vals)))
            }
        }
    }
}

/// `v ↦ σ(W v + b + F^{-1}(P · F v))`; `σ` is skipped when `activate` is false.
#[derive(Clone, Debug, PartialEq)]
pub struct FnoLayer {
    dim: usize,
    w: Vec<f64>,
    bias: Bias,
    multiplier: FourierMultiplier,
    activate: bool,
}

impl FnoLayer {
    /// `w` is row-major `dim×dim`.
    pub fn new(
        w: Vec<f64>,
        bias: Bias,
        multiplier: FourierMultiplier,
        activate: bool,
    ) -> Result<Self, FnoError> {
        let dim = multiplier.dim();
        if w.len() != dim * dim {
            return Err(FnoError::Dimension(format!(
                "weight matrix has {} entries, lift {dim} needs {}",
                w.len(),
                dim * dim
            )));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(FnoError::NonFinite);
        }
        match &bias {
            Bias::Zero => {}
            Bias::Constant(b) => {
                if b.len() != dim {
                    return Err(FnoError::Dimension(format!(
                        "bias has {} channels, expected {dim}",
                        b.len()
                    )));
                }
                if b.iter().any(|x| !x.is_finite()) {
                    return Err(FnoError::NonFinite);
                }
            }
            Bias::Field(f) => {
                if f.channels() != dim {
                    return Err(FnoError::Dimension(format!(
                        "bias field has {} channels, expected {dim}",
                        f.channels()
                    )));
                }
            }
        }
        Ok(FnoLayer {
            dim,
            w,
            bias,
            multiplier,
            activate,
        })
    }

    /// Pointwise affine layer (no multiplier).
    pub fn local(d: usize, dim: usize, w: Vec<f64>, bias: Bias, activate: bool) -> Result<Self, FnoError> {
        FnoLayer::new(w, bias, FourierMultiplier::zero(d, dim), activate)
    }

    pub fn identity(d: usize, dim: usize) -> Self {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 1.0;
        }
        FnoLayer::local(d, dim, w, Bias::Zero, false).expect("identity layer")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> &Bias {
        &self.bias
    }

    pub fn multiplier(&self) -> &FourierMultiplier {
        &self.multiplier
    }

    pub fn activates(&self) -> bool {
        self.activate
    }

    pub(crate) fn check_grid(&self, g: Grid) -> Result<(), FnoError> {
        if self.multiplier.d() != g.d() {
            return Err(FnoError::Dimension(format!(
                "multiplier is {}-dimensional, grid is {}-dimensional",
                self.multiplier.d(),
                g.d()
            )));
        }
        if self.multiplier.width() > g.n() && !self.multiplier.is_zero() {
            return Err(FnoError::Dimension(format!(
                "multiplier width {} exceeds grid radius {}",
                self.multiplier.width(),
                g.n()
            )));
        }
        if let Bias::Field(f) = &self.bias {
            if f.grid() != g {
                return Err(FnoError::Dimension("bias field lives on another grid".into()));
            }
        }
        Ok(())
    }

    /// Pre-activation `W v + b + F^{-1}(P · F v)`.
    pub fn affine_part(&self, v: &GridField) -> Result<GridField, FnoError> {
        if v.channels() != self.dim {
            return Err(FnoError::Dimension(format!(
                "layer expects {} channels, input has {}",
                self.dim,
                v.channels()
            )));
        }
        let g = v.grid();
        self.check_grid(g)?;
        let n = g.len();
        let mut out = vec![0.0; self.dim * n];
        for o in 0..self.dim {
            let dst = &mut out[o * n..(o + 1) * n];
            for i in 0..self.dim {
                let wij = self.w[o * self.dim + i];
                if wij != 0.0 {
                    for (y, x) in dst.iter_mut().zip(v.channel(i)) {
                        *y += wij * x;
                    }
                }
            }
            match &self.bias {
                Bias::Zero => {}
                Bias::Constant(b) => {
                    if b[o] != 0.0 {
                        dst.iter_mut().for_each(|y| *y += b[o]);
                    }
                }
                Bias::Field(f) => {
                    for (y, x) in dst.iter_mut().zip(f.channel(o)) {
                        *y += x;
                    }
                }
            }
        }
        self.multiplier.apply_into(v, &mut out);
        Ok(GridField::from_parts(g, self.dim, out))
    }

    pub fn forward(&self, v: &GridField, act: Activation) -> Result<GridField, FnoError> {
        let mut out = self.affine_part(v)?;
        if self.activate {
            act.apply_in_place(out.values_mut());
        }
        Ok(out)
    }

    /// Embed into `dim ≥ self.dim` channels; extra channels map to zero.
    pub(crate) fn padded(&self, dim: usize) -> FnoLayer {
        let old = self.dim;
        let mut w = vec![0.0; dim * dim];
        for o in 0..old {
            w[o * dim..o * dim + old].copy_from_slice(&self.w[o * old..(o + 1) * old]);
        }
        FnoLayer {
            dim,
            w,
            bias: self.bias.padded(dim),
            multiplier: self.multiplier.padded(dim),
            activate: self.activate,
        }
    }

    /// Same layer acting on `M v` instead of `v` (`M` is `dim×dim`, row-major).
    pub(crate) fn precomposed(&self, m: &[f64]) -> FnoLayer {
        let dim = self.dim;
        let mut w = vec![0.0; dim * dim];
        for o in 0..dim {
            for k in 0..dim {
                let wok = self.w[o * dim + k];
                if wok != 0.0 {
                    for j in 0..dim {
                        w[o * dim + j] += wok * m[k * dim + j];
                    }
                }
            }
        }
        FnoLayer {
            dim,
            w,
            bias: self.bias.clone(),
            multiplier: self.multiplier.right_multiply(m),
            activate: self.activate,
        }
    }
}

impl FnoLayer {
    /// The layer `v ↦ σ?(L(Wv + b + Kv)·R + c)` on `out_dim` channels: `L` is `rows×dim`,
    /// `R` is `dim×cols`, `c` a constant added to the first `rows` outputs.
    pub(crate) fn transformed(
        &self,
        left: &[f64],
        rows: usize,
        right: &[f64],
        cols: usize,
        shift: &[f64],
        out_dim: usize,
        activate: bool,
    ) -> FnoLayer {
        let dim = self.dim;
        let mut lw = vec![0.0; rows * dim];
        for r in 0..rows {
            for o in 0..dim {
                let l = left[r * dim + o];
                if l != 0.0 {
                    for i in 0..dim {
                        lw[r * dim + i] += l * self.w[o * dim + i];
                    }
                }
            }
        }
        let mut w = vec![0.0; out_dim * out_dim];
        for r in 0..rows {
            for i in 0..dim {
                let x = lw[r * dim + i];
                if x != 0.0 {
                    for j in 0..cols {
                        w[r * out_dim + j] += x * right[i * cols + j];
                    }
                }
            }
        }
        let mix = |b: &[f64], r: usize| (0..dim).map(|o| left[r * dim + o] * b[o]).sum::<f64>();
        let bias = match &self.bias {
            Bias::Zero if shift.iter().all(|c| *c == 0.0) => Bias::Zero,
            Bias::Zero => {
                let mut b = shift.to_vec();
                b.resize(out_dim, 0.0);
                Bias::Constant(b)
            }
            Bias::Constant(b) => {
                let mut out: Vec<f64> = (0..rows).map(|r| mix(b, r) + shift[r]).collect();
                out.resize(out_dim, 0.0);
                Bias::Constant(out)
            }
            Bias::Field(f) => {
                let n = f.grid().len();
                let mut vals = vec![0.0; out_dim * n];
                for r in 0..rows {
                    let dst = &mut vals[r * n..(r + 1) * n];
                    dst.iter_mut().for_each(|y| *y = shift[r]);
                    for o in 0..dim {
                        let l = left[r * dim + o];
                        if l != 0.0 {
                            for (y, x) in dst.iter_mut().zip(f.channel(o)) {
                                *y += l * x;
                            }
                        }
                    }
                }
                Bias::Field(Arc::new(GridField::from_parts(f.grid(), out_dim, vals)))
            }
        };
        FnoLayer {
            dim: out_dim,
            w,
            bias,
            multiplier: self.multiplier.sandwiched(left, rows, right, cols, out_dim),
            activate,
        }
    }
}

/// One layer applied to `v` on its own grid.
pub fn layer_forward(layer: &FnoLayer, v: &GridField, act: Activation) -> Result<GridField, FnoError> {
    layer.forward(v, act)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fno::{symbol_from_fn, MultiplierEntry};
    use crate::spectral::derivative;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// `O(|J|²)` evaluation of `W v + b + F^{-1}(P F v)` straight from the definitions.
    fn naive_affine(layer: &FnoLayer, v: &GridField) -> Vec<f64> {
        let g = v.grid();
        let n = g.len();
        let dim = layer.dim();
        let d = g.d();
        let pts = g.points();
        let w = layer.multiplier().width() as i64;
        let p = 2 * w + 1;
        let nk = (p as usize).pow(d as u32);
        let mut ks = vec![vec![0i64; d]; nk];
        for (flat, k) in ks.iter_mut().enumerate() {
            let mut f = flat as i64;
            for a in (0..d).rev() {
                k[a] = f % p - w;
                f /= p;
            }
        }
        // v̂_k per channel
        let hat: Vec<Vec<Complex64>> = (0..dim)
            .map(|c| {
                ks.iter()
                    .map(|k| {
                        let mut s = Complex64::new(0.0, 0.0);
                        for j in 0..n {
                            let kx: f64 = (0..d).map(|a| k[a] as f64 * pts[j * d + a]).sum();
                            s += v.channel(c)[j] * Complex64::from_polar(1.0, -kx);
                        }
                        s / n as f64
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; dim * n];
        for j in 0..n {
            let x = &pts[j * d..(j + 1) * d];
            for o in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (ki, k) in ks.iter().enumerate() {
                    let pk = layer.multiplier().matrix_at(k);
                    let kx: f64 = (0..d).map(|a| k[a] as f64 * x[a]).sum();
                    let e = Complex64::from_polar(1.0, kx);
                    for i in 0..dim {
                        acc += pk[o * dim + i] * hat[i][ki] * e;
                    }
                }
                let mut y = acc.re;
                for i in 0..dim {
                    y += layer.weight()[o * dim + i] * v.channel(i)[j];
                }
                y += match layer.bias() {
                    Bias::Zero => 0.0,
                    Bias::Constant(b) => b[o],
                    Bias::Field(f) => f.channel(o)[j],
                };
                out[o * n + j] = y;
            }
        }
        out
    }

    fn random_layer(rng: &mut ChaCha8Rng, g: Grid, dim: usize, width: usize) -> FnoLayer {
        let d = g.d();
        let p = 2 * width + 1;
        let len = p.pow(d as u32);
        let raw: Vec<Vec<Complex64>> = (0..len)
            .map(|_| {
                (0..dim * dim)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let m = FourierMultiplier::from_dense(d, width, dim, |k| {
            let lex = k.iter().fold(0i64, |acc, &x| acc * p as i64 + x + width as i64) as usize;
            let neg = len - 1 - lex;
            (0..dim * dim)
                .map(|e| (raw[lex][e] + raw[neg][e].conj()) * 0.5)
                .collect()
        })
        .unwrap();
        let w = (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias = GridField::from_fn(g, dim, |x, c| (x[0] + c as f64).sin());
        FnoLayer::new(w, Bias::Field(Arc::new(bias)), m, true).unwrap()
    }

    #[test]
    fn random_layer_matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (d, n, width) in [(1, 6, 4), (2, 3, 2), (3, 1, 1)] {
            let g = Grid::new(d, n).unwrap();
            let layer = random_layer(&mut rng, g, 2, width);
            let v = GridField::from_fn(g, 2, |x, c| {
                x.iter().map(|y| (y + c as f64).cos()).sum::<f64>() + 0.3 * c as f64
            });
            let fast = layer.affine_part(&v).unwrap();
            let slow = naive_affine(&layer, &v);
            for (a, b) in fast.values().iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "d={d}: {a} vs {b}");
            }
            let act = layer.forward(&v, Activation::Tanh).unwrap();
            for (a, b) in act.values().iter().zip(&slow) {
                assert!((a - b.tanh()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn imaginary_residue_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid::new(2, 4).unwrap();
        let layer = random_layer(&mut rng, g, 3, 4);
        let v = GridField::from_fn(g, 3, |x, c| (x[0] * (c + 1) as f64).sin() * x[1].cos());
        let out = layer.multiplier().apply_complex(&v);
        let residue = out.iter().flatten().fold(0.0f64, |m, z| m.max(z.im.abs()));
        assert!(residue < 1e-10, "{residue}");
    }

    #[test]
    fn derivative_layer_is_spectral_derivative() {
        let g = Grid::new(2, 5).unwrap();
        let sym = symbol_from_fn(2, 5, |k| Complex64::new(0.0, k[0] as f64));
        let m = FourierMultiplier::new(
            2,
            5,
            1,
            vec![sym],
            vec![MultiplierEntry { out: 0, inp: 0, symbol: 0, coef: 1.0 }],
        )
        .unwrap();
        let layer = FnoLayer::new(vec![0.0], Bias::Zero, m, false).unwrap();
        let v = GridField::from_fn(g, 1, |x, _| (2.0 * x[0] - x[1]).sin() + (3.0 * x[0]).cos());
        let out = layer.forward(&v, Activation::Tanh).unwrap();
        let want = derivative(&v, 0).unwrap();
        for (a, b) in out.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn local_layer_is_pointwise_activation() {
        let g = Grid::new(1, 3).unwrap();
        let layer = FnoLayer::local(1, 2, vec![1.0, 0.0, 0.0, 1.0], Bias::Constant(vec![0.5, -1.0]), true)
            .unwrap();
        let v = GridField::from_fn(g, 2, |x, c| x[0] / PI - c as f64);
        let out = layer.forward(&v, Activation::Gelu).unwrap();
        for c in 0..2 {
            for (y, x) in out.channel(c).iter().zip(v.channel(c)) {
                let b = if c == 0 { 0.5 } else { -1.0 };
                assert_eq!(*y, Activation::Gelu.eval(x + b));
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let g = Grid::new(1, 2).unwrap();
        let layer = FnoLayer::identity(1, 2);
        assert!(matches!(
            layer.forward(&GridField::zeros(g, 3), Activation::Tanh),
            Err(FnoError::Dimension(_))
        ));
        assert!(FnoLayer::local(1, 2, vec![1.0], Bias::Zero, false).is_err());
        assert!(FnoLayer::local(1, 2, vec![0.0; 4], Bias::Constant(vec![1.0]), false).is_err());
    }
}

use num_complex::Complex64;

use super::field::negation_table;
use super::{fft, Grid, GridField, SpectralCoeffs, SpectralError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Discrete Fourier transform, `c_k = |J_N|^{-1} Σ_j f_j e^{-i⟨x_j,k⟩}`.
pub fn dft(f: &GridField) -> SpectralCoeffs {
    let g = f.grid();
    let data = fft::forward_real(f.values(), f.channels(), g);
    SpectralCoeffs::from_parts(g, f.channels(), data, true)
}

/// Inverse transform `f_j = Σ_k c_k e^{i⟨x_j,k⟩}` returning the real part.
///
/// Fails when the coefficients are not conjugate symmetric to within `1e-10`
/// of their largest entry, since the result would not be a real field.
pub fn idft(c: &SpectralCoeffs) -> Result<GridField, SpectralError> {
    let scale = c.max_abs();
    let defect = c.hermitian_defect();
    if defect > 1e-10 * scale {
        return Err(SpectralError::HermitianViolation { defect, scale });
    }
    Ok(idft_unchecked(c))
}

pub(crate) fn idft_unchecked(c: &SpectralCoeffs) -> GridField {
    let g = c.grid();
    GridField::from_parts(g, c.channels(), fft::inverse_real(c.data(), c.channels(), g))
}

/// Keep modes with `|k|_∞ ≤ m` (and drop `k = 0` when `zero_mean`); the grid is unchanged.
pub fn project(c: &SpectralCoeffs, m: usize, zero_mean: bool) -> Result<SpectralCoeffs, SpectralError> {
    let g = c.grid();
    if m > g.n() {
        return Err(SpectralError::BadTruncation { m, n: g.n() });
    }
    let mut out = c.clone();
    let d = g.d();
    let modes = g.modes();
    for ch in 0..c.channels() {
        let data = out.channel_mut(ch);
        for (i, z) in data.iter_mut().enumerate() {
            let k = &modes[i * d..(i + 1) * d];
            let keep = k.iter().all(|x| x.unsigned_abs() as usize <= m)
                && !(zero_mean && k.iter().all(|&x| x == 0));
            if !keep {
                *z = ZERO;
            }
        }
    }
    Ok(out)
}

/// Move one channel of coefficients between grids of the same dimension.
///
/// Growing zero-pads. Shrinking folds every mode onto its alias, which is what
/// sampling the interpolant on the coarser grid produces.
pub(crate) fn regrid_channel(src: &[Complex64], from: Grid, to: Grid) -> Vec<Complex64> {
    let d = from.d();
    let mut out = vec![ZERO; to.len()];
    if from == to {
        out.copy_from_slice(src);
        return out;
    }
    let pt = to.points_per_axis() as i64;
    let nt = to.n() as i64;
    let mut k = vec![0i64; d];
    let mut kt = vec![0i64; d];
    for (i, z) in src.iter().enumerate() {
        if *z == ZERO {
            continue;
        }
        from.mode(i, &mut k);
        for a in 0..d {
            kt[a] = (k[a] + nt).rem_euclid(pt) - nt;
        }
        let j = to.mode_index(&kt).expect("folded mode inside target grid");
        out[j] += z;
    }
    out
}

impl SpectralCoeffs {
    /// The same trigonometric polynomial seen from resolution `m` (zero-padded or aliased).
    pub fn regrid(&self, m: usize) -> Result<SpectralCoeffs, SpectralError> {
        let from = self.grid();
        let to = from.with_n(m)?;
        let mut data = Vec::with_capacity(to.len() * self.channels());
        for ch in 0..self.channels() {
            data.extend(regrid_channel(self.channel(ch), from, to));
        }
        Ok(SpectralCoeffs::from_parts(to, self.channels(), data, self.is_real()))
    }

    /// Multiply every channel by a scalar symbol `m(k)`.
    pub fn apply_symbol(&self, m: impl Fn(&[i64]) -> Complex64) -> SpectralCoeffs {
        let g = self.grid();
        let d = g.d();
        let modes = g.modes();
        let sym: Vec<Complex64> = modes.chunks(d).map(&m).collect();
        let mut out = self.clone();
        for ch in 0..self.channels() {
            for (z, s) in out.channel_mut(ch).iter_mut().zip(&sym) {
                *z *= s;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> SpectralCoeffs {
        let mut out = self.clone();
        for z in out.data_mut() {
            *z *= s;
        }
        out
    }

    /// `self + s * other` on matching grids and channel counts.
    pub fn axpy(&self, s: f64, other: &SpectralCoeffs) -> Result<SpectralCoeffs, SpectralError> {
        if self.grid() != other.grid() {
            return Err(SpectralError::GridMismatch);
        }
        if self.channels() != other.channels() {
            return Err(SpectralError::ChannelMismatch {
                expected: self.channels(),
                found: other.channels(),
            });
        }
        let data = self
            .data()
            .iter()
            .zip(other.data())
            .map(|(a, b)| a + b * s)
            .collect();
        Ok(SpectralCoeffs::from_parts(
            self.grid(),
            self.channels(),
            data,
            self.is_real() && other.is_real(),
        ))
    }
}

/// Values of the trigonometric interpolant of `f` on the `(2m+1)^d` grid.
pub fn resample(f: &GridField, m: usize) -> Result<GridField, SpectralError> {
    if m == f.grid().n() {
        return Ok(f.clone());
    }
    Ok(idft_unchecked(&dft(f).regrid(m)?))
}

/// Spectral partial derivative along `axis` (multiplier `i k_axis`).
pub fn derivative(f: &GridField, axis: usize) -> Result<GridField, SpectralError> {
    let d = f.grid().d();
    if axis >= d {
        return Err(SpectralError::BadAxis { axis, d });
    }
    Ok(idft_unchecked(
        &dft(f).apply_symbol(|k| Complex64::new(0.0, k[axis] as f64)),
    ))
}

/// Gradient of every channel; output channel `c*d + a` holds `∂_a f_c`.
pub fn gradient(f: &GridField) -> GridField {
    idft_unchecked(&gradient_coeffs(&dft(f)))
}

/// Coefficients of [`gradient`], same channel layout.
pub(crate) fn gradient_coeffs(c: &SpectralCoeffs) -> SpectralCoeffs {
    let g = c.grid();
    let d = g.d();
    let modes = g.modes();
    let mut data = Vec::with_capacity(c.channels() * d * g.len());
    for ch in 0..c.channels() {
        for a in 0..d {
            data.extend(
                c.channel(ch)
                    .iter()
                    .enumerate()
                    .map(|(i, z)| Complex64::new(0.0, modes[i * d + a] as f64) * z),
            );
        }
    }
    SpectralCoeffs::from_parts(g, c.channels() * d, data, c.is_real())
}

/// Spectral divergence of a `d`-channel field.
pub fn divergence(u: &GridField) -> Result<GridField, SpectralError> {
    let g = u.grid();
    let d = g.d();
    if u.channels() != d {
        return Err(SpectralError::ChannelMismatch {
            expected: d,
            found: u.channels(),
        });
    }
    Ok(idft_unchecked(&divergence_coeffs(&dft(u))))
}

pub(crate) fn divergence_coeffs(u: &SpectralCoeffs) -> SpectralCoeffs {
    let g = u.grid();
    let d = g.d();
    let modes = g.modes();
    let mut out = vec![ZERO; g.len()];
    for a in 0..d {
        for (i, (o, z)) in out.iter_mut().zip(u.channel(a)).enumerate() {
            *o += Complex64::new(0.0, modes[i * d + a] as f64) * z;
        }
    }
    SpectralCoeffs::from_parts(g, 1, out, true)
}

/// `P_N(u v)` computed exactly by sampling both factors on the `2N` grid.
///
/// Channel counts must agree, or one factor may be scalar and is broadcast.
pub fn dealiased_product(u: &GridField, v: &GridField) -> Result<GridField, SpectralError> {
    let g = u.grid();
    if v.grid() != g {
        return Err(SpectralError::GridMismatch);
    }
    let channels = broadcast_channels(u.channels(), v.channels())?;
    let fine = g.with_n(2 * g.n())?;
    let uf = idft_unchecked(&dft(u).regrid(fine.n())?);
    let vf = idft_unchecked(&dft(v).regrid(fine.n())?);
    let mut prod = Vec::with_capacity(fine.len() * channels);
    for c in 0..channels {
        let a = uf.channel(if u.channels() == 1 { 0 } else { c });
        let b = vf.channel(if v.channels() == 1 { 0 } else { c });
        prod.extend(a.iter().zip(b).map(|(x, y)| x * y));
    }
    let pf = GridField::from_parts(fine, channels, prod);
    Ok(idft_unchecked(&dft(&pf).restrict(g.n())?))
}

fn broadcast_channels(a: usize, b: usize) -> Result<usize, SpectralError> {
    if a == b || b == 1 {
        Ok(a)
    } else if a == 1 {
        Ok(b)
    } else {
        Err(SpectralError::ChannelMismatch {
            expected: a,
            found: b,
        })
    }
}

impl SpectralCoeffs {
    /// Coefficients on the resolution-`m` grid keeping only `|k|_∞ ≤ m` (no aliasing).
    pub fn restrict(&self, m: usize) -> Result<SpectralCoeffs, SpectralError> {
        let from = self.grid();
        if m >= from.n() {
            return self.regrid(m);
        }
        let to = from.with_n(m)?;
        let d = from.d();
        let mut k = vec![0i64; d];
        let mut data = vec![ZERO; to.len() * self.channels()];
        for i in 0..to.len() {
            to.mode(i, &mut k);
            let src = from.mode_index(&k).expect("coarse mode inside fine grid");
            for ch in 0..self.channels() {
                data[ch * to.len() + i] = self.channel(ch)[src];
            }
        }
        Ok(SpectralCoeffs::from_parts(to, self.channels(), data, self.is_real()))
    }
}

/// Leray projection `1 - k⊗k/|k|²` per mode, zeroing the mean.
pub fn leray_project(u: &GridField) -> Result<GridField, SpectralError> {
    let d = u.grid().d();
    if u.channels() != d {
        return Err(SpectralError::ChannelMismatch {
            expected: d,
            found: u.channels(),
        });
    }
    Ok(idft_unchecked(&leray_coeffs(&dft(u))))
}

pub(crate) fn leray_coeffs(u: &SpectralCoeffs) -> SpectralCoeffs {
    let g = u.grid();
    let d = g.d();
    let n = g.len();
    let modes = g.modes();
    let mut out = u.clone();
    let mut kz = vec![ZERO; d];
    for i in 0..n {
        let k = &modes[i * d..(i + 1) * d];
        let k2: i64 = k.iter().map(|x| x * x).sum();
        if k2 == 0 {
            for a in 0..d {
                out.channel_mut(a)[i] = ZERO;
            }
            continue;
        }
        let mut dot = ZERO;
        for a in 0..d {
            kz[a] = u.channel(a)[i];
            dot += kz[a] * k[a] as f64;
        }
        let s = dot / k2 as f64;
        for a in 0..d {
            out.channel_mut(a)[i] = kz[a] - s * k[a] as f64;
        }
    }
    out
}

/// `(-Δ)^{-1}` on the zero-mean part: multiplier `1/|k|²`, zero mode set to zero.
pub fn inverse_laplacian(f: &GridField) -> GridField {
    idft_unchecked(&dft(f).apply_symbol(inverse_laplacian_symbol))
}

pub(crate) fn inverse_laplacian_symbol(k: &[i64]) -> Complex64 {
    let k2: i64 = k.iter().map(|x| x * x).sum();
    if k2 == 0 {
        ZERO
    } else {
        Complex64::new(1.0 / k2 as f64, 0.0)
    }
}

/// `(1 - αΔ)^{-1}`: multiplier `1/(1 + α|k|²)` on every mode.
pub fn helmholtz_inverse(f: &GridField, alpha: f64) -> Result<GridField, SpectralError> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(SpectralError::BadParameter(format!(
            "helmholtz coefficient must be finite and non-negative, got {alpha}"
        )));
    }
    Ok(idft_unchecked(
        &dft(f).apply_symbol(|k| helmholtz_symbol(k, alpha)),
    ))
}

pub(crate) fn helmholtz_symbol(k: &[i64], alpha: f64) -> Complex64 {
    let k2: i64 = k.iter().map(|x| x * x).sum();
    Complex64::new(1.0 / (1.0 + alpha * k2 as f64), 0.0)
}

/// Evaluate the trigonometric interpolant of `f` at arbitrary points.
///
/// `points` holds `d` coordinates per point; the result is channel-major.
pub fn interpolate(f: &GridField, points: &[f64]) -> Vec<f64> {
    let c = dft(f);
    interpolate_coeffs(&c, points)
}

pub fn interpolate_coeffs(c: &SpectralCoeffs, points: &[f64]) -> Vec<f64> {
    let g = c.grid();
    let d = g.d();
    let modes = g.modes();
    let npts = points.len() / d;
    let mut out = vec![0.0; npts * c.channels()];
    for (p, y) in points.chunks(d).enumerate() {
        // Phases e^{i k_a y_a} per axis, reused across modes.
        let axis_phase: Vec<Vec<Complex64>> = y
            .iter()
            .map(|&ya| {
                (0..g.points_per_axis())
                    .map(|m| Complex64::from_polar(1.0, g.wavenumber(m) as f64 * ya))
                    .collect()
            })
            .collect();
        for ch in 0..c.channels() {
            let data = c.channel(ch);
            let mut acc = 0.0;
            for (i, z) in data.iter().enumerate() {
                if *z == ZERO {
                    continue;
                }
                let mut e = Complex64::new(1.0, 0.0);
                for a in 0..d {
                    let k = modes[i * d + a];
                    let slot = g.slot(k).expect("mode in grid");
                    e *= axis_phase[a][slot];
                }
                acc += (z * e).re;
            }
            out[ch * npts + p] = acc;
        }
    }
    out
}

/// Set coefficients to the exact conjugate-symmetric average, removing round-off drift.
pub fn symmetrize(c: &SpectralCoeffs) -> SpectralCoeffs {
    let g = c.grid();
    let neg = negation_table(g);
    let mut out = c.clone();
    for ch in 0..c.channels() {
        let src = c.channel(ch);
        let dst = out.channel_mut(ch);
        for i in 0..g.len() {
            dst[i] = 0.5 * (src[i] + src[neg[i]].conj());
        }
    }
    out
}

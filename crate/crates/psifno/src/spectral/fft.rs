//! Multi-dimensional complex FFT on odd periodic grids.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use super::Grid;

thread_local! {
    // Plans are immutable once built; the cache only saves re-planning cost.
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                let dir = if inverse {
                    FftDirection::Inverse
                } else {
                    FftDirection::Forward
                };
                planner.plan_fft(len, dir)
            })
            .clone()
    })
}

/// In-place unnormalized transform of one channel laid out row-major on `grid`.
///
/// Forward uses `e^{-i k x}`, inverse `e^{+i k x}`.
pub(crate) fn transform(data: &mut [Complex64], grid: Grid, inverse: bool) {
    let p = grid.points_per_axis();
    let d = grid.d();
    debug_assert_eq!(data.len(), grid.len());
    let fft = plan(p, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    if d == 1 {
        fft.process_with_scratch(data, &mut scratch);
        return;
    }
    // Last axis is contiguous: transform all rows at once.
    fft.process_with_scratch(data, &mut scratch);
    // Other axes: gather every line into one contiguous buffer and transform the batch.
    let mut lines = vec![Complex64::new(0.0, 0.0); data.len()];
    for axis in 0..d - 1 {
        let stride = p.pow((d - 1 - axis) as u32);
        let block = stride * p;
        let mut starts = (0..data.len()).step_by(block).flat_map(|base| (0..stride).map(move |o| base + o));
        for line in lines.chunks_exact_mut(p) {
            let start = starts.next().expect("one start per line");
            for (m, z) in line.iter_mut().enumerate() {
                *z = data[start + m * stride];
            }
        }
        fft.process_with_scratch(&mut lines, &mut scratch);
        let mut starts = (0..data.len()).step_by(block).flat_map(|base| (0..stride).map(move |o| base + o));
        for line in lines.chunks_exact(p) {
            let start = starts.next().expect("one start per line");
            for (m, z) in line.iter().enumerate() {
                data[start + m * stride] = *z;
            }
        }
    }
}

/// Flat index of `-k` for every flat index `k`.
fn mirror(grid: Grid) -> Vec<usize> {
    let p = grid.points_per_axis();
    let mut idx = vec![0usize; grid.d()];
    (0..grid.len())
        .map(|flat| {
            grid.unflatten(flat, &mut idx);
            for m in idx.iter_mut() {
                *m = (p - *m) % p;
            }
            grid.flatten(&idx)
        })
        .collect()
}

/// Forward transforms of real channels, normalized by `1/|J_N|`, channel after channel.
///
/// Channels are packed in pairs as `a + ib` into one complex transform and separated with
/// `A_k = (Z_k + conj Z_{-k})/2`, `B_k = (Z_k - conj Z_{-k})/(2i)`.
pub(crate) fn forward_real(values: &[f64], channels: usize, grid: Grid) -> Vec<Complex64> {
    let len = grid.len();
    let s = 1.0 / len as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); channels * len];
    let mirror = if channels > 1 { mirror(grid) } else { Vec::new() };
    let mut c = 0;
    while c < channels {
        let a = &values[c * len..(c + 1) * len];
        if c + 1 == channels {
            let dst = &mut out[c * len..];
            for (z, &v) in dst.iter_mut().zip(a) {
                *z = Complex64::new(v, 0.0);
            }
            transform(dst, grid, false);
            for z in dst.iter_mut() {
                *z *= s;
            }
            break;
        }
        let b = &values[(c + 1) * len..(c + 2) * len];
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        transform(&mut buf, grid, false);
        let (lo, hi) = out[c * len..(c + 2) * len].split_at_mut(len);
        for (i, &j) in mirror.iter().enumerate() {
            let (z, w) = (buf[i], buf[j].conj());
            lo[i] = (z + w) * (0.5 * s);
            hi[i] = Complex64::new(0.0, -0.5 * s) * (z - w);
        }
        c += 2;
    }
    out
}

/// Real part of the unnormalized inverse transform of each channel, channel after channel.
///
/// Pairs of channels share one complex transform: with `Ĥc = (c_k + conj c_{-k})/2` the
/// Hermitian part, `Re F⁻¹c = F⁻¹Ĥc`, so `F⁻¹(Ĥa + iĤb)` carries both results.
pub(crate) fn inverse_real(coeffs: &[Complex64], channels: usize, grid: Grid) -> Vec<f64> {
    let len = grid.len();
    let mut out = vec![0.0; channels * len];
    let mirror = if channels > 1 { mirror(grid) } else { Vec::new() };
    let mut c = 0;
    while c < channels {
        let a = &coeffs[c * len..(c + 1) * len];
        if c + 1 == channels {
            let mut buf = a.to_vec();
            transform(&mut buf, grid, true);
            for (o, z) in out[c * len..].iter_mut().zip(&buf) {
                *o = z.re;
            }
            break;
        }
        let b = &coeffs[(c + 1) * len..(c + 2) * len];
        let i_unit = Complex64::new(0.0, 1.0);
        let mut buf: Vec<Complex64> = mirror
            .iter()
            .enumerate()
            .map(|(i, &j)| ((a[i] + a[j].conj()) + i_unit * (b[i] + b[j].conj())) * 0.5)
            .collect();
        transform(&mut buf, grid, true);
        let (lo, hi) = out[c * len..(c + 2) * len].split_at_mut(len);
        for ((x, y), z) in lo.iter_mut().zip(hi.iter_mut()).zip(&buf) {
            *x = z.re;
            *y = z.im;
        }
        c += 2;
    }
    out
}

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::SpectralError;

/// Regular periodic grid with `2N+1` points per axis on the torus `[0, 2π)^d`.
///
/// Flat indices are row-major with the last axis fastest. The same flat index
/// addresses a grid point `x_j` and, in FFT order, a wavevector `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    d: usize,
    n: usize,
}

impl Grid {
    pub fn new(d: usize, n: usize) -> Result<Self, SpectralError> {
        if d == 0 || n == 0 {
            return Err(SpectralError::BadGrid { d, n });
        }
        let g = Grid { d, n };
        // guard against absurd allocations from malformed configs
        if (g.points_per_axis() as f64).powi(d as i32) > 1.0e9 {
            return Err(SpectralError::BadGrid { d, n });
        }
        Ok(g)
    }

    /// Grid from a point count per axis; even counts have no symmetric mode set.
    pub fn from_points_per_axis(d: usize, points: usize) -> Result<Self, SpectralError> {
        if points % 2 == 0 {
            return Err(SpectralError::EvenGrid(points));
        }
        Grid::new(d, (points - 1) / 2)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Mode radius `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points_per_axis(&self) -> usize {
        2 * self.n + 1
    }

    /// `|J_N| = |K_N| = (2N+1)^d`.
    pub fn len(&self) -> usize {
        self.points_per_axis().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_n(&self, n: usize) -> Result<Self, SpectralError> {
        Grid::new(self.d, n)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points_per_axis() as f64
    }

    /// Per-axis indices of a flat index.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        let p = self.points_per_axis();
        for a in (0..self.d).rev() {
            out[a] = flat % p;
            flat /= p;
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let p = self.points_per_axis();
        idx.iter().fold(0, |acc, &i| acc * p + i)
    }

    /// Coordinates of grid point `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.d];
        self.unflatten(flat, &mut idx);
        let h = self.spacing();
        idx.iter().map(|&j| j as f64 * h).collect()
    }

    /// All grid points, `d` coordinates per point.
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.d);
        let mut idx = vec![0; self.d];
        let h = self.spacing();
        for flat in 0..self.len() {
            self.unflatten(flat, &mut idx);
            out.extend(idx.iter().map(|&j| j as f64 * h));
        }
        out
    }

    /// Signed wavenumber of FFT slot `m` along one axis.
    pub fn wavenumber(&self, m: usize) -> i64 {
        let p = self.points_per_axis();
        if m <= self.n {
            m as i64
        } else {
            m as i64 - p as i64
        }
    }

    /// FFT slot holding wavenumber `k`; `None` if `|k| > N`.
    pub fn slot(&self, k: i64) -> Option<usize> {
        if k.unsigned_abs() as usize > self.n {
            return None;
        }
        let p = self.points_per_axis() as i64;
        Some(k.rem_euclid(p) as usize)
    }

    /// Flat FFT-order index of wavevector `k`; `None` outside `K_N`.
    pub fn mode_index(&self, k: &[i64]) -> Option<usize> {
        debug_assert_eq!(k.len(), self.d);
        let p = self.points_per_axis();
        let mut flat = 0;
        for &ki in k {
            flat = flat * p + self.slot(ki)?;
        }
        Some(flat)
    }

    /// Wavevector stored at flat FFT-order index `flat`.
    pub fn mode(&self, flat: usize, out: &mut [i64]) {
        let p = self.points_per_axis();
        let mut f = flat;
        for a in (0..self.d).rev() {
            out[a] = self.wavenumber(f % p);
            f /= p;
        }
    }

    /// Wavevectors of every FFT slot, `d` entries per mode.
    pub fn modes(&self) -> Vec<i64> {
        let mut out = vec![0i64; self.len() * self.d];
        for (flat, chunk) in out.chunks_mut(self.d).enumerate() {
            self.mode(flat, chunk);
        }
        out
    }

    /// `|k|²` per FFT slot.
    pub fn k_squared(&self) -> Vec<f64> {
        self.modes()
            .chunks(self.d)
            .map(|k| k.iter().map(|&x| (x * x) as f64).sum())
            .collect()
    }

    /// Wavevectors of `K_N` in lexicographic order over `{-N..N}^d` (the wire order).
    pub fn lex_modes(&self) -> Vec<i64> {
        let p = self.points_per_axis();
        let n = self.n as i64;
        let mut out = Vec::with_capacity(self.len() * self.d);
        let mut idx = vec![0; self.d];
        for flat in 0..self.len() {
            let mut f = flat;
            for a in (0..self.d).rev() {
                idx[a] = f % p;
                f /= p;
            }
            out.extend(idx.iter().map(|&i| i as i64 - n));
        }
        out
    }

    /// Map from lexicographic position to FFT-order flat index.
    pub fn lex_to_fft(&self) -> Vec<usize> {
        self.lex_modes()
            .chunks(self.d)
            .map(|k| self.mode_index(k).expect("lexicographic mode inside K_N"))
            .collect()
    }
}

use num_complex::Complex64;

use super::{Grid, SpectralError};

/// Real samples of a `channels`-valued function on a [`Grid`].
///
/// Storage is channel-major: channel `c` occupies `values[c*len .. (c+1)*len]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    channels: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, channels: usize, values: Vec<f64>) -> Result<Self, SpectralError> {
        if channels == 0 || values.len() != grid.len() * channels {
            return Err(SpectralError::Shape {
                expected: grid.len() * channels.max(1),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        Ok(GridField {
            grid,
            channels,
            values,
        })
    }

    /// Trusted constructor for results of internal arithmetic.
    pub(crate) fn from_parts(grid: Grid, channels: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len() * channels);
        GridField {
            grid,
            channels,
            values,
        }
    }

    pub fn zeros(grid: Grid, channels: usize) -> Self {
        GridField::from_parts(grid, channels, vec![0.0; grid.len() * channels])
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let mut values = Vec::with_capacity(grid.len() * value.len());
        for &v in value {
            values.extend(std::iter::repeat(v).take(grid.len()));
        }
        GridField::from_parts(grid, value.len(), values)
    }

    /// Sample `f(x, channel)` at every grid point.
    pub fn from_fn(grid: Grid, channels: usize, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let pts = grid.points();
        let d = grid.d();
        let mut values = Vec::with_capacity(grid.len() * channels);
        for c in 0..channels {
            values.extend(pts.chunks(d).map(|x| f(x, c)));
        }
        GridField::from_parts(grid, channels, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    /// Single-channel copy of channel `c`.
    pub fn extract(&self, c: usize) -> GridField {
        GridField::from_parts(self.grid, 1, self.channel(c).to_vec())
    }

    /// Channels `range` as a new field.
    pub fn select(&self, range: std::ops::Range<usize>) -> GridField {
        let n = self.grid.len();
        let channels = range.len();
        GridField::from_parts(
            self.grid,
            channels,
            self.values[range.start * n..range.end * n].to_vec(),
        )
    }

    /// Stack fields sharing a grid along the channel axis.
    pub fn stack(parts: &[&GridField]) -> Result<GridField, SpectralError> {
        let first = parts.first().ok_or(SpectralError::Shape {
            expected: 1,
            found: 0,
        })?;
        let mut values = Vec::new();
        let mut channels = 0;
        for p in parts {
            if p.grid != first.grid {
                return Err(SpectralError::GridMismatch);
            }
            values.extend_from_slice(&p.values);
            channels += p.channels;
        }
        Ok(GridField::from_parts(first.grid, channels, values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid mean of each channel.
    pub fn means(&self) -> Vec<f64> {
        let n = self.grid.len() as f64;
        (0..self.channels)
            .map(|c| self.channel(c).iter().sum::<f64>() / n)
            .collect()
    }

    pub fn scaled(&self, s: f64) -> GridField {
        GridField::from_parts(
            self.grid,
            self.channels,
            self.values.iter().map(|v| v * s).collect(),
        )
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &GridField) -> Result<GridField, SpectralError> {
        self.check_same_shape(other)?;
        Ok(GridField::from_parts(
            self.grid,
            self.channels,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField, SpectralError> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &GridField) -> Result<GridField, SpectralError> {
        self.axpy(1.0, other)
    }

    pub(crate) fn check_same_shape(&self, other: &GridField) -> Result<(), SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        if self.channels != other.channels {
            return Err(SpectralError::ChannelMismatch {
                expected: self.channels,
                found: other.channels,
            });
        }
        Ok(())
    }
}

/// Fourier coefficients over `K_N` for each channel.
///
/// Coefficients are held in FFT order (see [`Grid::mode_index`]); the wire order
/// produced by [`SpectralCoeffs::to_lex`] is lexicographic over `{-N..N}^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoeffs {
    grid: Grid,
    channels: usize,
    data: Vec<Complex64>,
    real: bool,
}

impl SpectralCoeffs {
    /// Coefficients from FFT-ordered data. When `real` is set the data must be
    /// conjugate symmetric to within `1e-12` of its largest entry.
    pub fn new(
        grid: Grid,
        channels: usize,
        data: Vec<Complex64>,
        real: bool,
    ) -> Result<Self, SpectralError> {
        if channels == 0 || data.len() != grid.len() * channels {
            return Err(SpectralError::Shape {
                expected: grid.len() * channels.max(1),
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        let c = SpectralCoeffs {
            grid,
            channels,
            data,
            real,
        };
        if real {
            let defect = c.hermitian_defect();
            let scale = c.max_abs();
            if defect > 1e-12 * scale {
                return Err(SpectralError::HermitianViolation { defect, scale });
            }
        }
        Ok(c)
    }

    pub(crate) fn from_parts(grid: Grid, channels: usize, data: Vec<Complex64>, real: bool) -> Self {
        debug_assert_eq!(data.len(), grid.len() * channels);
        SpectralCoeffs {
            grid,
            channels,
            data,
            real,
        }
    }

    pub fn zeros(grid: Grid, channels: usize) -> Self {
        SpectralCoeffs::from_parts(
            grid,
            channels,
            vec![Complex64::new(0.0, 0.0); grid.len() * channels],
            true,
        )
    }

    /// Coefficients from lexicographically ordered data.
    pub fn from_lex(
        grid: Grid,
        channels: usize,
        lex: &[Complex64],
        real: bool,
    ) -> Result<Self, SpectralError> {
        if lex.len() != grid.len() * channels {
            return Err(SpectralError::Shape {
                expected: grid.len() * channels,
                found: lex.len(),
            });
        }
        let perm = grid.lex_to_fft();
        let n = grid.len();
        let mut data = vec![Complex64::new(0.0, 0.0); lex.len()];
        for c in 0..channels {
            for (p, &f) in perm.iter().enumerate() {
                data[c * n + f] = lex[c * n + p];
            }
        }
        SpectralCoeffs::new(grid, channels, data, real)
    }

    pub fn to_lex(&self) -> Vec<Complex64> {
        let perm = self.grid.lex_to_fft();
        let n = self.grid.len();
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.channels {
            out.extend(perm.iter().map(|&f| self.data[c * n + f]));
        }
        out
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Whether these coefficients represent a real field.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn channel(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Coefficient of wavevector `k` in channel `c` (zero outside `K_N`).
    pub fn get(&self, c: usize, k: &[i64]) -> Complex64 {
        match self.grid.mode_index(k) {
            Some(i) => self.channel(c)[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, c: usize, k: &[i64], value: Complex64) -> Result<(), SpectralError> {
        let i = self
            .grid
            .mode_index(k)
            .ok_or(SpectralError::BadTruncation {
                m: k.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0),
                n: self.grid.n(),
            })?;
        self.channel_mut(c)[i] = value;
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max_k |c(-k) - conj(c(k))|` over all channels.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        let n = g.len();
        let neg = negation_table(g);
        let mut worst: f64 = 0.0;
        for c in 0..self.channels {
            let ch = &self.data[c * n..(c + 1) * n];
            for i in 0..n {
                worst = worst.max((ch[neg[i]] - ch[i].conj()).norm());
            }
        }
        worst
    }
}

/// For each FFT-order slot, the slot of the negated wavevector.
pub(crate) fn negation_table(g: Grid) -> Vec<usize> {
    let p = g.points_per_axis();
    let d = g.d();
    let mut idx = vec![0usize; d];
    (0..g.len())
        .map(|flat| {
            g.unflatten(flat, &mut idx);
            idx.iter().fold(0, |acc, &m| acc * p + (p - m) % p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_shapes_and_nan() {
        let g = Grid::new(1, 2).unwrap();
        assert!(GridField::new(g, 1, vec![0.0; 4]).is_err());
        assert!(matches!(
            GridField::new(g, 1, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]),
            Err(SpectralError::NonFinite)
        ));
        assert!(GridField::new(g, 1, vec![0.0; 5]).is_ok());
    }

    #[test]
    fn lex_roundtrip() {
        let g = Grid::new(2, 2).unwrap();
        let lex: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new(i as f64, -(i as f64)))
            .collect();
        let c = SpectralCoeffs::from_lex(g, 1, &lex, false).unwrap();
        assert_eq!(c.to_lex(), lex);
        // first lexicographic entry is k = (-2, -2)
        assert_eq!(c.get(0, &[-2, -2]), lex[0]);
    }

    #[test]
    fn hermitian_flag_enforced() {
        let g = Grid::new(1, 1).unwrap();
        let bad = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ];
        assert!(matches!(
            SpectralCoeffs::new(g, 1, bad.clone(), true),
            Err(SpectralError::HermitianViolation { .. })
        ));
        assert!(SpectralCoeffs::new(g, 1, bad, false).is_ok());
    }

    #[test]
    fn negation_table_is_involution() {
        let g = Grid::new(2, 3).unwrap();
        let t = negation_table(g);
        let mut k = [0i64; 2];
        let mut kn = [0i64; 2];
        for i in 0..g.len() {
            assert_eq!(t[t[i]], i);
            g.mode(i, &mut k);
            g.mode(t[i], &mut kn);
            assert_eq!([-k[0], -k[1]], kn);
        }
    }
}

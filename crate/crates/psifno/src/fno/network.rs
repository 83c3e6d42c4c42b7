use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{Activation, FnoError, FnoLayer};
use crate::spectral::{interpolate, resample, Grid, GridField};

/// `rows×cols` matrix (row-major) applied at every grid point.
pub(crate) fn mat_apply(m: &[f64], rows: usize, cols: usize, v: &GridField) -> GridField {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(v.channels(), cols);
    let g = v.grid();
    let n = g.len();
    let mut out = vec![0.0; rows * n];
    for r in 0..rows {
        let dst = &mut out[r * n..(r + 1) * n];
        for c in 0..cols {
            let a = m[r * cols + c];
            if a != 0.0 {
                for (y, x) in dst.iter_mut().zip(v.channel(c)) {
                    *y += a * x;
                }
            }
        }
    }
    GridField::from_parts(g, rows, out)
}

/// Ψ-FNO: lifting `R`, layers, projection `Q`, all on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiFno {
    grid: Grid,
    d_a: usize,
    d_v: usize,
    d_u: usize,
    lift: Vec<f64>,
    layers: Vec<FnoLayer>,
    projection: Vec<f64>,
    activation: Activation,
    metadata: BTreeMap<String, f64>,
}

impl PsiFno {
    /// `lift` is `d_v×d_a`, `projection` is `d_u×d_v`, both row-major.
    pub fn new(
        grid: Grid,
        d_a: usize,
        d_u: usize,
        lift: Vec<f64>,
        layers: Vec<FnoLayer>,
        projection: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, FnoError> {
        if d_a == 0 || d_u == 0 {
            return Err(FnoError::Dimension("input and output need at least one channel".into()));
        }
        if lift.len() % d_a != 0 || lift.is_empty() {
            return Err(FnoError::Dimension(format!(
                "lifting matrix has {} entries, not a multiple of d_a={d_a}",
                lift.len()
            )));
        }
        let d_v = lift.len() / d_a;
        if projection.len() != d_u * d_v {
            return Err(FnoError::Dimension(format!(
                "projection has {} entries, expected {}x{d_v}",
                projection.len(),
                d_u
            )));
        }
        if lift.iter().chain(&projection).any(|x| !x.is_finite()) {
            return Err(FnoError::NonFinite);
        }
        for (i, l) in layers.iter().enumerate() {
            if l.dim() != d_v {
                return Err(FnoError::Dimension(format!(
                    "layer {i} has lift {}, network has {d_v}",
                    l.dim()
                )));
            }
            l.check_grid(grid)?;
        }
        Ok(PsiFno {
            grid,
            d_a,
            d_v,
            d_u,
            lift,
            layers,
            projection,
            activation,
            metadata: BTreeMap::new(),
        })
    }

    /// `R = Q = I` with no layers: the network `a ↦ I_N a`.
    pub fn identity(grid: Grid, channels: usize, activation: Activation) -> Self {
        let mut eye = vec![0.0; channels * channels];
        for i in 0..channels {
            eye[i * channels + i] = 1.0;
        }
        PsiFno::new(grid, channels, channels, eye.clone(), Vec::new(), eye, activation)
            .expect("identity network")
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_v(&self) -> usize {
        self.d_v
    }

    pub fn d_u(&self) -> usize {
        self.d_u
    }

    pub fn lift_matrix(&self) -> &[f64] {
        &self.lift
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn layers(&self) -> &[FnoLayer] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn metadata(&self) -> &BTreeMap<String, f64> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: f64) {
        self.metadata.insert(key.into(), value);
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: f64) -> Self {
        self.set_metadata(key, value);
        self
    }

    /// Input resampled to this network's grid.
    fn prepare(&self, a: &GridField) -> Result<GridField, FnoError> {
        if a.grid().d() != self.grid.d() {
            return Err(FnoError::Dimension(format!(
                "input is {}-dimensional, network is {}-dimensional",
                a.grid().d(),
                self.grid.d()
            )));
        }
        if a.channels() != self.d_a {
            return Err(FnoError::Dimension(format!(
                "network expects {} input channels, got {}",
                self.d_a,
                a.channels()
            )));
        }
        if a.grid() == self.grid {
            Ok(a.clone())
        } else {
            Ok(resample(a, self.grid.n())?)
        }
    }

    pub fn forward(&self, a: &GridField) -> Result<GridField, FnoError> {
        let a = self.prepare(a)?;
        let mut v = mat_apply(&self.lift, self.d_v, self.d_a, &a);
        for l in &self.layers {
            v = l.forward(&v, self.activation)?;
        }
        Ok(mat_apply(&self.projection, self.d_u, self.d_v, &v))
    }

    /// Hidden states: after `R`, then after each layer.
    pub fn hidden_states(&self, a: &GridField) -> Result<Vec<GridField>, FnoError> {
        let a = self.prepare(a)?;
        let mut states = vec![mat_apply(&self.lift, self.d_v, self.d_a, &a)];
        for l in &self.layers {
            let next = l.forward(states.last().expect("non-empty"), self.activation)?;
            states.push(next);
        }
        Ok(states)
    }

    /// Output at arbitrary points (flattened `[x_0, x_1, …]`), channel-major.
    pub fn evaluate_at(&self, a: &GridField, points: &[f64]) -> Result<Vec<f64>, FnoError> {
        Ok(interpolate(&self.forward(a)?, points))
    }
}

pub fn fno_forward(net: &PsiFno, a: &GridField) -> Result<GridField, FnoError> {
    net.forward(a)
}

/// Depth, width, lift and total parameter count of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub depth: usize,
    pub width: usize,
    pub lift: usize,
    pub size: usize,
}

/// `size = d_u d_v + L(d_v² + d_v|J_N| + d_v²|J_N|) + d_a d_v`, counting `W`, `b` and `P` densely.
pub fn size_report(net: &PsiFno) -> SizeReport {
    let j = net.grid.len();
    let (dv, l) = (net.d_v, net.layers.len());
    SizeReport {
        depth: l,
        width: dv * j,
        lift: dv,
        size: net.d_u * dv + l * (dv * dv + dv * j + dv * dv * j) + net.d_a * dv,
    }
}

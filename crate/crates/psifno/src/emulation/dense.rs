use serde::{Deserialize, Serialize};

use crate::fno::Activation;

/// `x ↦ σ?(W x + b)` with `W` row-major `rows×cols`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activate: bool,
}

impl DenseLayer {
    pub fn apply(&self, x: &[f64], act: Activation) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = &self.weight[r * self.cols..(r + 1) * self.cols];
                let y = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[r];
                if self.activate {
                    act.eval(y)
                } else {
                    y
                }
            })
            .collect()
    }
}

/// Ordinary feed-forward network on `ℝ^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
}

impl DenseNet {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut v = x.to_vec();
        for l in &self.layers {
            v = l.apply(&v, self.activation);
        }
        v
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.cols)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.rows)
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    /// Largest hidden layer.
    pub fn width(&self) -> usize {
        let n = self.layers.len();
        self.layers[..n.saturating_sub(1)].iter().map(|l| l.rows).max().unwrap_or(0)
    }
}

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fs;
use std::path::Path;

use super::{DenseLayer, DenseNet, EmulationError};
use crate::fno::io::{read_model, write_model};
use crate::fno::{lex_modes, Activation, PsiFno};
use crate::spectral::{dft, GridField};

const EXPORT_FORMAT: &str = "psifno-deeponet/1";
const EXPORT_FILE: &str = "deeponet.json";
const BRANCH_FILE: &str = "branch.psifno";
/// Explicit branch matrices are only assembled up to this many hidden units per layer.
const MAX_DENSE_UNITS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    Constant,
    Cos,
    Sin,
}

/// `scale·cos⟨k,y⟩`, `scale·sin⟨k,y⟩` or the constant `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrunkBasis {
    pub k: Vec<i64>,
    pub kind: TrigKind,
    pub scale: f64,
}

impl TrunkBasis {
    fn phase(&self, y: &[f64]) -> f64 {
        self.k.iter().zip(y).map(|(k, x)| *k as f64 * x).sum()
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self.kind {
            TrigKind::Constant => self.scale,
            TrigKind::Cos => self.scale * self.phase(y).cos(),
            TrigKind::Sin => self.scale * self.phase(y).sin(),
        }
    }
}

fn is_positive(k: &[i64]) -> bool {
    k.iter().find(|x| **x != 0).is_some_and(|x| *x > 0)
}

/// Real orthonormal basis of the span of `e^{i⟨k,x⟩}`, `k ∈ K_N`, in `L²(𝕋^d)`, one element per
/// mode in lexicographic order: the constant at `k = 0`, `cos⟨k,·⟩` at positive `k` (first
/// nonzero entry positive), `sin⟨-k,·⟩` at negative `k`.
pub fn trunk_basis(d: usize, n: usize) -> Vec<TrunkBasis> {
    let c = (2.0 * PI).powf(-(d as f64) / 2.0);
    lex_modes(d, n)
        .into_iter()
        .map(|k| {
            if k.iter().all(|x| *x == 0) {
                TrunkBasis { k, kind: TrigKind::Constant, scale: c }
            } else if is_positive(&k) {
                TrunkBasis { k, kind: TrigKind::Cos, scale: SQRT_2 * c }
            } else {
                let k = k.iter().map(|x| -x).collect();
                TrunkBasis { k, kind: TrigKind::Sin, scale: SQRT_2 * c }
            }
        })
        .collect()
}

/// A Ψ-FNO read as a DeepONet `Σ_k β_k(a) e_k(y)`: the branch is the grid network followed by a
/// change of basis from grid values to real trigonometric coefficients, the trunk the
/// orthonormal basis of [`trunk_basis`].
#[derive(Clone, Debug)]
pub struct DeepOnetExport {
    net: PsiFno,
    trunk: Vec<TrunkBasis>,
    output_bound: f64,
}

/// Converts `net`; `output_bound` bounds `‖net(a)‖_{L²}` on the inputs of interest and only
/// enters the accuracy target of [`approximate_trunk`].
pub fn to_deeponet(net: &PsiFno, output_bound: f64) -> DeepOnetExport {
    let g = net.grid();
    DeepOnetExport {
        net: net.clone(),
        trunk: trunk_basis(g.d(), g.n()),
        output_bound,
    }
}

impl DeepOnetExport {
    pub fn network(&self) -> &PsiFno {
        &self.net
    }

    pub fn trunk(&self) -> &[TrunkBasis] {
        &self.trunk
    }

    pub fn output_bound(&self) -> f64 {
        self.output_bound
    }

    /// Sensor locations `x_j`, flattened, in grid storage order.
    pub fn sensor_points(&self) -> Vec<f64> {
        self.net.grid().points()
    }

    pub fn d_u(&self) -> usize {
        self.net.d_u()
    }

    /// Number of branch outputs, `d_u·|K_N|`.
    pub fn p(&self) -> usize {
        self.net.d_u() * self.trunk.len()
    }

    pub fn width(&self) -> usize {
        self.net.d_v() * self.net.grid().len()
    }

    pub fn depth(&self) -> usize {
        self.net.depth()
    }

    /// `(2N+1)^d · output_bound`.
    pub fn coefficient_bound(&self) -> f64 {
        self.trunk.len() as f64 * self.output_bound
    }

    /// Real trigonometric coefficients of a grid function, channel-major.
    fn coefficients(&self, u: &GridField) -> Vec<f64> {
        let d = u.grid().d();
        let c = dft(u);
        let s = (2.0 * PI).powf(d as f64 / 2.0);
        let mut out = Vec::with_capacity(u.channels() * self.trunk.len());
        for ch in 0..u.channels() {
            for b in &self.trunk {
                let z = c.get(ch, &b.k);
                out.push(match b.kind {
                    TrigKind::Constant => s * z.re,
                    TrigKind::Cos => SQRT_2 * s * z.re,
                    TrigKind::Sin => -SQRT_2 * s * z.im,
                });
            }
        }
        out
    }

    /// `β(a)`, channel-major: entry `c·|K_N| + i` pairs output channel `c` with `trunk()[i]`.
    pub fn branch(&self, a: &GridField) -> Result<Vec<f64>, EmulationError> {
        Ok(self.coefficients(&self.net.forward(a)?))
    }

    /// `β` on raw sensor values (channel-major over the sensor points).
    pub fn branch_from_sensors(&self, values: &[f64]) -> Result<Vec<f64>, EmulationError> {
        let a = GridField::new(self.net.grid(), self.net.d_a(), values.to_vec())?;
        self.branch(&a)
    }

    /// `Σ_k β_k(a) e_k(y)` at the flattened points, channel-major.
    pub fn evaluate(&self, a: &GridField, points: &[f64]) -> Result<Vec<f64>, EmulationError> {
        let beta = self.branch(a)?;
        Ok(self.combine(&beta, points, |i, y| self.trunk[i].eval(y)))
    }

    fn combine(&self, beta: &[f64], points: &[f64], basis: impl Fn(usize, &[f64]) -> f64) -> Vec<f64> {
        let d = self.net.grid().d();
        let m = self.trunk.len();
        let mut out = Vec::with_capacity(self.d_u() * points.len() / d);
        for ch in 0..self.d_u() {
            for y in points.chunks(d) {
                out.push((0..m).map(|i| beta[ch * m + i] * basis(i, y)).sum());
            }
        }
        out
    }

    /// `max |⟨e_i, e_j⟩ - δ_ij|`, with the inner products computed by the quadrature on the
    /// `2N` grid, which is exact for these products.
    pub fn gram_defect(&self) -> f64 {
        let g = self.net.grid();
        let fine = g.with_n(2 * g.n()).expect("finer grid");
        let pts = fine.points();
        let w = (2.0 * PI).powi(g.d() as i32) / fine.len() as f64;
        let vals: Vec<Vec<f64>> = self
            .trunk
            .iter()
            .map(|b| pts.chunks(g.d()).map(|y| b.eval(y)).collect())
            .collect();
        let mut worst = 0.0f64;
        for i in 0..vals.len() {
            for j in i..vals.len() {
                let ip = w * vals[i].iter().zip(&vals[j]).map(|(x, y)| x * y).sum::<f64>();
                worst = worst.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// Branch as explicit matrices: one hidden layer per Ψ-FNO layer (the lifting folded into
    /// the first, the projection and change of basis forming the output layer). Only for small
    /// networks.
    pub fn dense_layers(&self) -> Result<DenseNet, EmulationError> {
        let net = &self.net;
        let g = net.grid();
        let (j, da, dv, du) = (g.len(), net.d_a(), net.d_v(), net.d_u());
        if dv * j > MAX_DENSE_UNITS || da * j > MAX_DENSE_UNITS {
            return Err(EmulationError::BadParameters(format!(
                "explicit branch would need {} units per layer (limit {MAX_DENSE_UNITS})",
                dv * j
            )));
        }
        let lift = |a: &GridField| -> GridField {
            let mut v = vec![0.0; dv * j];
            for o in 0..dv {
                for c in 0..da {
                    let r = net.lift_matrix()[o * da + c];
                    if r != 0.0 {
                        for (y, x) in v[o * j..(o + 1) * j].iter_mut().zip(a.channel(c)) {
                            *y += r * x;
                        }
                    }
                }
            }
            GridField::new(g, dv, v).expect("lifted field")
        };
        let unit = |channels: usize, idx: usize| {
            let mut v = vec![0.0; channels * j];
            v[idx] = 1.0;
            GridField::new(g, channels, v).expect("unit field")
        };
        // columns of an affine map given as a closure on fields
        let assemble = |cols: usize, rows: usize, f: &dyn Fn(&GridField) -> Result<Vec<f64>, EmulationError>, inp: usize| {
            let zero = f(&GridField::zeros(g, inp))?;
            let mut w = vec![0.0; rows * cols];
            for c in 0..cols {
                let col = f(&unit(inp, c))?;
                for r in 0..rows {
                    w[r * cols + c] = col[r] - zero[r];
                }
            }
            Ok::<_, EmulationError>((w, zero))
        };
        let mut layers = Vec::with_capacity(net.depth() + 1);
        for (i, layer) in net.layers().iter().enumerate() {
            let (inp, cols) = if i == 0 { (da, da * j) } else { (dv, dv * j) };
            let f = |x: &GridField| -> Result<Vec<f64>, EmulationError> {
                let v = if i == 0 { lift(x) } else { x.clone() };
                Ok(layer.affine_part(&v)?.into_values())
            };
            let (weight, bias) = assemble(cols, dv * j, &f, inp)?;
            layers.push(DenseLayer {
                rows: dv * j,
                cols,
                weight,
                bias,
                activate: layer.activates(),
            });
        }
        let p = self.p();
        let project = |x: &GridField| -> Result<Vec<f64>, EmulationError> {
            let v = if net.depth() == 0 { lift(x) } else { x.clone() };
            let mut u = vec![0.0; du * j];
            for o in 0..du {
                for c in 0..dv {
                    let q = net.projection()[o * dv + c];
                    if q != 0.0 {
                        for (y, x) in u[o * j..(o + 1) * j].iter_mut().zip(v.channel(c)) {
                            *y += q * x;
                        }
                    }
                }
            }
            Ok(self.coefficients(&GridField::new(g, du, u)?))
        };
        let inp = if net.depth() == 0 { da } else { dv };
        let (weight, bias) = assemble(inp * j, p, &project, inp)?;
        layers.push(DenseLayer {
            rows: p,
            cols: inp * j,
            weight,
            bias,
            activate: false,
        });
        Ok(DenseNet {
            layers,
            activation: net.activation(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BranchRef {
    model: String,
    basis_change: String,
}

#[derive(Serialize, Deserialize)]
struct ExportFile {
    format: String,
    d: usize,
    n: usize,
    sensor_points: Vec<f64>,
    p: usize,
    d_u: usize,
    output_bound: f64,
    trunk: Vec<TrunkBasis>,
    branch: BranchRef,
}

/// Writes `deeponet.json` and the branch model `branch.psifno` into `dir`.
pub fn write_deeponet(dir: &Path, export: &DeepOnetExport) -> Result<(), EmulationError> {
    fs::create_dir_all(dir)?;
    let g = export.net.grid();
    let file = ExportFile {
        format: EXPORT_FORMAT.into(),
        d: g.d(),
        n: g.n(),
        sensor_points: export.sensor_points(),
        p: export.p(),
        d_u: export.d_u(),
        output_bound: export.output_bound,
        trunk: export.trunk.clone(),
        branch: BranchRef {
            model: BRANCH_FILE.into(),
            basis_change: "grid values to real trigonometric coefficients".into(),
        },
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| EmulationError::Format(e.to_string()))?;
    fs::write(dir.join(EXPORT_FILE), json)?;
    write_model(&dir.join(BRANCH_FILE), &export.net)?;
    Ok(())
}

pub fn read_deeponet(dir: &Path) -> Result<DeepOnetExport, EmulationError> {
    let text = fs::read_to_string(dir.join(EXPORT_FILE))?;
    let file: ExportFile = serde_json::from_str(&text).map_err(|e| EmulationError::Format(e.to_string()))?;
    if file.format != EXPORT_FORMAT {
        return Err(EmulationError::Format(format!("unknown export format {:?}", file.format)));
    }
    let net = read_model(&dir.join(&file.branch.model))?;
    let g = net.grid();
    if g.d() != file.d || g.n() != file.n || net.d_u() != file.d_u {
        return Err(EmulationError::Format("branch model does not match the export header".into()));
    }
    let export = to_deeponet(&net, file.output_bound);
    if export.trunk != file.trunk || export.p() != file.p {
        return Err(EmulationError::Format("trunk descriptors do not match the branch grid".into()));
    }
    Ok(export)
}

/// Trunk basis functions replaced by one-hidden-layer tanh networks `τ_k` of `y ∈ [0, 2π)^d`.
#[derive(Clone, Debug)]
pub struct ApproxTrunk {
    pub nets: Vec<DenseNet>,
    /// `eps / ((2N+1)^d · output_bound)`.
    pub target: f64,
    /// Largest measured `|τ_k - e_k|`.
    pub error: f64,
}

const TRUNK_STEP: f64 = 0.5;
/// Product of the tanh slope and the node spacing.
const TRUNK_SHARPNESS: f64 = 0.25;
const TRUNK_REFINEMENTS: usize = 4;

/// `cos(t + phase)` on `[lo, hi]` as `c₀ + Σ_i c_i (1 + tanh(s(t - m_i)))/2`.
///
/// The steps sit at midpoints of nodes spaced `step`; the smoothing of the staircase by the
/// logistic kernel damps a unit frequency by `φ = (π/2s)/sinh(π/2s)`, which the coefficients
/// undo, and the remaining constant is fixed at the centre of the interval.
fn smoothed_staircase(lo: f64, hi: f64, phase: f64, step: f64) -> (f64, Vec<(f64, f64)>) {
    let s = TRUNK_SHARPNESS / step;
    let margin = 19.0 / s;
    let f = |t: f64| (t + phase).cos();
    let start = lo - margin;
    let count = ((hi + margin - start) / step).ceil() as usize;
    let x = PI / (2.0 * s);
    let damping = x / x.sinh();
    let rho = 2.0 * (step / 2.0).sin() / step;
    let steps: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let (a, b) = (start + i as f64 * step, start + (i + 1) as f64 * step);
            (0.5 * (a + b), (f(b) - f(a)) / (rho * damping))
        })
        .collect();
    let mid = 0.5 * (lo + hi);
    let sum: f64 = steps.iter().map(|(m, c)| c * 0.5 * (1.0 + (s * (mid - m)).tanh())).sum();
    (f(mid) - sum, steps)
}

fn staircase_net(k: &[i64], scale: f64, c0: f64, steps: &[(f64, f64)], s: f64) -> DenseNet {
    let d = k.len();
    let mut weight = Vec::with_capacity(steps.len() * d);
    let mut bias = Vec::with_capacity(steps.len());
    for (m, _) in steps {
        weight.extend(k.iter().map(|x| s * *x as f64));
        bias.push(-s * m);
    }
    let out_w: Vec<f64> = steps.iter().map(|(_, c)| 0.5 * scale * c).collect();
    let out_b = scale * (c0 + steps.iter().map(|(_, c)| 0.5 * c).sum::<f64>());
    DenseNet {
        layers: vec![
            DenseLayer { rows: steps.len(), cols: d, weight, bias, activate: true },
            DenseLayer { rows: 1, cols: steps.len(), weight: out_w, bias: vec![out_b], activate: false },
        ],
        activation: Activation::Tanh,
    }
}

/// Approximating trunk with `|τ_k - e_k| ≤ eps/B̄` on `[0, 2π)^d`, `B̄ = (2N+1)^d·output_bound`.
/// The error is measured on a dense sample of each phase range.
pub fn approximate_trunk(export: &DeepOnetExport, eps: f64) -> Result<ApproxTrunk, EmulationError> {
    let target = eps / export.coefficient_bound();
    if !(target > 0.0) {
        return Err(EmulationError::BadParameters("trunk accuracy must be positive".into()));
    }
    let mut step = TRUNK_STEP;
    let mut best = f64::INFINITY;
    for _ in 0..TRUNK_REFINEMENTS {
        let s = TRUNK_SHARPNESS / step;
        let mut nets = Vec::with_capacity(export.trunk.len());
        let mut error = 0.0f64;
        for b in &export.trunk {
            if b.kind == TrigKind::Constant {
                let d = b.k.len();
                nets.push(DenseNet {
                    layers: vec![DenseLayer { rows: 1, cols: d, weight: vec![0.0; d], bias: vec![b.scale], activate: false }],
                    activation: Activation::Tanh,
                });
                continue;
            }
            let lo = 2.0 * PI * b.k.iter().map(|x| (*x).min(0) as f64).sum::<f64>();
            let hi = 2.0 * PI * b.k.iter().map(|x| (*x).max(0) as f64).sum::<f64>();
            let phase = if b.kind == TrigKind::Sin { -FRAC_PI_2 } else { 0.0 };
            let (c0, steps) = smoothed_staircase(lo, hi, phase, step);
            let net = staircase_net(&b.k, b.scale, c0, &steps, s);
            // sample along a line through the torus whose phase sweeps [lo, hi]
            let samples = ((hi - lo) / step * 8.0).ceil() as usize + 1;
            let dir: Vec<f64> = b.k.iter().map(|x| if *x >= 0 { 1.0 } else { -1.0 }).collect();
            for i in 0..samples {
                let r = 2.0 * PI * i as f64 / (samples - 1) as f64 * (1.0 - 1e-12);
                let y: Vec<f64> = dir.iter().map(|s| if *s > 0.0 { r } else { 2.0 * PI * (1.0 - 1e-12) - r }).collect();
                error = error.max((net.eval(&y)[0] - b.eval(&y)).abs());
            }
            nets.push(net);
        }
        if error <= target {
            return Ok(ApproxTrunk { nets, target, error });
        }
        best = best.min(error);
        step /= 2.0;
    }
    Err(EmulationError::CalibrationFailed { what: "trunk", target, best })
}

impl DeepOnetExport {
    /// `Σ_k β_k(a) τ_k(y)` with an approximating trunk.
    pub fn evaluate_with(&self, trunk: &ApproxTrunk, a: &GridField, points: &[f64]) -> Result<Vec<f64>, EmulationError> {
        let beta = self.branch(a)?;
        Ok(self.combine(&beta, points, |i, y| trunk.nets[i].eval(y)[0]))
    }
}

//! Model files: magic `PSIFNO1\0`, little-endian `u64` header length, JSON header,
//! then every float in declaration order as little-endian `f64`.
//!
//! Payload order: `R` (row-major), then per layer `W`, bias values, each symbol as
//! interleaved `(re, im)` over `K_W` in lexicographic order, multiplier coefficients;
//! finally `Q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::{Activation, Bias, FnoError, FnoLayer, FourierMultiplier, MultiplierEntry, PsiFno};
use crate::spectral::{Grid, GridField};

pub const MODEL_MAGIC: &[u8; 8] = b"PSIFNO1\0";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasKind {
    Zero,
    Constant,
    Field,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerHeader {
    pub apply_activation: bool,
    /// Multiplier width `W`.
    pub width: usize,
    pub bias: BiasKind,
    pub symbols: usize,
    /// `(out, in, symbol)` per multiplier entry; coefficients live in the payload.
    pub entries: Vec<[usize; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub version: u32,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub d_a: usize,
    pub d_v: usize,
    pub d_u: usize,
    #[serde(rename = "L")]
    pub depth: usize,
    pub activation: Activation,
    pub layers: Vec<LayerHeader>,
    #[serde(default)]
    pub metadata: BTreeMap<String, f64>,
}

fn header_of(net: &PsiFno) -> ModelHeader {
    ModelHeader {
        version: MODEL_VERSION,
        d: net.grid().d(),
        n: net.grid().n(),
        d_a: net.d_a(),
        d_v: net.d_v(),
        d_u: net.d_u(),
        depth: net.depth(),
        activation: net.activation(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerHeader {
                apply_activation: l.activates(),
                width: l.multiplier().width(),
                bias: match l.bias() {
                    Bias::Zero => BiasKind::Zero,
                    Bias::Constant(_) => BiasKind::Constant,
                    Bias::Field(_) => BiasKind::Field,
                },
                symbols: l.multiplier().symbols().len(),
                entries: l
                    .multiplier()
                    .entries()
                    .iter()
                    .map(|e| [e.out, e.inp, e.symbol])
                    .collect(),
            })
            .collect(),
        metadata: net.metadata().clone(),
    }
}

pub fn encode_model(net: &PsiFno) -> Result<Vec<u8>, FnoError> {
    let header = serde_json::to_vec(&header_of(net)).map_err(|e| FnoError::Format(e.to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    let mut put = |xs: &[f64]| {
        for x in xs {
            out.extend_from_slice(&x.to_le_bytes());
        }
    };
    put(net.lift_matrix());
    for l in net.layers() {
        put(l.weight());
        match l.bias() {
            Bias::Zero => {}
            Bias::Constant(b) => put(b),
            Bias::Field(f) => put(f.values()),
        }
        for s in l.multiplier().symbols() {
            let flat: Vec<f64> = s.iter().flat_map(|z| [z.re, z.im]).collect();
            put(&flat);
        }
        let coefs: Vec<f64> = l.multiplier().entries().iter().map(|e| e.coef).collect();
        put(&coefs);
    }
    put(net.projection());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<Vec<f64>, FnoError> {
        let end = self
            .pos
            .checked_add(n.checked_mul(8).ok_or_else(|| FnoError::Format("size overflow".into()))?)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| FnoError::Format("payload truncated".into()))?;
        let out = self.bytes[self.pos..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        self.pos = end;
        Ok(out)
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<PsiFno, FnoError> {
    if bytes.len() < 16 || &bytes[..8] != MODEL_MAGIC {
        return Err(FnoError::Format("missing PSIFNO1 magic".into()));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if hlen > body.len() {
        return Err(FnoError::Format("header truncated".into()));
    }
    let h: ModelHeader =
        serde_json::from_slice(&body[..hlen]).map_err(|e| FnoError::Format(e.to_string()))?;
    if h.version != MODEL_VERSION {
        return Err(FnoError::Format(format!("unsupported version {}", h.version)));
    }
    if h.layers.len() != h.depth {
        return Err(FnoError::Format("layer count disagrees with L".into()));
    }
    let grid = Grid::new(h.d, h.n)?;
    let dv = h.d_v;
    let mut r = Reader {
        bytes: &body[hlen..],
        pos: 0,
    };
    let lift = r.take(dv * h.d_a)?;
    let mut layers = Vec::with_capacity(h.depth);
    for lh in &h.layers {
        let w = r.take(dv * dv)?;
        let bias = match lh.bias {
            BiasKind::Zero => Bias::Zero,
            BiasKind::Constant => Bias::Constant(r.take(dv)?),
            BiasKind::Field => {
                let vals = r.take(dv * grid.len())?;
                Bias::Field(Arc::new(GridField::new(grid, dv, vals)?))
            }
        };
        let len = (2 * lh.width + 1).pow(h.d as u32);
        let mut symbols = Vec::with_capacity(lh.symbols);
        for _ in 0..lh.symbols {
            let flat = r.take(2 * len)?;
            let s: Vec<Complex64> = flat.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
            symbols.push(s.into());
        }
        let coefs = r.take(lh.entries.len())?;
        let entries = lh
            .entries
            .iter()
            .zip(coefs)
            .map(|(&[out, inp, symbol], coef)| MultiplierEntry {
                out,
                inp,
                symbol,
                coef,
            })
            .collect();
        let mult = FourierMultiplier::new(h.d, lh.width, dv, symbols, entries)?;
        layers.push(FnoLayer::new(w, bias, mult, lh.apply_activation)?);
    }
    let projection = r.take(h.d_u * dv)?;
    if r.pos != r.bytes.len() {
        return Err(FnoError::Format("trailing bytes after payload".into()));
    }
    let mut net = PsiFno::new(grid, h.d_a, h.d_u, lift, layers, projection, h.activation)?;
    if net.d_v() != dv {
        return Err(FnoError::Format("lift disagrees with d_v".into()));
    }
    for (k, v) in h.metadata {
        net.set_metadata(k, v);
    }
    Ok(net)
}

pub fn write_model(path: &Path, net: &PsiFno) -> Result<(), FnoError> {
    fs::write(path, encode_model(net)?)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<PsiFno, FnoError> {
    decode_model(&fs::read(path)?)
}

//! Flat little-endian binary container for grid fields with a JSON sidecar.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use super::{Grid, GridField, SpectralError};

pub const FIELD_LAYOUT: &str = "row-major-j-then-channel";

/// Sidecar describing a binary field payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub channels: usize,
    pub layout: String,
}

/// Payload bytes: for each grid point (row-major) all channel values.
pub fn encode_field(f: &GridField) -> Vec<u8> {
    let n = f.grid().len();
    let mut out = Vec::with_capacity(8 * f.values().len());
    for j in 0..n {
        for c in 0..f.channels() {
            out.extend_from_slice(&f.channel(c)[j].to_le_bytes());
        }
    }
    out
}

pub fn decode_field(header: &FieldHeader, bytes: &[u8]) -> Result<GridField, SpectralError> {
    if header.layout != FIELD_LAYOUT {
        return Err(SpectralError::Format(format!(
            "unsupported layout {:?}",
            header.layout
        )));
    }
    let grid = Grid::new(header.d, header.n)?;
    let n = grid.len();
    let expected = 8 * n * header.channels;
    if bytes.len() != expected {
        return Err(SpectralError::Format(format!(
            "payload has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut values = vec![0.0; n * header.channels];
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        let (j, c) = (i / header.channels, i % header.channels);
        values[c * n + j] = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    }
    GridField::new(grid, header.channels, values)
}

pub fn header_of(f: &GridField) -> FieldHeader {
    FieldHeader {
        d: f.grid().d(),
        n: f.grid().n(),
        channels: f.channels(),
        layout: FIELD_LAYOUT.to_string(),
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write `path` (binary) and `path.json` (sidecar).
pub fn write_field(path: &Path, f: &GridField) -> Result<(), SpectralError> {
    fs::write(path, encode_field(f))?;
    let header = serde_json::to_string_pretty(&header_of(f))
        .map_err(|e| SpectralError::Format(e.to_string()))?;
    fs::write(sidecar_path(path), header)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField, SpectralError> {
    let header: FieldHeader = serde_json::from_slice(&fs::read(sidecar_path(path))?)
        .map_err(|e| SpectralError::Format(e.to_string()))?;
    decode_field(&header, &fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaves_channels_per_point() {
        let g = Grid::new(1, 1).unwrap();
        let f = GridField::new(g, 2, vec![1.0, 2.0, 3.0, 10.0, 20.0, 30.0]).unwrap();
        let bytes = encode_field(&f);
        let second = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        assert_eq!(second, 10.0);
        assert_eq!(decode_field(&header_of(&f), &bytes).unwrap(), f);
    }

    #[test]
    fn file_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(2, 3).unwrap();
        let f = GridField::from_fn(g, 3, |x, c| (x[0] * (c + 1) as f64).sin() / 3.0 + x[1]);
        let p = dir.path().join("u.bin");
        write_field(&p, &f).unwrap();
        assert_eq!(read_field(&p).unwrap(), f);
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = Grid::new(1, 2).unwrap();
        let f = GridField::zeros(g, 1);
        let bytes = encode_field(&f);
        assert!(decode_field(&header_of(&f), &bytes[..16]).is_err());
    }
}

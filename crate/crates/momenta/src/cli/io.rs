//! Readers for sampled inputs and small file helpers.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::moments::{MomentError, SampledField, SphereSample};

pub const VOXEL_MAGIC: &[u8; 4] = b"MOMV";
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Moment(#[from] MomentError),
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, InputError> {
    std::fs::read(path).map_err(|source| InputError::Io {
        path: path.into(),
        source,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), InputError> {
    std::fs::write(path, bytes).map_err(|source| InputError::Io {
        path: path.into(),
        source,
    })
}

/// Voxel file: `MOMV`, little-endian `u32` edge length, 8 reserved bytes,
/// then `n³` little-endian `f32` values with x fastest.
pub fn parse_voxels(path: &Path, bytes: &[u8]) -> Result<SampledField, InputError> {
    let bad = |msg: String| InputError::Format {
        path: path.into(),
        msg,
    };
    if bytes.len() < HEADER_LEN || &bytes[..4] != VOXEL_MAGIC {
        return Err(bad("missing MOMV header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = &bytes[HEADER_LEN..];
    let expected = n.checked_pow(3).and_then(|c| c.checked_mul(4));
    if expected != Some(body.len()) {
        return Err(bad(format!(
            "edge {n} needs {} data bytes, found {}",
            n.saturating_pow(3).saturating_mul(4),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(SampledField::voxels(n, values)?)
}

pub fn encode_voxels(n: usize, values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * values.len());
    out.extend_from_slice(VOXEL_MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&[0; 8]);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Sphere samples as CSV with header `theta,phi,value,weight` (radians;
/// weights summing to 4π).
pub fn parse_sphere_csv(path: &Path, text: &str) -> Result<SampledField, InputError> {
    let bad = |line: usize, msg: String| InputError::Format {
        path: path.into(),
        msg: format!("line {line}: {msg}"),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h))
            if h.split(',')
                .map(str::trim)
                .eq(["theta", "phi", "value", "weight"]) => {}
        _ => return Err(bad(1, "expected header theta,phi,value,weight".into())),
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(bad(
                i + 1,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let mut v = [0.0; 4];
        for (slot, c) in v.iter_mut().zip(&cols) {
            *slot = c
                .parse()
                .map_err(|_| bad(i + 1, format!("'{c}' is not a number")))?;
        }
        samples.push(SphereSample {
            theta: v[0],
            phi: v[1],
            value: v[2],
            weight: v[3],
        });
    }
    Ok(SampledField::sphere(samples)?)
}

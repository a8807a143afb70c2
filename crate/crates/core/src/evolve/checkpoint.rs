//! Binary checkpoints of a density matrix.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 8    | magic `b"DIMERCK\0"`          |
//! | 8      | 4    | format version (`u32`, = 1)   |
//! | 12     | 8    | N (`u64`)                     |
//! | 20     | 8    | u (`f64`)                     |
//! | 28     | 8    | g (`f64`)                     |
//! | 36     | 8    | t (`f64`)                     |
//! | 44     | 16 (N+1)^2 | entries, row-major, `(re, im)` as `f64` pairs |

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::params::ModelParams;

pub const MAGIC: [u8; 8] = *b"DIMERCK\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 44;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub t: f64,
}

pub fn save_state(path: &Path, params: &ModelParams, t: f64, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: rho.dim(),
        });
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * rho.as_slice().len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(params.n as u64).to_le_bytes());
    buf.extend_from_slice(&params.u.to_le_bytes());
    buf.extend_from_slice(&params.g.to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    for z in rho.as_slice() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

pub fn load_state(path: &Path) -> Result<(Checkpoint, DensityMatrix)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(corrupt(format!("file too short ({} bytes)", bytes.len())));
    }
    if bytes[0..8] != MAGIC {
        return Err(corrupt("bad magic bytes".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let n = usize::try_from(u64_at(12)).map_err(|_| corrupt("N does not fit".into()))?;
    let params = ModelParams::new(n, f64_at(20), f64_at(28))
        .map_err(|e| corrupt(format!("invalid header: {e}")))?;
    let t = f64_at(36);
    if !(t.is_finite() && t >= 0.0) {
        return Err(corrupt(format!("invalid time {t}")));
    }
    let dim = params.dim();
    let expected = HEADER_LEN + 16 * dim * dim;
    if bytes.len() != expected {
        return Err(corrupt(format!(
            "length {} does not match N = {n} (expected {expected})",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    let rho = DensityMatrix::from_row_major(dim, data)?;
    Ok((Checkpoint { params, t }, rho))
}

/// Load a checkpoint and require that it was written for `params`.
pub fn load_for(path: &Path, params: &ModelParams) -> Result<(f64, DensityMatrix)> {
    let (hdr, rho) = load_state(path)?;
    if hdr.params != *params {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            reason: format!(
                "parameter mismatch: file has N={} u={} g={}, run has N={} u={} g={}",
                hdr.params.n, hdr.params.u, hdr.params.g, params.n, params.u, params.g
            ),
        });
    }
    Ok((hdr.t, rho))
}

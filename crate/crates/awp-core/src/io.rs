//! Binary field dump format "AWPF".
//!
//! Little-endian layout: magic `AWPF`, u32 version (=1), u32 nx, u32 ny,
//! f64 dx, f64 dy, f64 lambda_vac, then nx·ny interleaved (re, im) f64
//! pairs, row-major with y as the slow axis.

use crate::field::{Grid2D, ScalarField};
use ndarray::Array2;
use num_complex::Complex64;
use std::io::{self, Read, Write};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"AWPF";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not an AWPF stream (bad magic)")]
    BadMagic,
    #[error("unsupported AWPF version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt header: {0}")]
    CorruptHeader(&'static str),
}

pub fn write_field(w: &mut impl Write, f: &ScalarField) -> Result<(), DumpError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(f.grid.nx as u32).to_le_bytes())?;
    w.write_all(&(f.grid.ny as u32).to_le_bytes())?;
    for v in [f.grid.dx, f.grid.dy, f.lambda_vac] {
        w.write_all(&v.to_le_bytes())?;
    }
    for a in f.amp.iter() {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(r: &mut impl Read) -> Result<ScalarField, DumpError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(DumpError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(DumpError::UnsupportedVersion(version));
    }
    let nx = read_u32(r)? as usize;
    let ny = read_u32(r)? as usize;
    let dx = read_f64(r)?;
    let dy = read_f64(r)?;
    let lambda_vac = read_f64(r)?;
    let grid =
        Grid2D::new(nx, ny, dx, dy).map_err(|_| DumpError::CorruptHeader("invalid grid"))?;
    if lambda_vac <= 0.0 {
        return Err(DumpError::CorruptHeader("nonpositive wavelength"));
    }
    let mut data = Vec::with_capacity(nx * ny);
    for _ in 0..nx * ny {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        data.push(Complex64::new(re, im));
    }
    let amp = Array2::from_shape_vec((ny, nx), data).expect("shape matches count");
    Ok(ScalarField { grid, amp, lambda_vac })
}

fn read_u32(r: &mut impl Read) -> Result<u32, DumpError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, DumpError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 4     | magic `GLPF`                              |
//! | 4     | format version (`u32`, currently 1)       |
//! | 4     | `dim` (`u32`)                             |
//! | 4     | `n_per_axis` (`u32`)                      |
//! | 8     | box length `L` (`f64`)                    |
//! | 4     | representation (`u32`: 0 physical, 1 frequency) |
//! | 16·N  | `N = n^dim` pairs `(re, im)` of `f64`     |
//!
//! Data follow the in-memory order: last axis fastest, frequency data in
//! standard FFT order. The dealias fraction is not stored; readers get the
//! default 2/3.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use super::field::{Representation, SpectralField};
use super::grid::{make_grid, Grid, GridConfig};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"GLPF";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(field: &SpectralField, mut out: W) -> Result<()> {
    let grid = field.grid();
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    out.write_all(&(grid.n() as u32).to_le_bytes())?;
    out.write_all(&grid.box_length().to_le_bytes())?;
    let flag: u32 = match field.representation() {
        Representation::Physical => 0,
        Representation::Frequency => 1,
    };
    out.write_all(&flag.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * field.data().len());
    for z in field.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a snapshot, building a fresh grid from its header.
pub fn read_snapshot<R: Read>(input: R) -> Result<SpectralField> {
    read_snapshot_with(input, None)
}

/// Reads a snapshot onto `grid`, which must match the header.
pub fn read_snapshot_on<R: Read>(input: R, grid: &Arc<Grid>) -> Result<SpectralField> {
    read_snapshot_with(input, Some(grid))
}

fn read_snapshot_with<R: Read>(mut input: R, grid: Option<&Arc<Grid>>) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut input)? as usize;
    let n = read_u32(&mut input)? as usize;
    let length = read_f64(&mut input)?;
    let representation = match read_u32(&mut input)? {
        0 => Representation::Physical,
        1 => Representation::Frequency,
        other => return Err(Error::Format(format!("bad representation flag {other}"))),
    };
    let config = GridConfig::new(dim, n, length);
    let grid = match grid {
        Some(g) => {
            if g.dim() != dim || g.n() != n || g.box_length() != length {
                return Err(Error::GridMismatch);
            }
            g.clone()
        }
        None => make_grid(config)?,
    };
    let mut raw = vec![0u8; 16 * grid.len()];
    input.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    SpectralField::from_data(&grid, representation, data)
}

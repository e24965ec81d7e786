//! Binary field dump.
//!
//! Layout (little-endian throughout):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 8    | ASCII `LPTXF1` followed by two NUL bytes  |
//! | 8      | 4    | `u32` points per axis                     |
//! | 12     | 4    | `u32` flags, bit 0 set for spectral data  |
//! | 16     | ...  | row-major `(re, im)` pairs of `f64`       |
//!
//! The domain length is not stored; readers supply it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space};

pub const MAGIC: [u8; 8] = *b"LPTXF1\0\0";
pub const HEADER_LEN: usize = 16;
const FLAG_SPECTRAL: u32 = 1;

pub fn write_field<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let n = field.grid().n() as u32;
    let flags = match field.space() {
        Space::Physical => 0,
        Space::Spectral => FLAG_SPECTRAL,
    };
    w.write_all(&MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&flags.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R, domain_length: f64) -> Result<Field> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if header[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let flags = u32::from_le_bytes(header[12..16].try_into().unwrap());
    if flags & !FLAG_SPECTRAL != 0 {
        return Err(Error::Format(format!("unknown flag bits {flags:#x}")));
    }
    let grid = Grid::new(n, domain_length)?;
    let mut body = Vec::with_capacity(n * n * 16);
    r.read_to_end(&mut body)?;
    if body.len() != n * n * 16 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            n * n * 16,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let space = if flags & FLAG_SPECTRAL != 0 {
        Space::Spectral
    } else {
        Space::Physical
    };
    Field::from_values(&grid, space, values)
}

pub fn save_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    write_field(field, BufWriter::new(File::create(path)?))
}

pub fn load_field(path: impl AsRef<Path>, domain_length: f64) -> Result<Field> {
    read_field(BufReader::new(File::open(path)?), domain_length)
}

//! Binary field dumps and PGM previews.
//!
//! Dump layout: a 32-byte header (magic `VPF1`, u32 nx, u32 ny, f64 h,
//! all little-endian, zero padding to 32 bytes) followed by `nx*ny`
//! little-endian f64 values, row-major over the full bounding grid with
//! `ix` fastest and row `iy = 0` first. Outside cells are written as 0.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::domain::{Grid, ScalarField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VPF1";
const HEADER_LEN: usize = 32;

pub fn write_field<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&(g.nx() as u32).to_le_bytes());
    header[8..12].copy_from_slice(&(g.ny() as u32).to_le_bytes());
    header[12..20].copy_from_slice(&g.h().to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_field_file(path: &Path, field: &ScalarField) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_field(std::io::BufWriter::new(f), field)
}

/// Read a dump back onto `grid`. The stored nx, ny, h must match.
pub fn read_field<R: Read>(mut r: R, grid: Arc<Grid>) -> Result<ScalarField> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::BadFieldDump("bad magic".into()));
    }
    let nx = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let h = f64::from_le_bytes(header[12..20].try_into().unwrap());
    if nx != grid.nx() || ny != grid.ny() {
        return Err(Error::BadFieldDump(format!(
            "dump is {}x{} but grid is {}x{}",
            nx,
            ny,
            grid.nx(),
            grid.ny()
        )));
    }
    if (h - grid.h()).abs() > 1e-12 * grid.h() {
        return Err(Error::BadFieldDump(format!(
            "dump cell size {h} but grid has {}",
            grid.h()
        )));
    }
    let mut buf = vec![0u8; nx * ny * 8];
    r.read_exact(&mut buf)?;
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::from_values(grid, values)
}

pub fn read_field_file(path: &Path, grid: Arc<Grid>) -> Result<ScalarField> {
    let f = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(f), grid)
}

/// 8-bit binary PGM preview, linearly rescaled over the field's range.
/// The top image row is the grid row with the largest y.
pub fn write_pgm<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    let (lo, hi) = field.min_max();
    let span = if hi > lo { hi - lo } else { 1.0 };
    write!(w, "P5\n{} {}\n255\n", g.nx(), g.ny())?;
    let mut row = vec![0u8; g.nx()];
    for iy in (0..g.ny()).rev() {
        for ix in 0..g.nx() {
            let v = field.get(ix, iy);
            row[ix] = (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8;
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn write_pgm_file(path: &Path, field: &ScalarField) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_pgm(std::io::BufWriter::new(f), field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{discretize, Domain};

    #[test]
    fn dump_round_trip() {
        let g = discretize(Domain::UnitDisk, 24).unwrap();
        let f = ScalarField::from_fn(g.clone(), |p| p.x * p.y + 0.5).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(&buf[0..4], MAGIC);
        assert_eq!(buf.len(), 32 + 24 * 24 * 8);
        let back = read_field(&buf[..], g).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn dump_rejects_wrong_grid() {
        let g = discretize(Domain::UnitDisk, 24).unwrap();
        let g2 = discretize(Domain::UnitDisk, 32).unwrap();
        let f = ScalarField::zeros(g);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert!(read_field(&buf[..], g2).is_err());
    }

    #[test]
    fn pgm_header_and_size() {
        let g = discretize(Domain::rectangle(1.0, 0.5).unwrap(), 16).unwrap();
        let f = ScalarField::from_fn(g.clone(), |p| p.x).unwrap();
        let mut buf = Vec::new();
        write_pgm(&mut buf, &f).unwrap();
        let header = b"P5\n16 8\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(buf.len(), header.len() + 16 * 8);
    }
}

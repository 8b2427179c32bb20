//! Field dump formats.
//!
//! Text (`.tfield`):
//!
//! ```text
//! torus-field v1; n=<n>; N=<N>
//! <value of node 0>
//! <value of node 1>
//! ...
//! ```
//!
//! Node values follow the row-major node order of [`Grid`](super::Grid), one per line, in
//! scientific notation with 17 significant digits (exact round trip).
//!
//! Binary (`.tfld`), all little-endian:
//!
//! | offset | size      | content                          |
//! |--------|-----------|----------------------------------|
//! | 0      | 4         | magic `TFLD`                     |
//! | 4      | 4         | format version, `u32` = 1        |
//! | 8      | 4         | complex dimension `n`, `u32`     |
//! | 12     | 4         | resolution `N`, `u32`            |
//! | 16     | 8 * N^2n  | node values, `f64`, row-major    |
//!
//! Neither format carries the metric; readers supply the geometry and the header must agree
//! with it.

use std::io::{BufRead, BufReader, Read, Write};

use super::field::{Grid, GridField};
use super::geometry::TorusGeometry;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"TFLD";
pub const FORMAT_VERSION: u32 = 1;

pub fn text_header(grid: &Grid) -> String {
    format!("torus-field v1; n={}; N={}", grid.complex_dim(), grid.res())
}

pub fn write_text<W: Write>(field: &GridField, mut out: W) -> Result<()> {
    writeln!(out, "{}", text_header(field.grid()))?;
    for v in field.values() {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut parts = line.trim().split(';').map(str::trim);
    if parts.next() != Some("torus-field v1") {
        return Err(Error::Format(format!("bad header {line:?}")));
    }
    let mut n = None;
    let mut res = None;
    for p in parts {
        match p.split_once('=') {
            Some(("n", v)) => n = v.parse().ok(),
            Some(("N", v)) => res = v.parse().ok(),
            _ => return Err(Error::Format(format!("bad header field {p:?}"))),
        }
    }
    match (n, res) {
        (Some(n), Some(res)) => Ok((n, res)),
        _ => Err(Error::Format(format!("incomplete header {line:?}"))),
    }
}

fn grid_for(geometry: &TorusGeometry, n: usize, res: usize) -> Result<Grid> {
    if n != geometry.complex_dim() {
        return Err(Error::Format(format!(
            "dump has n={n}, geometry has n={}",
            geometry.complex_dim()
        )));
    }
    Grid::new(geometry.clone(), res)
}

pub fn read_text<R: Read>(input: R, geometry: &TorusGeometry) -> Result<GridField> {
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty dump".into()))??;
    let (n, res) = parse_header(&header)?;
    let grid = grid_for(geometry, n, res)?;
    let mut values = Vec::with_capacity(grid.len());
    for (k, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Format(format!("line {}: not a number: {t:?}", k + 2)))?;
        values.push(v);
    }
    if values.len() != grid.len() {
        return Err(Error::Format(format!(
            "expected {} values, found {}",
            grid.len(),
            values.len()
        )));
    }
    GridField::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_binary<W: Write>(field: &GridField, mut out: W) -> Result<()> {
    let grid = field.grid();
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(grid.complex_dim() as u32).to_le_bytes())?;
    out.write_all(&(grid.res() as u32).to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R, geometry: &TorusGeometry) -> Result<GridField> {
    let mut head = [0u8; 16];
    input
        .read_exact(&mut head)
        .map_err(|_| Error::Format("truncated binary header".into()))?;
    if &head[0..4] != BINARY_MAGIC {
        return Err(Error::Format("bad magic, expected TFLD".into()));
    }
    let word = |k: usize| u32::from_le_bytes(head[k..k + 4].try_into().expect("4 bytes"));
    if word(4) != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", word(4))));
    }
    let grid = grid_for(geometry, word(8) as usize, word(12) as usize)?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            8 * grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    GridField::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

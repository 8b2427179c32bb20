//! Output directories: field dumps listed in a JSON manifest with sha256 digests.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::torus::{io, GridField, TorusGeometry};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Relative file name to hex digest.
pub type Checksums = BTreeMap<String, String>;

/// Write `field` as `<dir>/<name>.tfield` and record its digest.
pub fn write_field(dir: &Path, name: &str, field: &GridField, sums: &mut Checksums) -> Result<()> {
    let file = format!("{name}.tfield");
    let mut buf = Vec::new();
    io::write_text(field, BufWriter::new(&mut buf))?;
    fs::write(dir.join(&file), &buf)?;
    sums.insert(file, sha256_hex(&buf));
    Ok(())
}

/// Write any serializable value as pretty JSON and record its digest.
pub fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T, sums: &mut Checksums) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    fs::write(dir.join(file), &buf)?;
    sums.insert(file.to_string(), sha256_hex(&buf));
    Ok(())
}

/// Read a file listed in `sums`, failing on a missing file or a digest mismatch.
pub fn read_verified(dir: &Path, file: &str, sums: &Checksums) -> Result<Vec<u8>> {
    let path = dir.join(file);
    let expected = sums
        .get(file)
        .ok_or_else(|| Error::MissingArtifact(path.clone()))?;
    let bytes = fs::read(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.clone()),
        _ => Error::Io(e),
    })?;
    if &sha256_hex(&bytes) != expected {
        return Err(Error::Checksum { path });
    }
    Ok(bytes)
}

pub fn read_field(dir: &Path, name: &str, sums: &Checksums, geometry: &TorusGeometry) -> Result<GridField> {
    let bytes = read_verified(dir, &format!("{name}.tfield"), sums)?;
    io::read_text(&bytes[..], geometry)
}

/// Digest of every listed file, verifying each against the manifest.
pub fn verify_all(dir: &Path, sums: &Checksums) -> Result<()> {
    for file in sums.keys() {
        read_verified(dir, file, sums)?;
    }
    Ok(())
}

/// Shared header of every manifest written by the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub kind: String,
    pub crate_version: String,
    pub complex_dim: usize,
    pub res: usize,
    /// Row-major `g_{j kbar}` as `[re, im]` pairs.
    pub metric: Vec<[f64; 2]>,
}

impl ManifestHeader {
    pub fn new(kind: &str, field: &GridField) -> Self {
        let grid = field.grid();
        ManifestHeader {
            kind: kind.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            complex_dim: grid.complex_dim(),
            res: grid.res(),
            metric: {
                let g = grid.geometry().metric();
                let n = grid.complex_dim();
                (0..n * n)
                    .map(|i| {
                        let z = g.get(i / n, i % n);
                        [z.re, z.im]
                    })
                    .collect()
            },
        }
    }

    pub fn geometry(&self) -> Result<TorusGeometry> {
        let m: Vec<Complex64> = self.metric.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        TorusGeometry::new(self.complex_dim, &m)
    }
}

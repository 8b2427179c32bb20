use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::solver::{BetaSolution, ConvergenceRecord, MaxPrincipleBox, SweepResult};
use crate::archive::{read_field, read_verified, sha256_hex, write_field, Checksums, ManifestHeader};
use crate::error::{Error, Result};

pub const SWEEP_MANIFEST: &str = "manifest.json";
const LOG_FILE: &str = "convergence.jsonl";

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    beta: f64,
    field: String,
    residual_sup: f64,
    newton_iters: usize,
    positivity_margin: f64,
    bounds: MaxPrincipleBox,
}

#[derive(Debug, Serialize, Deserialize)]
struct SweepManifest {
    header: ManifestHeader,
    entries: Vec<Entry>,
    successive_distances: Vec<f64>,
    files: Checksums,
}

/// Write the obstacle, every `phi` and the convergence log, listed with digests in `manifest.json`.
pub fn write_sweep_dir(sweep: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Checksums::new();
    write_field(dir, "obstacle", sweep.obstacle(), &mut files)?;
    let mut entries = Vec::with_capacity(sweep.solutions.len());
    for (i, s) in sweep.solutions.iter().enumerate() {
        let field = format!("phi_{i:03}");
        write_field(dir, &field, &s.phi, &mut files)?;
        entries.push(Entry {
            beta: s.beta,
            field,
            residual_sup: s.residual_sup,
            newton_iters: s.newton_iters,
            positivity_margin: s.positivity_margin,
            bounds: s.bounds,
        });
    }
    let mut log = Vec::new();
    sweep.write_log(&mut log)?;
    fs::write(dir.join(LOG_FILE), &log)?;
    files.insert(LOG_FILE.into(), sha256_hex(&log));
    let manifest = SweepManifest {
        header: ManifestHeader::new("sweep", sweep.obstacle()),
        entries,
        successive_distances: sweep.successive_distances.clone(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(SWEEP_MANIFEST), text)?;
    Ok(())
}

/// Read a directory written by [`write_sweep_dir`], checking every digest.
pub fn read_sweep_dir(dir: &Path) -> Result<SweepResult> {
    let path = dir.join(SWEEP_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.clone()),
        _ => Error::Io(e),
    })?;
    let m: SweepManifest = serde_json::from_str(&text)?;
    if m.header.kind != "sweep" {
        return Err(Error::Format(format!("{} is a {} manifest", path.display(), m.header.kind)));
    }
    if m.entries.is_empty() {
        return Err(Error::Format(format!("{} lists no solutions", path.display())));
    }
    let geometry = m.header.geometry()?;
    let obstacle = read_field(dir, "obstacle", &m.files, &geometry)?;
    let log_bytes = read_verified(dir, LOG_FILE, &m.files)?;
    let records = String::from_utf8(log_bytes)
        .map_err(|e| Error::Format(e.to_string()))?
        .lines()
        .map(serde_json::from_str::<ConvergenceRecord>)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut solutions = Vec::with_capacity(m.entries.len());
    for e in &m.entries {
        let phi = read_field(dir, &e.field, &m.files, &geometry)?;
        let log: Vec<ConvergenceRecord> = records.iter().filter(|r| r.beta == e.beta).cloned().collect();
        solutions.push(BetaSolution {
            beta: e.beta,
            u_beta: phi.sub(&obstacle)?,
            obstacle: obstacle.clone(),
            phi,
            residual_sup: e.residual_sup,
            newton_iters: e.newton_iters,
            positivity_margin: e.positivity_margin,
            residual_history: log.iter().map(|r| r.residual).collect(),
            log,
            bounds: e.bounds,
        });
    }
    Ok(SweepResult {
        solutions,
        successive_distances: m.successive_distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{continuation_sweep, NewtonOptions};
    use crate::torus::{Grid, TorusGeometry};
    use std::f64::consts::PI;

    #[test]
    fn round_trip_and_tamper() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 16).unwrap();
        let v = g.sample(|x| 0.3 * (2.0 * PI * x[0]).cos()).unwrap();
        let sweep = continuation_sweep(&v, &[4.0, 8.0], &NewtonOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_sweep_dir(&sweep, dir.path()).unwrap();
        let back = read_sweep_dir(dir.path()).unwrap();
        assert_eq!(back.betas(), sweep.betas());
        for (a, b) in back.solutions.iter().zip(&sweep.solutions) {
            assert_eq!(a.phi, b.phi);
            assert_eq!(a.log, b.log);
            assert_eq!(a.u_beta, b.u_beta);
        }
        fs::write(dir.path().join("phi_001.tfield"), "torus-field v1; n=1; N=16\n").unwrap();
        assert!(matches!(read_sweep_dir(dir.path()), Err(Error::Checksum { .. })));
        fs::remove_file(dir.path().join(LOG_FILE)).unwrap();
        assert!(matches!(read_sweep_dir(dir.path()), Err(Error::MissingArtifact(_))));
    }
}

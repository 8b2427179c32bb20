use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ContactPolicy, EnvelopeResult, MethodTag, Provenance};
use crate::archive::{read_field, write_field, Checksums, ManifestHeader};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct EnvelopeManifest {
    header: ManifestHeader,
    method: MethodTag,
    contact_policy: ContactPolicy,
    contact_description: String,
    contact_nodes: usize,
    provenance: Provenance,
    files: Checksums,
}

const FIELDS: [&str; 5] = ["obstacle", "envelope", "u_theta", "ma_density", "contact"];

/// Write the five field dumps and `manifest.json` into `dir`, creating it if needed.
pub fn write_dir(result: &EnvelopeResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Checksums::new();
    let contact = result.contact_field();
    let fields = [
        &result.obstacle,
        &result.envelope,
        &result.u_theta,
        &result.ma_density,
        &contact,
    ];
    for (name, field) in FIELDS.iter().zip(fields) {
        write_field(dir, name, field, &mut files)?;
    }
    let manifest = EnvelopeManifest {
        header: ManifestHeader::new("envelope", &result.obstacle),
        method: result.method,
        contact_policy: result.contact_policy.clone(),
        contact_description: result.contact_policy.describe(),
        contact_nodes: result.contact_count(),
        provenance: result.provenance.clone(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

/// Read a directory written by [`write_dir`], checking every digest.
pub fn read_dir(dir: &Path) -> Result<EnvelopeResult> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.clone()),
        _ => Error::Io(e),
    })?;
    let m: EnvelopeManifest = serde_json::from_str(&text)?;
    if m.header.kind != "envelope" {
        return Err(Error::Format(format!("{} is a {} manifest", path.display(), m.header.kind)));
    }
    let geometry = m.header.geometry()?;
    let read = |name: &str| read_field(dir, name, &m.files, &geometry);
    let obstacle = read("obstacle")?;
    let envelope = read("envelope")?;
    let u_theta = read("u_theta")?;
    let ma_density = read("ma_density")?;
    let contact = read("contact")?;
    let contact_mask = contact.values().iter().map(|&c| c > 0.5).collect();
    Ok(EnvelopeResult {
        obstacle,
        envelope,
        u_theta,
        method: m.method,
        contact_mask,
        contact_policy: m.contact_policy,
        ma_density,
        provenance: m.provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{envelope_psor, PsorOptions};
    use crate::torus::{Grid, TorusGeometry};
    use std::f64::consts::PI;

    #[test]
    fn round_trip_and_tamper() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 16).unwrap();
        let v = g.sample(|x| 0.3 * (2.0 * PI * x[1]).sin()).unwrap();
        let r = envelope_psor(&v, &PsorOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dir(&r, dir.path()).unwrap();
        let back = read_dir(dir.path()).unwrap();
        assert_eq!(back.envelope, r.envelope);
        assert_eq!(back.contact_mask, r.contact_mask);
        assert_eq!(back.provenance, r.provenance);

        let f = dir.path().join("envelope.tfield");
        let mut text = fs::read_to_string(&f).unwrap();
        text.push('\n');
        fs::write(&f, text).unwrap();
        assert!(matches!(read_dir(dir.path()), Err(Error::Checksum { .. })));
        fs::remove_file(&f).unwrap();
        assert!(matches!(read_dir(dir.path()), Err(Error::MissingArtifact(_))));
    }
}

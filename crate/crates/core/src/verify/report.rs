use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::torus::GridField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Passed,
    Failed,
    /// Disabled in the configuration or not applicable to the inputs.
    Skipped,
    /// Measured for contrast, never asserted.
    Reported,
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// sha256 over the values of every field the check read.
    pub inputs_digest: String,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// Passed when `value <= threshold`.
    pub fn at_most(name: &str, digest: &str, value: f64, threshold: f64) -> Self {
        CheckRecord {
            name: name.into(),
            inputs_digest: digest.into(),
            value: Some(value),
            threshold: Some(threshold),
            status: if value <= threshold { CheckStatus::Passed } else { CheckStatus::Failed },
            note: None,
        }
    }

    pub fn skipped(name: &str, note: &str) -> Self {
        CheckRecord {
            name: name.into(),
            inputs_digest: String::new(),
            value: None,
            threshold: None,
            status: CheckStatus::Skipped,
            note: Some(note.into()),
        }
    }

    pub fn reported(name: &str, digest: &str, value: f64) -> Self {
        CheckRecord {
            name: name.into(),
            inputs_digest: digest.into(),
            value: Some(value),
            threshold: None,
            status: CheckStatus::Reported,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_status(mut self, status: CheckStatus) -> Self {
        self.status = status;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    /// No record failed. Skipped and reported records never count as passes or failures.
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.status != CheckStatus::Failed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Digest of the little-endian bytes of each field followed by the scalars.
pub fn digest_inputs(fields: &[&GridField], scalars: &[f64]) -> String {
    let mut h = Sha256::new();
    for f in fields {
        for v in f.values() {
            h.update(v.to_le_bytes());
        }
    }
    for s in scalars {
        h.update(s.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// One row of the per-beta table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub beta: f64,
    pub e_beta: Option<f64>,
    pub c_beta: Option<f64>,
    pub sup_lambda1: f64,
    pub sup_q: Option<f64>,
    pub sup_third: f64,
}

/// Write rows as CSV with a header line; missing values are empty cells.
pub fn write_rate_csv<W: Write>(rows: &[RateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::Error::Format(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_and_csv_layout() {
        let mut rep = Report::default();
        rep.push(CheckRecord::at_most("a", "00", 0.5, 1.0));
        rep.push(CheckRecord::skipped("b", "disabled"));
        assert!(rep.all_passed());
        let mut buf = Vec::new();
        rep.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"status\":\"skipped\""));

        let rows = vec![RateRow {
            beta: 16.0,
            e_beta: None,
            c_beta: Some(1.0),
            sup_lambda1: 2.0,
            sup_q: None,
            sup_third: 3.0,
        }];
        let mut buf = Vec::new();
        write_rate_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "beta,e_beta,c_beta,sup_lambda1,sup_q,sup_third\n16.0,,1.0,2.0,,3.0\n");
    }
}

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AuditOutcome {
    Allow,
    Deny,
    /// The call was rejected before any function ran (bad options, unknown
    /// function and the like).
    Error,
}

/// One mediated call. Holds what the caller sent and what was decided, never
/// the content that was released or withheld.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub sequence: u64,
    pub timestamp: DateTime<Utc>,
    pub subject: String,
    pub function: String,
    pub objects: Vec<String>,
    pub options: Vec<(String, String)>,
    pub stdin_hex: String,
    /// SHA-256 of the canonical invocation `decide` saw, or of the raw
    /// options when they did not validate.
    pub options_digest: String,
    pub outcome: AuditOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub atoms_released: usize,
    pub atoms_withheld: usize,
    pub output_bytes: usize,
}

pub(crate) fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFilter {
    pub subject: Option<String>,
    pub function: Option<String>,
    /// Matches a record naming this object, or any atom of this document.
    pub object: Option<String>,
    pub outcome: Option<AuditOutcome>,
    pub since: Option<DateTime<Utc>>,
    pub until: Option<DateTime<Utc>>,
}

impl AuditFilter {
    pub fn matches(&self, r: &AuditRecord) -> bool {
        self.subject.as_ref().is_none_or(|s| *s == r.subject)
            && self.function.as_ref().is_none_or(|f| *f == r.function)
            && self.object.as_ref().is_none_or(|o| {
                r.objects.iter().any(|x| x == o || x.strip_prefix(o.as_str()).is_some_and(|rest| rest.starts_with('/')))
            })
            && self.outcome.is_none_or(|o| o == r.outcome)
            && self.since.is_none_or(|t| r.timestamp >= t)
            && self.until.is_none_or(|t| r.timestamp <= t)
    }
}

/// Append-only record list, optionally mirrored to a JSON-lines file.
#[derive(Debug, Default)]
pub struct AuditLog {
    records: Vec<AuditRecord>,
    sink: Option<(PathBuf, File)>,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Appends to `path`, continuing the sequence of any records already
    /// there.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let records = if path.exists() { read_records(path)? } else { Vec::new() };
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { records, sink: Some((path.to_path_buf(), file)) })
    }

    pub fn next_sequence(&self) -> u64 {
        self.records.last().map_or(1, |r| r.sequence + 1)
    }

    /// Stamps `r` with the next sequence number and appends it.
    pub(crate) fn append(&mut self, mut r: AuditRecord) -> std::io::Result<u64> {
        r.sequence = self.next_sequence();
        if let Some((_, f)) = &mut self.sink {
            let mut line = serde_json::to_string(&r).map_err(std::io::Error::other)?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        let seq = r.sequence;
        self.records.push(r);
        Ok(seq)
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn path(&self) -> Option<&Path> {
        self.sink.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn query(&self, f: &AuditFilter) -> Vec<AuditRecord> {
        self.records.iter().filter(|r| f.matches(r)).cloned().collect()
    }
}

pub fn read_records(path: &Path) -> std::io::Result<Vec<AuditRecord>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(out)
}

/// `true` iff sequence numbers start at 1 and increase by exactly 1.
pub fn is_gap_free(records: &[AuditRecord]) -> bool {
    records.iter().enumerate().all(|(i, r)| r.sequence == i as u64 + 1)
}

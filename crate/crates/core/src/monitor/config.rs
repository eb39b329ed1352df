use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{compose_declared, AuditLog, Identities, Monitor, MonitorError};
use crate::act::PolicyFile;
use crate::adoc::AtomicDocument;
use crate::guarded::{Catalog, Settings};

pub const POLICY_DIR_ENV: &str = "FBAC_POLICY_DIR";

/// Where a monitor finds its state.
///
/// The policy directory holds `*.adoc` documents, `*.policy` files in the
/// tensor policy grammar (per-document or shared; `FUNCTION f∘g n` lines
/// register composites), an optional `identities` file and an optional
/// `settings.json`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorConfig {
    pub policy_dir: PathBuf,
    pub audit_log: Option<PathBuf>,
    pub outbox: Option<PathBuf>,
}

fn cfg_err(path: &Path, message: impl ToString) -> MonitorError {
    MonitorError::Config { path: path.to_path_buf(), message: message.to_string() }
}

fn read(path: &Path) -> Result<String, MonitorError> {
    std::fs::read_to_string(path).map_err(|e| cfg_err(path, e))
}

impl MonitorConfig {
    pub fn new(policy_dir: impl Into<PathBuf>) -> Self {
        Self { policy_dir: policy_dir.into(), audit_log: None, outbox: None }
    }

    /// Uses `FBAC_POLICY_DIR`, falling back to `default`.
    pub fn from_env(default: impl Into<PathBuf>) -> Self {
        Self::new(std::env::var_os(POLICY_DIR_ENV).map_or_else(|| default.into(), PathBuf::from))
    }

    fn files_with(&self, ext: &str) -> Result<Vec<PathBuf>, MonitorError> {
        let dir = std::fs::read_dir(&self.policy_dir).map_err(|e| cfg_err(&self.policy_dir, e))?;
        let mut out = Vec::new();
        for entry in dir {
            let p = entry.map_err(|e| cfg_err(&self.policy_dir, e))?.path();
            if p.is_file() && p.extension().is_some_and(|x| x == ext) {
                out.push(p);
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn load(&self) -> Result<Monitor, MonitorError> {
        self.load_with(|_| Ok(()))
    }

    /// Like [`load`](Self::load), letting `edit` adjust the identities
    /// before the tensor is built.
    pub fn load_with(
        &self,
        edit: impl FnOnce(&mut Identities) -> Result<(), MonitorError>,
    ) -> Result<Monitor, MonitorError> {
        let ids_path = self.policy_dir.join("identities");
        let mut identities =
            if ids_path.exists() { Identities::parse(&read(&ids_path)?)? } else { Identities::default() };
        edit(&mut identities)?;
        let settings_path = self.policy_dir.join("settings.json");
        let settings: Settings = if settings_path.exists() {
            serde_json::from_str(&read(&settings_path)?).map_err(|e| cfg_err(&settings_path, e))?
        } else {
            Settings::default()
        };
        let mut m = load_files(identities, settings, &self.files_with("policy")?, &self.files_with("adoc")?)?;
        if let Some(path) = &self.audit_log {
            m = m.with_audit_log(AuditLog::open(path).map_err(|e| cfg_err(path, e))?);
        }
        if let Some(path) = &self.outbox {
            m = m.with_outbox_file(path.clone());
        }
        Ok(m)
    }
}

/// Builds a monitor from explicit policy and `.adoc` files.
pub fn load_files(
    identities: Identities,
    settings: Settings,
    policy_files: &[PathBuf],
    doc_files: &[PathBuf],
) -> Result<Monitor, MonitorError> {
    let mut policies = Vec::new();
    for p in policy_files {
        policies.push(PolicyFile::parse(&read(p)?).map_err(|e| cfg_err(p, e))?);
    }
    let mut catalog = Catalog::standard();
    compose_declared(&mut catalog, &policies)?;
    let mut documents = BTreeMap::new();
    for p in doc_files {
        let bytes = std::fs::read(p).map_err(|e| cfg_err(p, e))?;
        let d: AtomicDocument = crate::adoc::parse(&bytes, &catalog).map_err(|e| cfg_err(p, e))?;
        if documents.contains_key(&d.id) {
            return Err(cfg_err(p, format!("document `{}` defined twice", d.id)));
        }
        documents.insert(d.id.clone(), d);
    }
    Monitor::new(identities, catalog, documents, policies, settings)
}

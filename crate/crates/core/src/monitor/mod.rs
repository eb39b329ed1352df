//! The reference monitor.
//!
//! Every guarded-function call enters through [`Monitor::invoke`], is
//! decided against an immutable policy snapshot, and leaves exactly one
//! [`AuditRecord`] behind whatever the outcome.
//!
//! Calls that only read run concurrently on the current snapshot. Calls
//! that change documents (the copy variants) and policy reloads run alone,
//! so the audit sequence is always a valid serial order and replaying it
//! reproduces every outcome.

mod audit;
mod authoring;
mod config;
pub mod http;
mod identity;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use chrono::Utc;
use parking_lot::{Mutex, RwLock};
use serde::Serialize;
use thiserror::Error;

pub use audit::{is_gap_free, read_records, AuditFilter, AuditLog, AuditOutcome, AuditRecord};
pub use authoring::{
    defaults_from_questionnaire, derive_coauthor_policy, granted_functions, CoauthorTemplate, PolicyBatch,
    QuestionnaireAnswers, COPY_FUNCTIONS,
};
pub use config::{load_files, MonitorConfig, POLICY_DIR_ENV};
pub use identity::{Identities, Principal, Role};

use crate::act::{AccessTensor, ActError, ApplyMode, ObjectTuple, PolicyFile, SubjectId, COMPOSE_SEPARATOR};
use crate::adoc::{validate_document, AdocError, AtomicDocument};
use crate::guarded::{
    dispatch, redacted_view, Builtin, Catalog, Env, Execution, GuardedError, Implementation, OutboxRecord,
    Output, RenderedView, Request, Settings,
};
use crate::projections::{self, Limits, Projection, ProjectionError, ProjectionKind, TupleRestriction};

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("unauthenticated")]
    Unauthenticated,
    #[error("the `{0}` role may not do this")]
    Forbidden(Role),
    #[error("token listed twice")]
    DuplicateToken,
    #[error("identity file line {line}: {message}")]
    Identity { line: usize, message: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("defaults violate the document's consistency conditions: {0}")]
    InconsistentDefaults(String),
    #[error("removals not granted to the author: {functions:?}")]
    NotASubset { functions: BTreeSet<String> },
    #[error("batch for `{batch}` applied to `{document}`")]
    BatchMismatch { batch: String, document: String },
    #[error("invalid document `{document}`: {report}")]
    InvalidDocument { document: String, report: String },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Guarded(GuardedError),
    #[error(transparent)]
    Adoc(#[from] AdocError),
    #[error(transparent)]
    Act(#[from] ActError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<GuardedError> for MonitorError {
    fn from(e: GuardedError) -> Self {
        match e {
            GuardedError::UnknownFunction(f) => MonitorError::UnknownFunction(f),
            other => MonitorError::Guarded(other),
        }
    }
}

/// Everything a decision depends on, swapped as a unit.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub tensor: AccessTensor,
    pub documents: BTreeMap<String, AtomicDocument>,
    pub settings: Settings,
}

/// The answer to one call. Denials carry a refusal and no output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvokeResponse {
    pub sequence: u64,
    pub allowed: bool,
    pub output: Option<Output>,
    pub options: Vec<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refusal: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocumentSummary {
    pub id: String,
    pub atoms: Vec<String>,
    pub forbidden_functions: BTreeSet<String>,
}

/// Parameters of a projection query; which ones are needed depends on the
/// kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Deserialize)]
pub struct ProjectionQuery {
    pub subject: Option<String>,
    pub function: Option<String>,
    /// Policy-file tuple notation: comma separated ids, `-` for empty.
    pub objects: Option<String>,
    /// Object-list restriction to tuples under this prefix.
    pub prefix: Option<String>,
    #[serde(default)]
    pub uncompressed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayMismatch {
    pub sequence: u64,
    pub recorded: AuditOutcome,
    pub replayed: AuditOutcome,
}

#[derive(Debug)]
pub struct Monitor {
    identities: Identities,
    catalog: Catalog,
    policies: Vec<PolicyFile>,
    state: RwLock<Arc<Snapshot>>,
    gate: RwLock<()>,
    audit: Mutex<AuditLog>,
    outbox: Mutex<(Vec<OutboxRecord>, Option<PathBuf>)>,
}

fn refusal(function: &str) -> String {
    format!("`{function}` is not permitted on the requested objects; ask the document's author for access")
}

/// Builds the merged tensor: catalog functions, identity subjects, every
/// document's atom policies, then the extra policy files.
pub fn build_tensor(
    catalog: &Catalog,
    identities: &Identities,
    documents: &BTreeMap<String, AtomicDocument>,
    policies: &[PolicyFile],
) -> Result<AccessTensor, MonitorError> {
    let mut t = AccessTensor::new();
    catalog.install(&mut t)?;
    for p in identities.principals() {
        if !t.has_subject(p.subject.as_str()) {
            t.create_subject(p.subject.clone())?;
        }
    }
    for d in documents.values() {
        d.install(&mut t)?;
    }
    for p in policies {
        p.apply(&mut t, ApplyMode::Merge)?;
    }
    Ok(t)
}

/// Registers in `catalog` every composite that `policies` declare with a
/// `FUNCTION f∘g n` line.
pub fn compose_declared(catalog: &mut Catalog, policies: &[PolicyFile]) -> Result<(), MonitorError> {
    for p in policies {
        for (_, stmt) in &p.statements {
            if let crate::act::Statement::Function(sig) = stmt {
                if let Some((f, g)) = sig.name.split_once(COMPOSE_SEPARATOR) {
                    if !catalog.contains(&sig.name) {
                        catalog.compose(f, g)?;
                    }
                }
            }
        }
    }
    Ok(())
}

impl Monitor {
    pub fn new(
        identities: Identities,
        mut catalog: Catalog,
        documents: BTreeMap<String, AtomicDocument>,
        policies: Vec<PolicyFile>,
        settings: Settings,
    ) -> Result<Self, MonitorError> {
        compose_declared(&mut catalog, &policies)?;
        for d in documents.values() {
            let report = validate_document(d);
            if !report.is_accepted() {
                return Err(MonitorError::InvalidDocument { document: d.id.clone(), report: report.to_string() });
            }
        }
        let tensor = build_tensor(&catalog, &identities, &documents, &policies)?;
        Ok(Self {
            identities,
            catalog,
            policies,
            state: RwLock::new(Arc::new(Snapshot { tensor, documents, settings })),
            gate: RwLock::new(()),
            audit: Mutex::new(AuditLog::in_memory()),
            outbox: Mutex::new((Vec::new(), None)),
        })
    }

    /// Mirrors audit records to `log` (continuing its sequence).
    pub fn with_audit_log(self, log: AuditLog) -> Self {
        *self.audit.lock() = log;
        self
    }

    /// Appends sent mail to a JSON-lines outbox file.
    pub fn with_outbox_file(self, path: PathBuf) -> Self {
        self.outbox.lock().1 = Some(path);
        self
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn identities(&self) -> &Identities {
        &self.identities
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.state.read().clone()
    }

    pub fn authenticate(&self, token: &str) -> Result<Principal, MonitorError> {
        self.identities.authenticate(token)
    }

    /// Runs one guarded function for `p`. Denials are `Ok` with
    /// `allowed == false`; every path, errors included, is audited.
    pub fn invoke(&self, p: &Principal, req: &Request) -> Result<InvokeResponse, MonitorError> {
        if self.identities.authenticate(&p.token)? != *p {
            return Err(MonitorError::Unauthenticated);
        }
        self.invoke_as(&p.subject, req)
    }

    fn mutates(&self, function: &str) -> bool {
        self.catalog
            .get(function)
            .is_ok_and(|s| matches!(s.implementation, Implementation::Builtin(Builtin::Copy(_))))
    }

    fn invoke_as(&self, subject: &SubjectId, req: &Request) -> Result<InvokeResponse, MonitorError> {
        let (_shared, _exclusive);
        if self.mutates(&req.function) {
            _exclusive = self.gate.write();
        } else {
            _shared = self.gate.read();
        }
        let snap = self.snapshot();
        let env = Env {
            tensor: &snap.tensor,
            documents: &snap.documents,
            catalog: &self.catalog,
            settings: &snap.settings,
        };
        let result = dispatch(&env, subject, req).map_err(MonitorError::from);
        let result = match result {
            Ok(ex) if ex.allowed => self.publish(&snap, &ex).map(|()| ex),
            other => other,
        };
        let mut rec = AuditRecord {
            sequence: 0,
            timestamp: Utc::now(),
            subject: subject.to_string(),
            function: req.function.clone(),
            objects: req.args.clone(),
            options: req.options.clone(),
            stdin_hex: hex::encode(&req.stdin),
            options_digest: String::new(),
            outcome: AuditOutcome::Error,
            error: None,
            atoms_released: 0,
            atoms_withheld: 0,
            output_bytes: 0,
        };
        match &result {
            Ok(ex) => {
                rec.options_digest = audit::digest(&ex.options.invocation(&req.stdin).canonical());
                if let Some(out) = ex.output.as_ref().filter(|_| ex.allowed) {
                    rec.outcome = AuditOutcome::Allow;
                    (rec.atoms_released, rec.atoms_withheld) = out.atom_counts();
                    rec.output_bytes = out.byte_len();
                } else {
                    rec.outcome = AuditOutcome::Deny;
                }
            }
            Err(e) => {
                let raw: Vec<String> = req.options.iter().map(|(k, v)| format!("{k}={v}")).collect();
                rec.options_digest = audit::digest(&raw.join(";"));
                rec.error = Some(e.to_string());
            }
        }
        let sequence = self.audit.lock().append(rec)?;
        let ex = result?;
        Ok(InvokeResponse {
            sequence,
            allowed: ex.allowed,
            refusal: (!ex.allowed).then(|| refusal(&req.function)),
            options: ex.options.values,
            output: ex.output,
        })
    }

    /// Makes an allowed call's effects visible. Runs under the exclusive
    /// gate whenever documents change.
    fn publish(&self, snap: &Snapshot, ex: &Execution) -> Result<(), MonitorError> {
        if !ex.effects.documents.is_empty() {
            let mut documents = snap.documents.clone();
            for d in &ex.effects.documents {
                documents.insert(d.id.clone(), d.clone());
            }
            let tensor = build_tensor(&self.catalog, &self.identities, &documents, &self.policies)?;
            *self.state.write() = Arc::new(Snapshot { tensor, documents, settings: snap.settings.clone() });
        }
        if !ex.effects.outbox.is_empty() {
            let mut outbox = self.outbox.lock();
            for r in &ex.effects.outbox {
                if let Some(path) = &outbox.1 {
                    r.append_to(path)?;
                }
                outbox.0.push(r.clone());
            }
        }
        Ok(())
    }

    /// `read` on the whole document. A denial still shows the document's
    /// shape: every atom as a marker.
    pub fn view(&self, p: &Principal, document: &str) -> Result<(u64, RenderedView), MonitorError> {
        let r = self.invoke(p, &Request::new("read").arg(document))?;
        match r.output {
            Some(Output::View(v)) => Ok((r.sequence, v)),
            _ => {
                let snap = self.snapshot();
                let d = snap.documents.get(document).ok_or_else(|| MonitorError::UnknownDocument(document.into()))?;
                Ok((r.sequence, redacted_view(&snap.tensor, &p.subject, d)?))
            }
        }
    }

    pub fn documents(&self) -> Vec<DocumentSummary> {
        self.snapshot()
            .documents
            .values()
            .map(|d| DocumentSummary {
                id: d.id.clone(),
                atoms: d.available_atoms().iter().map(|a| a.id.clone()).collect(),
                forbidden_functions: d.forbidden_functions.clone(),
            })
            .collect()
    }

    /// The caller's own function list for one atom.
    pub fn function_list(&self, p: &Principal, document: &str, atom: &str) -> Result<projections::FunctionList, MonitorError> {
        let snap = self.snapshot();
        let d = snap.documents.get(document).ok_or_else(|| MonitorError::UnknownDocument(document.into()))?;
        let o = ObjectTuple::single(d.object_ref(atom)?);
        if d.atom(atom).is_none() {
            return Err(AdocError::UnknownAtom(atom.into()).into());
        }
        Ok(projections::function_list(&snap.tensor, p.subject.as_str(), &o)?)
    }

    pub fn projection(&self, kind: ProjectionKind, q: &ProjectionQuery) -> Result<Projection, MonitorError> {
        let snap = self.snapshot();
        let t = &snap.tensor;
        let need = |v: &Option<String>, what: &str| {
            v.clone().ok_or_else(|| MonitorError::BadRequest(format!("`{what}` is required for this projection")))
        };
        let tuple = |v: &Option<String>| -> Result<ObjectTuple, MonitorError> {
            Ok(ObjectTuple::parse(&need(v, "objects")?)?)
        };
        let compress = !q.uncompressed;
        let limits = Limits::default();
        Ok(match kind {
            ProjectionKind::Authz => Projection::Authz(projections::authorization_matrix(t, &tuple(&q.objects)?, compress)?),
            ProjectionKind::Cap => {
                Projection::Cap(projections::capability_matrix(t, &need(&q.subject, "subject")?, compress, limits)?)
            }
            ProjectionKind::Acm => {
                Projection::Acm(projections::per_function_acm(t, &need(&q.function, "function")?, compress, limits)?)
            }
            ProjectionKind::Flist => {
                Projection::Flist(projections::function_list(t, &need(&q.subject, "subject")?, &tuple(&q.objects)?)?)
            }
            ProjectionKind::Slist => Projection::Slist(projections::subject_list(
                t,
                &need(&q.function, "function")?,
                &tuple(&q.objects)?,
                None,
            )?),
            ProjectionKind::Olist => {
                let restriction = q.prefix.clone().map(TupleRestriction::Prefix);
                Projection::Olist(projections::object_list(
                    t,
                    &need(&q.subject, "subject")?,
                    &need(&q.function, "function")?,
                    restriction.as_ref(),
                    limits,
                )?)
            }
        })
    }

    pub fn audit_query(&self, f: &AuditFilter) -> Vec<AuditRecord> {
        self.audit.lock().query(f)
    }

    pub fn audit_len(&self) -> usize {
        self.audit.lock().records().len()
    }

    pub fn outbox(&self) -> Vec<OutboxRecord> {
        self.outbox.lock().0.clone()
    }

    /// Subjects that may run `function` on `objects` and actually did.
    pub fn suspects(&self, function: &str, objects: &ObjectTuple) -> Result<BTreeSet<SubjectId>, MonitorError> {
        let granted = projections::subject_list(&self.snapshot().tensor, function, objects, None)?.granted();
        let names: Vec<String> = objects.iter().map(|o| o.as_str().to_string()).collect();
        let invoked: BTreeSet<String> = self
            .audit
            .lock()
            .records()
            .iter()
            .filter(|r| r.function == function && r.outcome == AuditOutcome::Allow && covers(&r.objects, &names))
            .map(|r| r.subject.clone())
            .collect();
        Ok(granted.into_iter().filter(|s| invoked.contains(s.as_str())).collect())
    }

    /// Applies a policy batch to one document and swaps in the rebuilt
    /// snapshot. The new document must pass validation.
    pub fn apply_batch(&self, batch: &PolicyBatch) -> Result<(), MonitorError> {
        let _exclusive = self.gate.write();
        let snap = self.snapshot();
        let d = snap.documents.get(&batch.document).ok_or_else(|| MonitorError::UnknownDocument(batch.document.clone()))?;
        let next = batch.apply(d)?;
        let report = validate_document(&next);
        if !report.is_accepted() {
            return Err(MonitorError::InvalidDocument { document: next.id.clone(), report: report.to_string() });
        }
        let mut documents = snap.documents.clone();
        documents.insert(next.id.clone(), next);
        let mut settings = snap.settings.clone();
        if let Some(w) = &batch.watermark {
            settings.watermarks.insert(batch.document.clone(), w.clone());
        }
        let tensor = build_tensor(&self.catalog, &self.identities, &documents, &self.policies)?;
        *self.state.write() = Arc::new(Snapshot { tensor, documents, settings });
        Ok(())
    }

    /// Replaces the whole snapshot, e.g. after reloading policy files.
    pub fn reload(&self, documents: BTreeMap<String, AtomicDocument>, settings: Settings) -> Result<(), MonitorError> {
        let _exclusive = self.gate.write();
        let tensor = build_tensor(&self.catalog, &self.identities, &documents, &self.policies)?;
        *self.state.write() = Arc::new(Snapshot { tensor, documents, settings });
        Ok(())
    }

    /// Re-runs `records` in sequence order and reports every call whose
    /// outcome differs. Meant for a fresh monitor built from the same
    /// configuration as the one that produced the records.
    pub fn replay(&self, records: &[AuditRecord]) -> Vec<ReplayMismatch> {
        let mut out = Vec::new();
        for r in records {
            let replayed = match (SubjectId::new(&r.subject), hex::decode(&r.stdin_hex)) {
                (Ok(s), Ok(stdin)) => {
                    let req = Request { function: r.function.clone(), args: r.objects.clone(), options: r.options.clone(), stdin };
                    match self.invoke_as(&s, &req) {
                        Ok(resp) if resp.allowed => AuditOutcome::Allow,
                        Ok(_) => AuditOutcome::Deny,
                        Err(_) => AuditOutcome::Error,
                    }
                }
                _ => AuditOutcome::Error,
            };
            if replayed != r.outcome {
                out.push(ReplayMismatch { sequence: r.sequence, recorded: r.outcome, replayed });
            }
        }
        out
    }
}

/// `true` iff the call's arguments name every object in `wanted` (a
/// document argument covers all of its atoms).
fn covers(args: &[String], wanted: &[String]) -> bool {
    wanted.iter().all(|w| {
        args.iter().any(|a| a == w || w.strip_prefix(a.as_str()).is_some_and(|rest| rest.starts_with('/')))
    })
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::{Builtin, Catalog, CopyKind, Implementation, ResolvedOptions};
use super::copy::{copy_as, AtomRange, CopyResult, CopyVariant};
use super::render::{email_as, print_as, render, Gate, OutboxRecord, PrintArtifact, RenderedView};
use super::search::{search_atoms, search_piped, search_standard_as, SearchOptions, SearchResult};
use super::{GuardedError, DEFAULT_PAGE_LINES};
use crate::act::{AccessTensor, SubjectId};
use crate::adoc::AtomicDocument;

/// Deployment settings the functions read but callers cannot override.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settings {
    pub page_lines: usize,
    /// Always copied on outgoing mail.
    pub policy_cc: String,
    /// Per-document watermark templates; `{subject}` is replaced by the
    /// printing subject. Documents without one use the subject id.
    pub watermarks: BTreeMap<String, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            page_lines: DEFAULT_PAGE_LINES,
            policy_cc: "supervisor@example.org".to_string(),
            watermarks: BTreeMap::new(),
        }
    }
}

/// A read-only view of everything a function may consult.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub tensor: &'a AccessTensor,
    pub documents: &'a BTreeMap<String, AtomicDocument>,
    pub catalog: &'a Catalog,
    pub settings: &'a Settings,
}

/// One function call. `args` name documents (`doc`) or atoms
/// (`doc/atom`); `options` are validated against the function's schema.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub function: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub options: Vec<(String, String)>,
    #[serde(default)]
    pub stdin: Vec<u8>,
}

impl Request {
    pub fn new(function: impl Into<String>) -> Self {
        Self { function: function.into(), ..Self::default() }
    }

    pub fn arg(mut self, a: impl Into<String>) -> Self {
        self.args.push(a.into());
        self
    }

    pub fn option(mut self, k: impl Into<String>, v: impl Into<String>) -> Self {
        self.options.push((k.into(), v.into()));
        self
    }

    pub fn stdin(mut self, bytes: impl Into<Vec<u8>>) -> Self {
        self.stdin = bytes.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Output {
    View(RenderedView),
    Search(SearchResult),
    Print(PrintArtifact),
    Email(OutboxRecord),
    Copy(CopyResult),
}

impl Output {
    /// Human-readable rendering.
    pub fn to_text(&self) -> String {
        match self {
            Output::View(v) => v.to_text(),
            Output::Search(r) => r.to_text(),
            Output::Print(p) => p.text.clone(),
            Output::Email(e) => format!("To: {}\nCc: {}\n\n{}", e.to.join(", "), e.cc.join(", "), e.body),
            Output::Copy(c) => {
                let mut s = format!("copied into {}: {}\n", c.dest_document, c.inserted_atoms.join(", "));
                s.push_str(&c.payload);
                s.push('\n');
                s
            }
        }
    }

    /// What a pipeline hands to its next stage.
    pub fn payload(&self) -> String {
        match self {
            Output::View(v) => v.to_text(),
            Output::Search(r) => r.to_plain(),
            Output::Print(p) => p.text.clone(),
            Output::Email(e) => e.body.clone(),
            Output::Copy(c) => c.payload.clone(),
        }
    }

    /// Size of the content this output released.
    pub fn byte_len(&self) -> usize {
        self.payload().len()
    }

    /// Atoms released with content and atoms withheld.
    pub fn atom_counts(&self) -> (usize, usize) {
        match self {
            Output::View(v) => (v.content_atoms().len(), v.marker_count()),
            Output::Search(r) => (r.searched, r.denied),
            Output::Print(p) => (p.printed, p.withheld),
            Output::Email(e) => (e.atoms.len(), 0),
            Output::Copy(c) => (c.source_atoms.len(), 0),
        }
    }
}

/// Changes a caller must publish after an allowed call.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Effects {
    pub documents: Vec<AtomicDocument>,
    pub outbox: Vec<OutboxRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Execution {
    pub allowed: bool,
    /// `None` exactly when denied.
    pub output: Option<Output>,
    pub options: ResolvedOptions,
    #[serde(skip)]
    pub effects: Effects,
}

impl Execution {
    fn denied(options: ResolvedOptions) -> Self {
        Self { allowed: false, output: None, options, effects: Effects::default() }
    }

    fn allowed(options: ResolvedOptions, output: Output, effects: Effects) -> Self {
        Self { allowed: true, output: Some(output), options, effects }
    }
}

enum Target<'a> {
    Document(&'a AtomicDocument),
    Atom(&'a AtomicDocument, &'a str),
}

fn target<'a>(env: &Env<'a>, arg: &'a str) -> Option<Target<'a>> {
    match arg.split_once('/') {
        None => env.documents.get(arg).map(Target::Document),
        Some((d, a)) => {
            let doc = env.documents.get(d)?;
            doc.atom(a)?;
            Some(Target::Atom(doc, a))
        }
    }
}

fn expect_args(req: &Request, range: std::ops::RangeInclusive<usize>, what: &str) -> Result<(), GuardedError> {
    if range.contains(&req.args.len()) {
        Ok(())
    } else {
        Err(GuardedError::BadArguments { expected: what.to_string(), got: req.args.len() })
    }
}

/// Runs `req` for `s`: validates options, consults `decide` for every atom
/// touched and runs the function on what was allowed. Nonexistent targets
/// are indistinguishable from forbidden ones.
pub fn dispatch(env: &Env<'_>, s: &SubjectId, req: &Request) -> Result<Execution, GuardedError> {
    let spec = env.catalog.get(&req.function)?;
    let opts = env.catalog.resolve_options(&req.function, &req.options)?;
    match &spec.implementation {
        Implementation::Builtin(b) => {
            let inv = opts.invocation(&req.stdin);
            run_builtin(env, s, *b, (&req.function, &inv), false, req, &opts)
        }
        Implementation::Composite { outer, inner } => {
            let outer_spec = env.catalog.get(outer)?;
            if outer_spec.implementation != Implementation::Builtin(Builtin::SearchStandard) {
                return Err(GuardedError::NotComposable(req.function.clone()));
            }
            let Implementation::Builtin(inner_b) = env.catalog.get(inner)?.implementation else {
                return Err(GuardedError::NotComposable(req.function.clone()));
            };
            // The inner stage is authorized under the composite's own name
            // and sees the composite's full invocation.
            let inv = opts.invocation(&req.stdin);
            let inner_opts = env.catalog.project_options(inner, &opts)?;
            let first = run_builtin(env, s, inner_b, (&req.function, &inv), true, req, &inner_opts)?;
            let Some(out) = first.output else {
                return Ok(Execution::denied(opts));
            };
            let outer_opts = SearchOptions::from_resolved(&env.catalog.project_options(outer, &opts)?);
            let result = search_piped(out.payload().as_bytes(), &outer_opts)?;
            Ok(Execution::allowed(opts, Output::Search(result), Effects::default()))
        }
    }
}

fn run_builtin(
    env: &Env<'_>,
    s: &SubjectId,
    b: Builtin,
    gate: Gate<'_>,
    composite: bool,
    req: &Request,
    opts: &ResolvedOptions,
) -> Result<Execution, GuardedError> {
    let t = env.tensor;
    let denied_or = |r: Result<Execution, GuardedError>| match r {
        Err(GuardedError::Denied) => Ok(Execution::denied(opts.clone())),
        other => other,
    };
    match b {
        Builtin::SearchStandard => {
            expect_args(req, 0..=0, "0")?;
            let so = SearchOptions::from_resolved(opts);
            let r = search_standard_as(t, s, gate, &req.stdin, &so)?;
            if r.searched == 0 {
                return Ok(Execution::denied(opts.clone()));
            }
            Ok(Execution::allowed(opts.clone(), Output::Search(r), Effects::default()))
        }
        Builtin::Read | Builtin::Search | Builtin::Print => {
            expect_args(req, 1..=1, "1")?;
            let Some(tgt) = target(env, &req.args[0]) else {
                return Ok(Execution::denied(opts.clone()));
            };
            let (d, only) = match tgt {
                Target::Document(d) => (d, None),
                Target::Atom(d, a) => (d, Some(a)),
            };
            match b {
                Builtin::Read => {
                    let ids = only.map(|a| vec![a.to_string()]);
                    let v = render(t, s, d, ids.as_deref(), &[gate])?;
                    if v.content_atoms().is_empty() {
                        return Ok(Execution::denied(opts.clone()));
                    }
                    Ok(Execution::allowed(opts.clone(), Output::View(v), Effects::default()))
                }
                Builtin::Search => {
                    let so = SearchOptions::from_resolved(opts);
                    let r = search_atoms(t, s, d, only, &so, gate)?;
                    if r.searched == 0 {
                        return Ok(Execution::denied(opts.clone()));
                    }
                    Ok(Execution::allowed(opts.clone(), Output::Search(r), Effects::default()))
                }
                _ => {
                    let mark = env
                        .settings
                        .watermarks
                        .get(&d.id)
                        .map_or_else(|| s.to_string(), |w| w.replace("{subject}", s.as_str()));
                    denied_or(
                        print_as(t, s, d, gate, !composite, &mark, env.settings.page_lines)
                            .map(|p| Execution::allowed(opts.clone(), Output::Print(p), Effects::default())),
                    )
                }
            }
        }
        Builtin::Email => {
            expect_args(req, 1..=usize::MAX, "1 or more")?;
            let mut doc: Option<&AtomicDocument> = None;
            let mut atoms = Vec::new();
            for a in &req.args {
                let Some(tgt) = target(env, a) else {
                    return Ok(Execution::denied(opts.clone()));
                };
                let (d, atom) = match tgt {
                    Target::Document(d) => (d, None),
                    Target::Atom(d, a) => (d, Some(a)),
                };
                if doc.is_some_and(|x| x.id != d.id) {
                    return Err(GuardedError::BadArguments { expected: "atoms of one document".into(), got: req.args.len() });
                }
                doc = Some(d);
                if let Some(a) = atom {
                    atoms.push(a.to_string());
                }
            }
            let d = doc.expect("at least one argument");
            denied_or(email_as(t, s, d, gate, !composite, &atoms, opts, &env.settings.policy_cc).map(|r| {
                let effects = Effects { documents: Vec::new(), outbox: vec![r.clone()] };
                Execution::allowed(opts.clone(), Output::Email(r), effects)
            }))
        }
        Builtin::Copy(kind) => {
            expect_args(req, 1..=2, "1 or 2")?;
            let ends: Vec<(&str, &str)> = req.args.iter().filter_map(|a| a.split_once('/')).collect();
            if ends.len() != req.args.len() {
                return Err(GuardedError::InvalidRange("copy arguments name atoms: <doc>/<atom>".into()));
            }
            let (doc_id, first) = ends[0];
            let (last_doc, last) = *ends.last().expect("non-empty");
            if last_doc != doc_id {
                return Err(GuardedError::InvalidRange("both ends must be in one document".into()));
            }
            let Some(src) = env.documents.get(doc_id) else {
                return Ok(Execution::denied(opts.clone()));
            };
            let dest_id = opts.text("dest");
            let dest = if dest_id.is_empty() || dest_id == src.id {
                src.clone()
            } else {
                match env.documents.get(dest_id) {
                    Some(d) => d.clone(),
                    None => AtomicDocument::new(dest_id)?,
                }
            };
            let variant = match kind {
                CopyKind::ByteRestricted => CopyVariant::ByteRestricted { max_bytes: as_usize(opts.int("max_bytes")) },
                CopyKind::CharacterLimited => CopyVariant::CharacterLimited { max_chars: as_usize(opts.int("max_chars")) },
                CopyKind::SensitiveWordExclusion => CopyVariant::SensitiveWordExclusion { blocklist: opts.list("blocklist") },
                CopyKind::WithCitation => CopyVariant::WithCitation,
            };
            let range = AtomRange::new(first, last);
            denied_or(copy_as(t, s, gate, src, &range, &dest, &variant).map(|(res, updated)| {
                let effects = Effects { documents: vec![updated], outbox: Vec::new() };
                Execution::allowed(opts.clone(), Output::Copy(res), effects)
            }))
        }
    }
}

fn as_usize(n: u64) -> usize {
    usize::try_from(n).unwrap_or(usize::MAX)
}

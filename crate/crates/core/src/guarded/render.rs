use std::io::Write as _;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::catalog::ResolvedOptions;
use super::search::permits;
use super::{GuardedError, BLURRED_IMAGE_MARKER, REDACTED_MARKER};
use crate::act::{AccessTensor, Invocation, SubjectId};
use crate::adoc::{Atom, AtomKind, AtomicDocument};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", content = "text", rename_all = "snake_case")]
pub enum SegmentBody {
    Content(String),
    Redacted,
    BlurredImage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub atom: String,
    pub kind: AtomKind,
    pub body: SegmentBody,
}

impl Segment {
    pub fn text(&self) -> &str {
        match &self.body {
            SegmentBody::Content(c) => c,
            SegmentBody::Redacted => REDACTED_MARKER,
            SegmentBody::BlurredImage => BLURRED_IMAGE_MARKER,
        }
    }

    pub fn is_content(&self) -> bool {
        matches!(self.body, SegmentBody::Content(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedView {
    pub document: String,
    pub segments: Vec<Segment>,
}

impl RenderedView {
    /// Segment texts, one paragraph each, separated by blank lines.
    pub fn to_text(&self) -> String {
        let mut s = self.segments.iter().map(Segment::text).collect::<Vec<_>>().join("\n\n");
        s.push('\n');
        s
    }

    pub fn lines(&self) -> Vec<String> {
        self.segments
            .iter()
            .enumerate()
            .flat_map(|(i, seg)| {
                let sep = (i > 0).then(String::new);
                sep.into_iter().chain(seg.text().lines().map(str::to_string).collect::<Vec<_>>())
            })
            .collect()
    }

    pub fn content_atoms(&self) -> Vec<&str> {
        self.segments.iter().filter(|s| s.is_content()).map(|s| s.atom.as_str()).collect()
    }

    pub fn marker_count(&self) -> usize {
        self.segments.iter().filter(|s| !s.is_content()).count()
    }
}

fn segment(a: &Atom, visible: bool) -> Segment {
    let body = match (visible, a.kind) {
        (true, _) => SegmentBody::Content(a.content.clone()),
        (false, AtomKind::Text) => SegmentBody::Redacted,
        (false, AtomKind::ImageRef) => SegmentBody::BlurredImage,
    };
    Segment { atom: a.id.clone(), kind: a.kind, body }
}

/// A function name with the invocation `decide` sees for it.
pub(crate) type Gate<'a> = (&'a str, &'a Invocation);

/// Renders the atoms in `ids` (all available atoms when `None`), showing
/// content only where every gate in `need` allows.
pub(crate) fn render(
    t: &AccessTensor,
    s: &SubjectId,
    d: &AtomicDocument,
    ids: Option<&[String]>,
    need: &[Gate<'_>],
) -> Result<RenderedView, GuardedError> {
    let mut segments = Vec::new();
    for a in d.available_atoms() {
        if ids.is_some_and(|ids| !ids.contains(&a.id)) {
            continue;
        }
        let o = [d.object_ref(&a.id)?];
        let visible = need.iter().all(|(f, inv)| permits(t, s, f, &o, inv));
        segments.push(segment(a, visible));
    }
    Ok(RenderedView { document: d.id.clone(), segments })
}

/// Content for atoms `s` may `read`, markers for the rest, in document
/// order. Unavailable atoms are omitted.
pub fn redacted_view(t: &AccessTensor, s: &SubjectId, d: &AtomicDocument) -> Result<RenderedView, GuardedError> {
    render(t, s, d, None, &[("read", &Invocation::default())])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrintArtifact {
    pub document: String,
    pub watermark: String,
    pub page_lines: usize,
    pub pages: usize,
    pub text: String,
    /// Atoms printed with content.
    pub printed: usize,
    /// Atoms printed as markers.
    pub withheld: usize,
}

impl PrintArtifact {
    /// The rendered lines with watermark lines removed.
    pub fn body_lines(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for (i, l) in self.text.lines().enumerate() {
            if i % (self.page_lines + 1) != 0 {
                out.push(l);
            }
        }
        out
    }
}

/// Prints the view with `watermark` on top of every page of `page_lines`
/// lines. An atom shows content only if both `print` and `read` are
/// allowed. Denied outright when the document forbids `print` or no atom
/// may be printed.
pub fn watermark_print(
    t: &AccessTensor,
    s: &SubjectId,
    d: &AtomicDocument,
    watermark: &str,
    page_lines: usize,
) -> Result<PrintArtifact, GuardedError> {
    print_as(t, s, d, ("print", &Invocation::default()), true, watermark, page_lines)
}

/// `gate` must allow an atom for it to print with content, and so must
/// `read` when `with_read` is set.
pub(crate) fn print_as(
    t: &AccessTensor,
    s: &SubjectId,
    d: &AtomicDocument,
    gate: Gate<'_>,
    with_read: bool,
    watermark: &str,
    page_lines: usize,
) -> Result<PrintArtifact, GuardedError> {
    if d.forbidden_functions.contains("print") {
        return Err(GuardedError::Denied);
    }
    let (function, inv) = gate;
    let printable = d
        .available_atoms()
        .iter()
        .any(|a| d.object_ref(&a.id).is_ok_and(|o| permits(t, s, function, &[o], inv)));
    if !printable {
        return Err(GuardedError::Denied);
    }
    let read_inv = Invocation::default();
    let mut need = vec![gate];
    if with_read {
        need.push(("read", &read_inv));
    }
    let view = render(t, s, d, None, &need)?;
    let page_lines = page_lines.max(1);
    let watermark: String = watermark.chars().map(|c| if c.is_control() { ' ' } else { c }).collect();
    let lines = view.lines();
    let mut text = String::new();
    let mut pages = 0;
    for chunk in lines.chunks(page_lines) {
        pages += 1;
        text.push_str(&watermark);
        text.push('\n');
        for l in chunk {
            text.push_str(l);
            text.push('\n');
        }
    }
    if pages == 0 {
        pages = 1;
        text.push_str(&watermark);
        text.push('\n');
    }
    let printed = view.content_atoms().len();
    Ok(PrintArtifact {
        document: d.id.clone(),
        watermark,
        page_lines,
        pages,
        text,
        printed,
        withheld: view.marker_count(),
    })
}

/// `local@domain` with a conservative character set.
pub fn validate_address(a: &str) -> Result<(), GuardedError> {
    let bad = || GuardedError::InvalidAddress(a.to_string());
    let (local, domain) = a.split_once('@').ok_or_else(bad)?;
    let local_ok = !local.is_empty()
        && !local.starts_with('.')
        && !local.ends_with('.')
        && !local.contains("..")
        && local.chars().all(|c| c.is_ascii_alphanumeric() || "!#$%&'*+/=?^_`{|}~.-".contains(c));
    let domain_ok = !domain.is_empty()
        && domain.split('.').all(|label| {
            !label.is_empty()
                && !label.starts_with('-')
                && !label.ends_with('-')
                && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        });
    if local_ok && domain_ok {
        Ok(())
    } else {
        Err(bad())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxRecord {
    pub from: String,
    pub to: Vec<String>,
    pub cc: Vec<String>,
    pub document: String,
    pub atoms: Vec<String>,
    pub body: String,
    pub timestamp: DateTime<Utc>,
}

impl OutboxRecord {
    /// Appends the record as one JSON line.
    pub fn append_to(&self, path: &Path) -> std::io::Result<()> {
        let mut line = serde_json::to_string(self).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        f.write_all(line.as_bytes())
    }

    pub fn timestamp_rfc3339(&self) -> String {
        self.timestamp.to_rfc3339_opts(SecondsFormat::Millis, true)
    }
}

fn push_unique(list: &mut Vec<String>, a: &str) {
    if !list.iter().any(|x| x.eq_ignore_ascii_case(a)) {
        list.push(a.to_string());
    }
}

/// Builds an outbox record for mailing `atoms` of `d` (all available atoms
/// when empty). Every atom needs `email`; the body shows content where
/// `read` is allowed and markers elsewhere. `policy_cc` is always copied.
pub fn force_cc_email(
    t: &AccessTensor,
    s: &SubjectId,
    d: &AtomicDocument,
    atoms: &[String],
    to: &[String],
    cc: &[String],
    policy_cc: &str,
) -> Result<OutboxRecord, GuardedError> {
    let opts = ResolvedOptions { values: vec![("to".into(), to.join(",")), ("cc".into(), cc.join(","))] };
    email_as(t, s, d, ("email", &opts.invocation(b"")), true, atoms, &opts, policy_cc)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn email_as(
    t: &AccessTensor,
    s: &SubjectId,
    d: &AtomicDocument,
    gate: Gate<'_>,
    body_read: bool,
    atoms: &[String],
    opts: &ResolvedOptions,
    policy_cc: &str,
) -> Result<OutboxRecord, GuardedError> {
    let to = opts.list("to");
    if to.is_empty() {
        return Err(GuardedError::InvalidAddress(String::new()));
    }
    for a in to.iter().chain(opts.list("cc").iter()).map(String::as_str).chain([policy_cc]) {
        validate_address(a)?;
    }
    let ids: Vec<String> = if atoms.is_empty() {
        d.available_atoms().iter().map(|a| a.id.clone()).collect()
    } else {
        atoms.to_vec()
    };
    let (function, inv) = gate;
    for id in &ids {
        if !d.is_available(id) {
            return Err(GuardedError::Denied);
        }
        let o = d.object_ref(id)?;
        if !permits(t, s, function, &[o], inv) {
            return Err(GuardedError::Denied);
        }
    }
    let read_inv = Invocation::default();
    let body_gate = if body_read { ("read", &read_inv) } else { gate };
    let view = render(t, s, d, Some(&ids), &[body_gate])?;
    let mut cc_out = Vec::new();
    for a in opts.list("cc") {
        push_unique(&mut cc_out, &a);
    }
    push_unique(&mut cc_out, policy_cc);
    let mut to_out = Vec::new();
    for a in &to {
        push_unique(&mut to_out, a);
    }
    Ok(OutboxRecord {
        from: s.to_string(),
        to: to_out,
        cc: cc_out,
        document: d.id.clone(),
        atoms: view.segments.iter().map(|s| s.atom.clone()).collect(),
        body: view.to_text(),
        timestamp: Utc::now(),
    })
}

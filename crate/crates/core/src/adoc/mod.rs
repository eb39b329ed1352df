//! Atomic Documents: documents split into undividable atoms, each carrying
//! its own function-list policy, optional classification and links.
//!
//! Documents are values. Every edit returns a new document; atom ids never
//! change once assigned. Removal leaves a tombstone so links into the removed
//! atom keep resolving and can be restored.

mod format;
pub mod xml;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::act::{AccessTensor, ActError, ObjectRef, ObjectTuple, SubjectId, TensorEntry};
use crate::lattice::SecurityClass;

pub use format::{parse, serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdocError {
    #[error("malformed document at {line}:{col}: {message}")]
    MalformedDocument { line: usize, col: usize, message: String },
    #[error("duplicate atom id `{0}`")]
    DuplicateAtomId(String),
    #[error("atom `{atom}` links to unknown atom `{target}`")]
    DanglingLink { atom: String, target: String },
    #[error("atom `{0}` links to itself")]
    SelfLink(String),
    #[error("unknown function `{function}`")]
    UnknownFunctionName { function: String },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("atom `{0}` or its document has no classification")]
    MissingClassification(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("image atom `{atom}` must hold a media URI, got `{uri}`")]
    InvalidImageUri { atom: String, uri: String },
    #[error("policy of atom `{atom}`: {message}")]
    Policy { atom: String, message: String },
    #[error(transparent)]
    Act(#[from] ActError),
}

/// Function names and arities known to the caller; parsing rejects policies
/// that mention anything else.
pub trait FunctionRegistry {
    fn arity(&self, name: &str) -> Option<usize>;
}

impl FunctionRegistry for AccessTensor {
    fn arity(&self, name: &str) -> Option<usize> {
        self.function(name).ok().map(|f| f.arity)
    }
}

impl FunctionRegistry for BTreeMap<String, usize> {
    fn arity(&self, name: &str) -> Option<usize> {
        self.get(name).copied()
    }
}

/// Atom and document ids: tokens without `/`, which separates the two in
/// object references.
pub fn is_valid_local_id(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

fn check_local_id(s: &str) -> Result<(), AdocError> {
    if is_valid_local_id(s) {
        Ok(())
    } else {
        Err(AdocError::InvalidIdentifier(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomKind {
    Text,
    ImageRef,
}

impl AtomKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AtomKind::Text => "text",
            AtomKind::ImageRef => "image-ref",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cascade {
    UnavailableOnRemove,
    None,
}

impl Cascade {
    pub fn as_str(self) -> &'static str {
        match self {
            Cascade::UnavailableOnRemove => "unavailable-on-remove",
            Cascade::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomLink {
    /// An atom id in the same document, or `<doc>/<atom>` for another one.
    pub target: String,
    pub relation: String,
    pub cascade: Cascade,
}

impl AtomLink {
    pub fn new(target: impl Into<String>, relation: impl Into<String>, cascade: Cascade) -> Result<Self, AdocError> {
        let target = target.into();
        let relation = relation.into();
        let target_ok = match target.split_once('/') {
            Some((d, a)) => is_valid_local_id(d) && is_valid_local_id(a),
            None => is_valid_local_id(&target),
        };
        if !target_ok {
            return Err(AdocError::InvalidIdentifier(target));
        }
        check_local_id(&relation)?;
        Ok(Self { target, relation, cascade })
    }

    /// The `(document, atom)` pair of a cross-document target.
    pub fn external(&self) -> Option<(&str, &str)> {
        self.target.split_once('/')
    }
}

/// One line of an atom's function-list policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolicyEntry {
    pub subject: SubjectId,
    pub function: String,
    pub objects: ObjectTuple,
    pub value: TensorEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Atom {
    pub id: String,
    pub kind: AtomKind,
    /// Text for text atoms, a media URI for image atoms.
    pub content: String,
    pub policy: Vec<PolicyEntry>,
    pub classification: Option<SecurityClass>,
    pub links: Vec<AtomLink>,
    pub removed: bool,
}

fn is_media_uri(s: &str) -> bool {
    !s.is_empty()
        && !s.chars().any(|c| c.is_whitespace() || c.is_control())
        && !s.get(..5).is_some_and(|p| p.eq_ignore_ascii_case("data:"))
}

impl Atom {
    pub fn text(id: impl Into<String>, content: impl Into<String>) -> Result<Self, AdocError> {
        Self::build(id.into(), AtomKind::Text, content.into())
    }

    pub fn image(id: impl Into<String>, uri: impl Into<String>) -> Result<Self, AdocError> {
        Self::build(id.into(), AtomKind::ImageRef, uri.into())
    }

    fn build(id: String, kind: AtomKind, content: String) -> Result<Self, AdocError> {
        let a = Self { id, kind, content, policy: Vec::new(), classification: None, links: Vec::new(), removed: false };
        a.check_local()?;
        Ok(a)
    }

    fn check_local(&self) -> Result<(), AdocError> {
        check_local_id(&self.id)?;
        if self.kind == AtomKind::ImageRef && !is_media_uri(&self.content) {
            return Err(AdocError::InvalidImageUri { atom: self.id.clone(), uri: self.content.clone() });
        }
        Ok(())
    }

    pub fn with_classification(mut self, c: SecurityClass) -> Self {
        self.classification = Some(c);
        self
    }

    pub fn with_link(mut self, link: AtomLink) -> Self {
        self.links.push(link);
        self
    }

    /// F(i): functions some subject is granted (True or TrueWith) on this atom.
    pub fn granted_functions(&self) -> BTreeSet<&str> {
        self.policy.iter().filter(|e| e.value.is_grant()).map(|e| e.function.as_str()).collect()
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.content.lines()
    }
}

/// Which order the classification check uses between atom and document classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Dominance {
    /// `C(i) ⪯ C(D)`.
    #[default]
    NonStrict,
    /// `C(i) ⪯ C(D)` and `C(i) ≠ C(D)`.
    Strict,
}

impl Dominance {
    pub fn holds(self, atom: &SecurityClass, doc: &SecurityClass) -> bool {
        atom.dominated_by(doc) && (self == Dominance::NonStrict || atom != doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum ViolationKind {
    /// Granted functions that the document forbids.
    ForbiddenFunctions { functions: BTreeSet<String> },
    /// The atom's class is not dominated by the document's.
    ClassificationExceeds { atom: SecurityClass, document: SecurityClass },
    /// The document is classified but the atom is not.
    MissingClassification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub atom: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violating_atoms(&self) -> BTreeSet<&str> {
        self.violations.iter().map(|v| v.atom.as_str()).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            match &v.kind {
                ViolationKind::ForbiddenFunctions { functions } => {
                    let fs: Vec<&str> = functions.iter().map(String::as_str).collect();
                    writeln!(f, "{}: grants forbidden function(s) {}", v.atom, fs.join(","))?
                }
                ViolationKind::ClassificationExceeds { atom, document } => {
                    writeln!(f, "{}: class {atom} not dominated by document class {document}", v.atom)?
                }
                ViolationKind::MissingClassification => writeln!(f, "{}: missing classification", v.atom)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomicDocument {
    pub id: String,
    pub format_version: u32,
    pub atoms: Vec<Atom>,
    /// F̄(D).
    pub forbidden_functions: BTreeSet<String>,
    /// C(D).
    pub classification: Option<SecurityClass>,
}

impl AtomicDocument {
    /// An empty document. At least one atom must be added before it can be
    /// serialized.
    pub fn new(id: impl Into<String>) -> Result<Self, AdocError> {
        let id = id.into();
        check_local_id(&id)?;
        Ok(Self {
            id,
            format_version: FORMAT_VERSION,
            atoms: Vec::new(),
            forbidden_functions: BTreeSet::new(),
            classification: None,
        })
    }

    pub fn with_atom(mut self, atom: Atom) -> Result<Self, AdocError> {
        atom.check_local()?;
        if self.atom(&atom.id).is_some() {
            return Err(AdocError::DuplicateAtomId(atom.id));
        }
        self.atoms.push(atom);
        Ok(self)
    }

    pub fn with_forbidden<I, S>(mut self, functions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.forbidden_functions.extend(functions.into_iter().map(Into::into));
        self
    }

    pub fn with_classification(mut self, c: SecurityClass) -> Self {
        self.classification = Some(c);
        self
    }

    /// Sets `subject`'s entry for the unary `function` on `atom_id`,
    /// replacing any previous value.
    pub fn grant(
        mut self,
        atom_id: &str,
        subject: &SubjectId,
        function: &str,
        value: TensorEntry,
    ) -> Result<Self, AdocError> {
        let objects = ObjectTuple::single(self.object_ref(atom_id)?);
        let atom = self.atom_mut(atom_id)?;
        atom.policy.retain(|e| !(e.subject == *subject && e.function == function && e.objects == objects));
        atom.policy.push(PolicyEntry { subject: subject.clone(), function: function.to_string(), objects, value });
        Ok(self)
    }

    pub fn atom(&self, id: &str) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.id == id)
    }

    fn atom_mut(&mut self, id: &str) -> Result<&mut Atom, AdocError> {
        self.atoms
            .iter_mut()
            .find(|a| a.id == id)
            .ok_or_else(|| AdocError::UnknownAtom(id.to_string()))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.id == id)
    }

    /// The tensor object standing for an atom: `<doc>/<atom>`.
    pub fn object_ref(&self, atom_id: &str) -> Result<ObjectRef, AdocError> {
        if self.atom(atom_id).is_none() {
            return Err(AdocError::UnknownAtom(atom_id.to_string()));
        }
        Ok(ObjectRef::atom(&self.id, atom_id)?)
    }

    /// Maps an object reference back to an atom of this document.
    pub fn atom_for_object(&self, o: &ObjectRef) -> Option<&Atom> {
        let (doc, atom) = o.as_str().split_once('/')?;
        if doc != self.id {
            return None;
        }
        self.atom(atom)
    }

    /// A fresh atom id of the form `<prefix><n>` not used in this document.
    pub fn fresh_atom_id(&self, prefix: &str) -> String {
        (1..)
            .map(|n| format!("{prefix}{n}"))
            .find(|id| self.atom(id).is_none())
            .expect("unbounded")
    }

    /// Tombstones an atom. Its id stays reserved and links keep resolving.
    pub fn remove_atom(&self, id: &str) -> Result<Self, AdocError> {
        let mut d = self.clone();
        d.atom_mut(id)?.removed = true;
        Ok(d)
    }

    pub fn restore_atom(&self, id: &str) -> Result<Self, AdocError> {
        let mut d = self.clone();
        d.atom_mut(id)?.removed = false;
        Ok(d)
    }

    /// The target of `link` within this document, if it points here.
    pub fn local_target<'a>(&self, link: &'a AtomLink) -> Option<&'a str> {
        match link.external() {
            None => Some(&link.target),
            Some((doc, atom)) if doc == self.id => Some(atom),
            Some(_) => None,
        }
    }

    /// Structural invariants: unique ids, valid image URIs, resolvable
    /// intra-document links, no self links, at least one atom.
    pub fn check_structure(&self) -> Result<(), AdocError> {
        check_local_id(&self.id)?;
        if self.atoms.is_empty() {
            return Err(AdocError::InvalidDocument("a document holds one or more atoms".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &self.atoms {
            a.check_local()?;
            if !seen.insert(a.id.as_str()) {
                return Err(AdocError::DuplicateAtomId(a.id.clone()));
            }
        }
        for a in &self.atoms {
            for l in &a.links {
                if let Some(t) = self.local_target(l) {
                    if t == a.id {
                        return Err(AdocError::SelfLink(a.id.clone()));
                    }
                    if !seen.contains(t) {
                        return Err(AdocError::DanglingLink { atom: a.id.clone(), target: l.target.clone() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks every cross-document link whose document `resolve` can load.
    pub fn check_cross_links<'a>(
        &self,
        resolve: impl Fn(&str) -> Option<&'a AtomicDocument>,
    ) -> Result<(), AdocError> {
        for a in &self.atoms {
            for l in &a.links {
                if self.local_target(l).is_some() {
                    continue;
                }
                let (doc, atom) = l.external().expect("non-local links are external");
                if let Some(other) = resolve(doc) {
                    if other.atom(atom).is_none() {
                        return Err(AdocError::DanglingLink { atom: a.id.clone(), target: l.target.clone() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Atoms made unavailable by removals: every removed atom plus the
    /// cascade closure of each.
    pub fn unavailable_atoms(&self) -> BTreeSet<String> {
        self.unavailable_from(self.atoms.iter().filter(|a| a.removed).map(|a| a.id.as_str()))
    }

    /// Like [`unavailable_atoms`](Self::unavailable_atoms), also following
    /// cascade links into other loaded documents.
    pub fn unavailable_atoms_with<'a>(
        &self,
        resolve: impl Fn(&str) -> Option<&'a AtomicDocument>,
    ) -> BTreeSet<String> {
        let mut seeds: Vec<&str> = self.atoms.iter().filter(|a| a.removed).map(|a| a.id.as_str()).collect();
        for a in &self.atoms {
            for l in &a.links {
                if l.cascade != Cascade::UnavailableOnRemove || self.local_target(l).is_some() {
                    continue;
                }
                let (doc, atom) = l.external().expect("non-local links are external");
                if let Some(other) = resolve(doc) {
                    if other.atom(atom).is_none() || other.unavailable_atoms().contains(atom) {
                        seeds.push(&a.id);
                    }
                }
            }
        }
        self.unavailable_from(seeds.into_iter())
    }

    fn unavailable_from<'a>(&self, seeds: impl Iterator<Item = &'a str>) -> BTreeSet<String> {
        let deps = self.dependents();
        let mut out = BTreeSet::new();
        for s in seeds {
            closure_into(&deps, s, &mut out);
        }
        out
    }

    pub fn is_available(&self, id: &str) -> bool {
        self.atom(id).is_some() && !self.unavailable_atoms().contains(id)
    }

    pub fn available_atoms(&self) -> Vec<&Atom> {
        let gone = self.unavailable_atoms();
        self.atoms.iter().filter(|a| !gone.contains(&a.id)).collect()
    }

    /// Reverse cascade edges: target -> atoms that depend on it.
    fn dependents(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut deps: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for a in &self.atoms {
            for l in &a.links {
                if l.cascade != Cascade::UnavailableOnRemove {
                    continue;
                }
                if let Some(t) = self.local_target(l) {
                    deps.entry(t).or_default().push(&a.id);
                }
            }
        }
        deps
    }

    /// Every policy entry of every atom.
    pub fn policy_entries(&self) -> impl Iterator<Item = &PolicyEntry> {
        self.atoms.iter().flat_map(|a| a.policy.iter())
    }

    /// Registers every atom as an object of `t` and merges the atom policies.
    /// Functions must already exist; subjects are created on first use.
    pub fn install(&self, t: &mut AccessTensor) -> Result<(), AdocError> {
        for a in &self.atoms {
            let o = ObjectRef::atom(&self.id, &a.id)?;
            if !t.has_object(o.as_str()) {
                t.create_object(o)?;
            }
        }
        for e in self.policy_entries() {
            if !t.has_subject(e.subject.as_str()) {
                t.create_subject(e.subject.clone())?;
            }
            t.enter_entry(&e.subject, &e.function, e.objects.clone(), e.value.clone())?;
        }
        Ok(())
    }

    /// Segments plain text into one atom per blank-line delimited paragraph.
    pub fn from_plain_text(id: impl Into<String>, text: &str) -> Result<Self, AdocError> {
        let mut doc = Self::new(id)?;
        let text = text.replace("\r\n", "\n");
        let mut para: Vec<&str> = Vec::new();
        let mut paras: Vec<String> = Vec::new();
        for line in text.split('\n') {
            if line.trim().is_empty() {
                if !para.is_empty() {
                    paras.push(para.join("\n"));
                    para.clear();
                }
            } else {
                para.push(line);
            }
        }
        if !para.is_empty() {
            paras.push(para.join("\n"));
        }
        if paras.is_empty() {
            return Err(AdocError::InvalidDocument("no paragraphs in input".into()));
        }
        for (i, p) in paras.into_iter().enumerate() {
            doc = doc.with_atom(Atom::text(format!("p{}", i + 1), p)?)?;
        }
        Ok(doc)
    }

    /// Available text, one paragraph per atom. Image atoms appear as their
    /// URI.
    pub fn to_plain_text(&self) -> String {
        let parts: Vec<&str> = self.available_atoms().into_iter().map(|a| a.content.as_str()).collect();
        let mut s = parts.join("\n\n");
        s.push('\n');
        s
    }
}

fn closure_into(deps: &BTreeMap<&str, Vec<&str>>, start: &str, out: &mut BTreeSet<String>) {
    if !out.insert(start.to_string()) {
        return;
    }
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for &next in deps.get(cur).map(Vec::as_slice).unwrap_or(&[]) {
            if out.insert(next.to_string()) {
                queue.push_back(next);
            }
        }
    }
}

/// `F(i) ∩ F̄(D) = ∅`: no granted function is forbidden by the document.
pub fn check_atom_consistency(atom: &Atom, d: &AtomicDocument) -> bool {
    atom.granted_functions().iter().all(|f| !d.forbidden_functions.contains(*f))
}

/// [`check_atom_consistency`] and `C(i) ⪯ C(D)`. Both classes must be present.
pub fn check_atom_consistency_classified(
    atom: &Atom,
    d: &AtomicDocument,
    order: Dominance,
) -> Result<bool, AdocError> {
    let (Some(ci), Some(cd)) = (&atom.classification, &d.classification) else {
        return Err(AdocError::MissingClassification(atom.id.clone()));
    };
    Ok(check_atom_consistency(atom, d) && order.holds(ci, cd))
}

pub fn validate_document(d: &AtomicDocument) -> ValidationReport {
    validate_document_with(d, Dominance::NonStrict)
}

/// Checks every atom for forbidden grants and, when the document is
/// classified, for class dominance; an unclassified atom in a classified
/// document is reported.
/// Atom classes in an unclassified document are not compared.
pub fn validate_document_with(d: &AtomicDocument, order: Dominance) -> ValidationReport {
    let mut violations = Vec::new();
    for a in &d.atoms {
        let bad: BTreeSet<String> = a
            .granted_functions()
            .into_iter()
            .filter(|f| d.forbidden_functions.contains(*f))
            .map(str::to_string)
            .collect();
        if !bad.is_empty() {
            violations.push(Violation { atom: a.id.clone(), kind: ViolationKind::ForbiddenFunctions { functions: bad } });
        }
        if let Some(cd) = &d.classification {
            match &a.classification {
                None => violations.push(Violation { atom: a.id.clone(), kind: ViolationKind::MissingClassification }),
                Some(ci) if !order.holds(ci, cd) => violations.push(Violation {
                    atom: a.id.clone(),
                    kind: ViolationKind::ClassificationExceeds { atom: ci.clone(), document: cd.clone() },
                }),
                Some(_) => {}
            }
        }
    }
    ValidationReport { violations }
}

/// Atoms that become unavailable when `atom_id` is removed, itself included.
pub fn link_closure(d: &AtomicDocument, atom_id: &str) -> Result<BTreeSet<String>, AdocError> {
    if d.atom(atom_id).is_none() {
        return Err(AdocError::UnknownAtom(atom_id.to_string()));
    }
    let mut out = BTreeSet::new();
    closure_into(&d.dependents(), atom_id, &mut out);
    Ok(out)
}

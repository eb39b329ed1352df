use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MonitorError;
use crate::act::{ObjectTuple, SubjectId, TensorEntry};
use crate::adoc::{validate_document, AtomicDocument, PolicyEntry};
use crate::guarded::context_at_most;

/// The author's answers when a document is first protected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireAnswers {
    pub printable: bool,
    pub copyable: bool,
    pub emailable: bool,
    pub default_search_context: u32,
    pub watermark: Option<String>,
}

impl Default for QuestionnaireAnswers {
    fn default() -> Self {
        Self { printable: true, copyable: true, emailable: true, default_search_context: 5, watermark: None }
    }
}

pub const COPY_FUNCTIONS: [&str; 4] = [
    "copy_byte_restricted",
    "copy_character_limited",
    "copy_sensitive_word_exclusion",
    "copy_with_citation",
];

/// Policy changes for one document, applied with [`PolicyBatch::apply`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PolicyBatch {
    pub document: String,
    /// Functions added to the document's forbidden set.
    pub forbid: BTreeSet<String>,
    /// A subject whose entries in this document are dropped before
    /// `entries` are added.
    pub clear_subject: Option<SubjectId>,
    /// `(atom id, entry)`; an entry replaces any entry at the same
    /// coordinate.
    pub entries: Vec<(String, PolicyEntry)>,
    pub watermark: Option<String>,
}

impl PolicyBatch {
    pub fn apply(&self, d: &AtomicDocument) -> Result<AtomicDocument, MonitorError> {
        if d.id != self.document {
            return Err(MonitorError::BatchMismatch { batch: self.document.clone(), document: d.id.clone() });
        }
        let mut out = d.clone().with_forbidden(self.forbid.iter().cloned());
        if let Some(s) = &self.clear_subject {
            for a in &mut out.atoms {
                a.policy.retain(|e| e.subject != *s);
            }
        }
        for (atom, e) in &self.entries {
            let a = out
                .atoms
                .iter_mut()
                .find(|a| a.id == *atom)
                .ok_or_else(|| crate::adoc::AdocError::UnknownAtom(atom.clone()))?;
            a.policy.retain(|x| !(x.subject == e.subject && x.function == e.function && x.objects == e.objects));
            a.policy.push(e.clone());
        }
        Ok(out)
    }

    /// Entries granting something, as `(subject, function, objects)`.
    pub fn grants(&self) -> BTreeSet<(SubjectId, String, ObjectTuple)> {
        self.entries
            .iter()
            .filter(|(_, e)| e.value.is_grant())
            .map(|(_, e)| (e.subject.clone(), e.function.clone(), e.objects.clone()))
            .collect()
    }
}

/// The author's default function list for every atom of `d`: `read`,
/// `search` limited to the default context, and `print`, `email` and the
/// copy variants as answered. A non-printable document forbids `print`.
pub fn defaults_from_questionnaire(
    q: &QuestionnaireAnswers,
    d: &AtomicDocument,
    author: &SubjectId,
) -> Result<PolicyBatch, MonitorError> {
    let mut batch = PolicyBatch { document: d.id.clone(), watermark: q.watermark.clone(), ..PolicyBatch::default() };
    if !q.printable {
        batch.forbid.insert("print".into());
    }
    let search = TensorEntry::TrueWith(context_at_most(q.default_search_context as usize));
    for a in &d.atoms {
        let objects = ObjectTuple::single(d.object_ref(&a.id)?);
        let mut grant = |f: &str, value: TensorEntry| {
            let e = PolicyEntry { subject: author.clone(), function: f.to_string(), objects: objects.clone(), value };
            batch.entries.push((a.id.clone(), e));
        };
        grant("read", TensorEntry::True);
        grant("search", search.clone());
        if q.printable {
            grant("print", TensorEntry::True);
        }
        if q.emailable {
            grant("email", TensorEntry::True);
        }
        if q.copyable {
            for f in COPY_FUNCTIONS {
                grant(f, TensorEntry::True);
            }
        }
    }
    let report = validate_document(&batch.apply(d)?);
    if !report.is_accepted() {
        return Err(MonitorError::InconsistentDefaults(report.to_string()));
    }
    Ok(batch)
}

/// Functions `s` is granted anywhere in `d`.
pub fn granted_functions(d: &AtomicDocument, s: &SubjectId) -> BTreeSet<String> {
    d.policy_entries().filter(|e| e.subject == *s && e.value.is_grant()).map(|e| e.function.clone()).collect()
}

/// The co-author's policy in `d`: every grant of `author` except those for
/// functions in `removals`, replacing whatever the co-author held before.
pub fn derive_coauthor_policy(
    d: &AtomicDocument,
    author: &SubjectId,
    coauthor: &SubjectId,
    removals: &BTreeSet<String>,
) -> Result<PolicyBatch, MonitorError> {
    let granted = granted_functions(d, author);
    let missing: BTreeSet<String> = removals.difference(&granted).cloned().collect();
    if !missing.is_empty() {
        return Err(MonitorError::NotASubset { functions: missing });
    }
    let mut batch =
        PolicyBatch { document: d.id.clone(), clear_subject: Some(coauthor.clone()), ..PolicyBatch::default() };
    for a in &d.atoms {
        for e in &a.policy {
            if e.subject == *author && e.value.is_grant() && !removals.contains(&e.function) {
                batch.entries.push((a.id.clone(), PolicyEntry { subject: coauthor.clone(), ..e.clone() }));
            }
        }
    }
    Ok(batch)
}

/// Removal sets for co-authors: a global template and per co-author
/// overrides that replace it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoauthorTemplate {
    pub global: BTreeSet<String>,
    pub overrides: BTreeMap<String, BTreeSet<String>>,
}

impl CoauthorTemplate {
    pub fn removals_for(&self, coauthor: &SubjectId) -> &BTreeSet<String> {
        self.overrides.get(coauthor.as_str()).unwrap_or(&self.global)
    }

    pub fn derive(
        &self,
        d: &AtomicDocument,
        author: &SubjectId,
        coauthor: &SubjectId,
    ) -> Result<PolicyBatch, MonitorError> {
        let granted = granted_functions(d, author);
        // The global template may name functions this author never granted.
        let removals: BTreeSet<String> = match self.overrides.get(coauthor.as_str()) {
            Some(o) => o.clone(),
            None => self.global.intersection(&granted).cloned().collect(),
        };
        derive_coauthor_policy(d, author, coauthor, &removals)
    }
}

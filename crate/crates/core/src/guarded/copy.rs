use regex::Regex;
use serde::Serialize;

use super::catalog::ResolvedOptions;
use super::render::Gate;
use super::search::permits;
use super::GuardedError;
use crate::act::{AccessTensor, SubjectId, TensorEntry};
use crate::adoc::{Atom, AtomLink, AtomicDocument, Cascade};

/// Inclusive range of atoms in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomRange {
    pub first: String,
    pub last: String,
}

impl AtomRange {
    pub fn new(first: impl Into<String>, last: impl Into<String>) -> Self {
        Self { first: first.into(), last: last.into() }
    }

    pub fn single(id: impl Into<String>) -> Self {
        let id = id.into();
        Self { first: id.clone(), last: id }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum CopyVariant {
    ByteRestricted { max_bytes: usize },
    CharacterLimited { max_chars: usize },
    SensitiveWordExclusion { blocklist: Vec<String> },
    WithCitation,
}

impl CopyVariant {
    pub fn function_name(&self) -> &'static str {
        match self {
            CopyVariant::ByteRestricted { .. } => "copy_byte_restricted",
            CopyVariant::CharacterLimited { .. } => "copy_character_limited",
            CopyVariant::SensitiveWordExclusion { .. } => "copy_sensitive_word_exclusion",
            CopyVariant::WithCitation => "copy_with_citation",
        }
    }

    /// The options `decide` sees for this variant.
    pub fn options(&self, dest: &str) -> ResolvedOptions {
        let mut values = match self {
            CopyVariant::ByteRestricted { max_bytes } => vec![("max_bytes".to_string(), max_bytes.to_string())],
            CopyVariant::CharacterLimited { max_chars } => vec![("max_chars".to_string(), max_chars.to_string())],
            CopyVariant::SensitiveWordExclusion { blocklist } => {
                let words: Vec<&str> = blocklist.iter().map(|w| w.trim()).filter(|w| !w.is_empty()).collect();
                vec![("blocklist".to_string(), words.join(","))]
            }
            CopyVariant::WithCitation => vec![],
        };
        values.push(("dest".to_string(), dest.to_string()));
        ResolvedOptions { values }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Citation {
    pub source_document: String,
    pub atoms: Vec<String>,
    pub quote_atom: String,
    pub citation_atom: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AppliedLimits {
    /// Payload length before truncation, in the variant's unit.
    pub truncated_from: Option<usize>,
    /// Each removed occurrence, as it appeared in the source.
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CopyResult {
    pub payload: String,
    pub citation: Option<Citation>,
    pub applied_limits: AppliedLimits,
    pub source_atoms: Vec<String>,
    pub inserted_atoms: Vec<String>,
    pub dest_document: String,
}

/// Longest prefix of `s` of at most `max` bytes ending on a char boundary.
pub(crate) fn truncate_bytes(s: &str, max: usize) -> &str {
    if s.len() <= max {
        return s;
    }
    let mut end = max;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}

pub(crate) fn word_matcher(words: &[String]) -> Option<Regex> {
    let words: Vec<String> = words.iter().map(|w| w.trim()).filter(|w| !w.is_empty()).map(regex::escape).collect();
    if words.is_empty() {
        return None;
    }
    let src = format!(r"(?i)\b{{start-half}}(?:{})\b{{end-half}}", words.join("|"));
    Some(Regex::new(&src).expect("escaped words form a valid pattern"))
}

/// Copies atoms `range` of `src` into `dest`. Every atom in the range must
/// allow the variant's function; otherwise nothing is copied. Returns the
/// result and the updated destination; the copier is granted `read` on the
/// inserted atoms unless `dest` forbids it.
pub fn copy(
    t: &AccessTensor,
    s: &SubjectId,
    src: &AtomicDocument,
    range: &AtomRange,
    dest: &AtomicDocument,
    variant: &CopyVariant,
) -> Result<(CopyResult, AtomicDocument), GuardedError> {
    let opts = variant.options(if dest.id == src.id { "" } else { &dest.id });
    copy_as(t, s, (variant.function_name(), &opts.invocation(b"")), src, range, dest, variant)
}

pub(crate) fn copy_as(
    t: &AccessTensor,
    s: &SubjectId,
    gate: Gate<'_>,
    src: &AtomicDocument,
    range: &AtomRange,
    dest: &AtomicDocument,
    variant: &CopyVariant,
) -> Result<(CopyResult, AtomicDocument), GuardedError> {
    let (Some(i), Some(j)) = (src.position(&range.first), src.position(&range.last)) else {
        return Err(GuardedError::Denied);
    };
    if i > j {
        return Err(GuardedError::InvalidRange(format!("`{}` comes after `{}`", range.first, range.last)));
    }
    let gone = src.unavailable_atoms();
    let atoms: Vec<&Atom> = src.atoms[i..=j].iter().filter(|a| !gone.contains(&a.id)).collect();
    if atoms.is_empty() {
        return Err(GuardedError::Denied);
    }
    let (function, inv) = gate;
    for a in &atoms {
        let o = src.object_ref(&a.id)?;
        if !permits(t, s, function, &[o], inv) {
            return Err(GuardedError::Denied);
        }
    }
    let full = atoms.iter().map(|a| a.content.as_str()).collect::<Vec<_>>().join("\n");
    let mut limits = AppliedLimits::default();
    let payload = match variant {
        CopyVariant::ByteRestricted { max_bytes } => {
            let p = truncate_bytes(&full, *max_bytes);
            if p.len() < full.len() {
                limits.truncated_from = Some(full.len());
            }
            p.to_string()
        }
        CopyVariant::CharacterLimited { max_chars } => {
            let n = full.chars().count();
            if n > *max_chars {
                limits.truncated_from = Some(n);
            }
            full.chars().take(*max_chars).collect()
        }
        CopyVariant::SensitiveWordExclusion { blocklist } => match word_matcher(blocklist) {
            Some(re) => {
                limits.excluded = re.find_iter(&full).map(|m| m.as_str().to_string()).collect();
                re.replace_all(&full, "").into_owned()
            }
            None => full,
        },
        CopyVariant::WithCitation => full,
    };
    let source_atoms: Vec<String> = atoms.iter().map(|a| a.id.clone()).collect();
    let mut out = dest.clone();
    let mut inserted = Vec::new();
    let mut citation = None;
    if *variant == CopyVariant::WithCitation {
        let quote_id = out.fresh_atom_id("quote");
        let cite_id = out.fresh_atom_id("cite");
        let cite = Atom::text(
            &cite_id,
            format!("Source: {}, atoms {}..{}", src.id, range.first, range.last),
        )?
        .with_link(AtomLink::new(format!("{}/{}", src.id, range.first), "citation-of", Cascade::None)?);
        let quote = Atom::text(&quote_id, payload.clone())?
            .with_link(AtomLink::new(&cite_id, "quote-of", Cascade::UnavailableOnRemove)?);
        out = out.with_atom(quote)?.with_atom(cite)?;
        inserted.push(quote_id.clone());
        inserted.push(cite_id.clone());
        citation = Some(Citation {
            source_document: src.id.clone(),
            atoms: source_atoms.clone(),
            quote_atom: quote_id,
            citation_atom: cite_id,
        });
    } else {
        let id = out.fresh_atom_id("copy");
        out = out.with_atom(Atom::text(&id, payload.clone())?)?;
        inserted.push(id);
    }
    if !out.forbidden_functions.contains("read") {
        for id in &inserted {
            out = out.grant(id, s, "read", TensorEntry::True)?;
        }
    }
    let result = CopyResult {
        payload,
        citation,
        applied_limits: limits,
        source_atoms,
        inserted_atoms: inserted,
        dest_document: out.id.clone(),
    };
    Ok((result, out))
}

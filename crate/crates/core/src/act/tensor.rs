use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::ids::{FunctionSig, ObjectRef, ObjectTuple, SubjectId};
use super::invocation::Invocation;
use super::predicate::{Predicate, ProgramRegistry};
use super::ActError;

/// Value of the tensor at one coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TensorEntry {
    /// The tuple length differs from the function's arity. Derived, never stored.
    NotApplicable,
    False,
    True,
    TrueWith(Predicate),
}

impl TensorEntry {
    /// `True` or `TrueWith`: the entry grants something under some invocation.
    pub fn is_grant(&self) -> bool {
        matches!(self, TensorEntry::True | TensorEntry::TrueWith(_))
    }

    pub fn predicate(&self) -> Option<&Predicate> {
        match self {
            TensorEntry::TrueWith(p) => Some(p),
            _ => None,
        }
    }

    /// Policy-file token for a stored entry.
    pub fn to_token(&self) -> String {
        match self {
            TensorEntry::NotApplicable => "N/A".into(),
            TensorEntry::False => "FALSE".into(),
            TensorEntry::True => "TRUE".into(),
            TensorEntry::TrueWith(Predicate::RegularExpression(p)) => format!("TRUE_RE:{}", p.as_str()),
            TensorEntry::TrueWith(Predicate::ProgramRef(n)) => format!("TRUE_PROG:{n}"),
        }
    }

    /// Parses `FALSE`, `TRUE`, `TRUE_RE:<pattern>` or `TRUE_PROG:<name>`.
    pub fn from_token(s: &str) -> Result<Self, ActError> {
        match s {
            "FALSE" => Ok(TensorEntry::False),
            "TRUE" => Ok(TensorEntry::True),
            _ => {
                if let Some(p) = s.strip_prefix("TRUE_RE:") {
                    Predicate::regex(p).map(TensorEntry::TrueWith)
                } else if let Some(n) = s.strip_prefix("TRUE_PROG:") {
                    if n.is_empty() {
                        return Err(ActError::InvalidEntry(s.to_string()));
                    }
                    Ok(TensorEntry::TrueWith(Predicate::program(n)))
                } else {
                    Err(ActError::InvalidEntry(s.to_string()))
                }
            }
        }
    }
}

impl fmt::Display for TensorEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorEntry::NotApplicable => f.write_str("N/A"),
            TensorEntry::False => f.write_str("False"),
            TensorEntry::True => f.write_str("True"),
            TensorEntry::TrueWith(p) => write!(f, "True[{p}]"),
        }
    }
}

impl Serialize for TensorEntry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub enum Outcome {
    Allow,
    Deny,
    NotApplicable,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Allow => "allow",
            Outcome::Deny => "deny",
            Outcome::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum DecisionReason {
    ArityMismatch { expected: usize, got: usize },
    NoEntry,
    StoredFalse,
    Unconditional,
    PredicateSatisfied { predicate: String },
    PredicateFailed { predicate: String },
    PredicateError { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub outcome: Outcome,
    pub reason: DecisionReason,
}

impl Decision {
    pub fn is_allow(&self) -> bool {
        self.outcome == Outcome::Allow
    }

    fn deny(reason: DecisionReason) -> Self {
        Self { outcome: Outcome::Deny, reason }
    }
}

type ByTuple = BTreeMap<ObjectTuple, TensorEntry>;
type ByFunction = BTreeMap<String, ByTuple>;

/// The access control tensor: a sparse map from (subject, function, object
/// tuple) to an entry. Arity-correct coordinates with no stored entry read
/// as `False`.
#[derive(Debug, Clone, Default)]
pub struct AccessTensor {
    subjects: BTreeSet<SubjectId>,
    functions: BTreeMap<String, FunctionSig>,
    objects: BTreeSet<ObjectRef>,
    entries: BTreeMap<SubjectId, ByFunction>,
    programs: ProgramRegistry,
}

impl AccessTensor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_programs(programs: ProgramRegistry) -> Self {
        Self { programs, ..Self::default() }
    }

    pub fn programs(&self) -> &ProgramRegistry {
        &self.programs
    }

    pub fn subjects(&self) -> impl Iterator<Item = &SubjectId> + '_ {
        self.subjects.iter()
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionSig> + '_ {
        self.functions.values()
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectRef> + '_ {
        self.objects.iter()
    }

    pub fn has_subject(&self, s: &str) -> bool {
        self.subjects.contains(s)
    }

    pub fn has_object(&self, o: &str) -> bool {
        self.objects.contains(o)
    }

    pub fn function(&self, name: &str) -> Result<&FunctionSig, ActError> {
        self.functions.get(name).ok_or_else(|| ActError::UnknownFunction(name.to_string()))
    }

    pub fn max_arity(&self) -> usize {
        self.functions.values().map(|f| f.arity).max().unwrap_or(0)
    }

    pub fn entry_count(&self) -> usize {
        self.entries.values().flat_map(|m| m.values()).map(|m| m.len()).sum()
    }

    fn check_subject(&self, s: &str) -> Result<(), ActError> {
        if self.subjects.contains(s) {
            Ok(())
        } else {
            Err(ActError::UnknownSubject(s.to_string()))
        }
    }

    pub(crate) fn check_objects(&self, o: &[ObjectRef]) -> Result<(), ActError> {
        match o.iter().find(|x| !self.objects.contains(*x)) {
            Some(x) => Err(ActError::UnknownObject(x.to_string())),
            None => Ok(()),
        }
    }

    /// The raw stored entry, if any. No arity interpretation.
    pub fn stored(&self, s: &str, f: &str, o: &[ObjectRef]) -> Option<&TensorEntry> {
        self.entries.get(s)?.get(f)?.get(o)
    }

    /// `A(s, f, o)`: `NotApplicable` iff the tuple length differs from the
    /// function's arity, otherwise the stored entry or `False`.
    pub fn lookup(&self, s: &str, f: &str, o: &[ObjectRef]) -> Result<TensorEntry, ActError> {
        self.lookup_ref(s, f, o).map(|e| e.map_or(TensorEntry::False, Clone::clone))
    }

    /// Borrowing variant of [`lookup`](Self::lookup); `Ok(None)` means
    /// `False` by absence. Arity mismatch yields `NotApplicable`.
    fn lookup_ref<'a>(
        &'a self,
        s: &str,
        f: &str,
        o: &[ObjectRef],
    ) -> Result<Option<&'a TensorEntry>, ActError> {
        self.check_subject(s)?;
        let sig = self.function(f)?;
        self.check_objects(o)?;
        if o.len() != sig.arity {
            return Ok(Some(&TensorEntry::NotApplicable));
        }
        Ok(self.stored(s, f, o))
    }

    /// Decides whether `s` may run `f` on `o` with the given options and
    /// standard input.
    pub fn decide(
        &self,
        s: &str,
        f: &str,
        o: &[ObjectRef],
        inv: &Invocation,
    ) -> Result<Decision, ActError> {
        let entry = self.lookup_ref(s, f, o)?;
        Ok(match entry {
            Some(TensorEntry::NotApplicable) => Decision {
                outcome: Outcome::NotApplicable,
                reason: DecisionReason::ArityMismatch {
                    expected: self.functions[f].arity,
                    got: o.len(),
                },
            },
            None => Decision::deny(DecisionReason::NoEntry),
            Some(TensorEntry::False) => Decision::deny(DecisionReason::StoredFalse),
            Some(TensorEntry::True) => Decision {
                outcome: Outcome::Allow,
                reason: DecisionReason::Unconditional,
            },
            Some(TensorEntry::TrueWith(p)) => match p.matches(&self.programs, inv) {
                Ok(true) => Decision {
                    outcome: Outcome::Allow,
                    reason: DecisionReason::PredicateSatisfied { predicate: p.to_string() },
                },
                Ok(false) => Decision::deny(DecisionReason::PredicateFailed { predicate: p.to_string() }),
                Err(e) => Decision::deny(DecisionReason::PredicateError { message: e.to_string() }),
            },
        })
    }

    // -- mutation primitives ------------------------------------------------

    pub fn create_subject(&mut self, s: SubjectId) -> Result<(), ActError> {
        if self.subjects.contains(&s) {
            return Err(ActError::DuplicateIdentifier { kind: "subject", value: s.to_string() });
        }
        self.subjects.insert(s);
        Ok(())
    }

    pub fn destroy_subject(&mut self, s: &str) -> Result<(), ActError> {
        if !self.subjects.remove(s) {
            return Err(ActError::UnknownSubject(s.to_string()));
        }
        self.entries.remove(s);
        Ok(())
    }

    pub fn create_object(&mut self, o: ObjectRef) -> Result<(), ActError> {
        if self.objects.contains(&o) {
            return Err(ActError::DuplicateIdentifier { kind: "object", value: o.to_string() });
        }
        self.objects.insert(o);
        Ok(())
    }

    pub fn destroy_object(&mut self, o: &str) -> Result<(), ActError> {
        if !self.objects.remove(o) {
            return Err(ActError::UnknownObject(o.to_string()));
        }
        for by_fn in self.entries.values_mut() {
            for by_tuple in by_fn.values_mut() {
                by_tuple.retain(|t, _| t.iter().all(|x| x.as_str() != o));
            }
            by_fn.retain(|_, m| !m.is_empty());
        }
        self.entries.retain(|_, m| !m.is_empty());
        Ok(())
    }

    pub fn create_function(&mut self, f: FunctionSig) -> Result<(), ActError> {
        if self.functions.contains_key(&f.name) {
            return Err(ActError::DuplicateIdentifier { kind: "function", value: f.name });
        }
        self.functions.insert(f.name.clone(), f);
        Ok(())
    }

    pub fn destroy_function(&mut self, f: &str) -> Result<(), ActError> {
        if self.functions.remove(f).is_none() {
            return Err(ActError::UnknownFunction(f.to_string()));
        }
        for by_fn in self.entries.values_mut() {
            by_fn.remove(f);
        }
        self.entries.retain(|_, m| !m.is_empty());
        Ok(())
    }

    /// Stores `e` at `(s, f, o)`, replacing any previous entry.
    pub fn enter_entry(
        &mut self,
        s: &SubjectId,
        f: &str,
        o: ObjectTuple,
        e: TensorEntry,
    ) -> Result<(), ActError> {
        self.check_subject(s.as_str())?;
        let arity = self.function(f)?.arity;
        self.check_objects(o.as_slice())?;
        if o.len() != arity {
            return Err(ActError::ArityMismatch { function: f.to_string(), expected: arity, got: o.len() });
        }
        if e == TensorEntry::NotApplicable {
            return Err(ActError::InvalidEntry("N/A".into()));
        }
        self.entries
            .entry(s.clone())
            .or_default()
            .entry(f.to_string())
            .or_default()
            .insert(o, e);
        Ok(())
    }

    /// Removes the entry at `(s, f, o)`; the coordinate reads `False` again.
    pub fn delete_entry(&mut self, s: &str, f: &str, o: &[ObjectRef]) -> Result<(), ActError> {
        self.check_subject(s)?;
        let arity = self.function(f)?.arity;
        self.check_objects(o)?;
        if o.len() != arity {
            return Err(ActError::ArityMismatch { function: f.to_string(), expected: arity, got: o.len() });
        }
        if let Some(by_fn) = self.entries.get_mut(s) {
            if let Some(by_tuple) = by_fn.get_mut(f) {
                by_tuple.remove(o);
                if by_tuple.is_empty() {
                    by_fn.remove(f);
                }
            }
            if by_fn.is_empty() {
                self.entries.remove(s);
            }
        }
        Ok(())
    }

    // -- read-side iteration ------------------------------------------------

    /// All stored entries in deterministic order.
    pub fn stored_entries(&self) -> impl Iterator<Item = (&SubjectId, &str, &ObjectTuple, &TensorEntry)> + '_ {
        self.entries.iter().flat_map(|(s, by_fn)| {
            by_fn.iter().flat_map(move |(f, by_tuple)| {
                by_tuple.iter().map(move |(o, e)| (s, f.as_str(), o, e))
            })
        })
    }

    /// Stored entries of one subject for one function.
    pub fn stored_for(&self, s: &str, f: &str) -> impl Iterator<Item = (&ObjectTuple, &TensorEntry)> + '_ {
        self.entries
            .get(s)
            .and_then(|m| m.get(f))
            .into_iter()
            .flat_map(|m| m.iter())
    }

    /// Deterministic policy-file text describing the whole tensor.
    pub fn to_policy_text(&self) -> String {
        let mut out = String::new();
        for s in &self.subjects {
            out.push_str(&format!("SUBJECT {s}\n"));
        }
        for f in self.functions.values() {
            out.push_str(&format!("FUNCTION {} {}\n", f.name, f.arity));
        }
        for o in &self.objects {
            out.push_str(&format!("OBJECT {o}\n"));
        }
        for (s, f, o, e) in self.stored_entries() {
            out.push_str(&format!("ENTRY {s} {f} {o} {}\n", e.to_token()));
        }
        out
    }

    /// SHA-256 over the policy text; equal tensors have equal fingerprints.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_policy_text().as_bytes()))
    }
}

impl PartialEq for AccessTensor {
    fn eq(&self, other: &Self) -> bool {
        self.subjects == other.subjects
            && self.functions == other.functions
            && self.objects == other.objects
            && self.entries == other.entries
    }
}

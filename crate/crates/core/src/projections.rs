//! One- and two-dimensional views of an [`AccessTensor`].
//!
//! Fixing one coordinate gives a matrix (authorization matrix for an object
//! tuple, capability matrix for a subject, access control matrix for a
//! function); fixing two gives a list. Views are computed on demand from the
//! sparse store and every cell equals [`AccessTensor::lookup`] at the same
//! coordinate.
//!
//! With compression on, `N/A` cells are omitted. All-`False` rows are kept.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::act::{AccessTensor, ActError, FunctionSig, ObjectRef, ObjectTuple, SubjectId, TensorEntry};

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error(transparent)]
    Act(#[from] ActError),
    #[error("({function}, {objects}) is not a meaningful pair: arity {arity}")]
    MeaninglessPair { function: String, objects: String, arity: usize },
    #[error("enumeration of {count} tuples exceeds the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: usize },
    #[error("unknown projection kind `{0}`")]
    UnknownKind(String),
}

/// Bound on how many object tuples a projection may enumerate.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_tuples: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_tuples: DEFAULT_ENUMERATION_CAP }
    }
}

/// Enumerates `objects^len` in lexicographic order.
fn tuples_of_len(objects: &[ObjectRef], len: usize, limits: Limits) -> Result<Vec<ObjectTuple>, ProjectionError> {
    let count = (objects.len() as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if count > limits.max_tuples as u128 {
        return Err(ProjectionError::EnumerationTooLarge { count, cap: limits.max_tuples });
    }
    let mut out = vec![Vec::<ObjectRef>::with_capacity(len)];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                objects.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(o.clone());
                    next
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(ObjectTuple::from).collect())
}

/// Tuples of every length in `lens`, checked against the cap as a whole.
fn tuples_of_lens(
    objects: &[ObjectRef],
    lens: &BTreeSet<usize>,
    limits: Limits,
) -> Result<Vec<ObjectTuple>, ProjectionError> {
    let total: u128 = lens
        .iter()
        .map(|&l| (objects.len() as u128).checked_pow(l as u32).unwrap_or(u128::MAX))
        .fold(0u128, |a, b| a.saturating_add(b));
    if total > limits.max_tuples as u128 {
        return Err(ProjectionError::EnumerationTooLarge { count: total, cap: limits.max_tuples });
    }
    let mut out = Vec::new();
    for &l in lens {
        out.extend(tuples_of_len(objects, l, limits)?);
    }
    Ok(out)
}

/// Tuple lengths a matrix column set has to cover: the registry's arities
/// when compressed, every length up to the maximum arity otherwise.
fn column_lengths<'a>(functions: impl Iterator<Item = &'a FunctionSig>, compress: bool) -> BTreeSet<usize> {
    let arities: BTreeSet<usize> = functions.map(|f| f.arity).collect();
    if compress {
        arities
    } else {
        (0..=arities.iter().copied().max().unwrap_or(0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuthorizationMatrix {
    pub object: ObjectTuple,
    pub compressed: bool,
    pub subjects: Vec<SubjectId>,
    pub functions: Vec<String>,
    #[serde(serialize_with = "ser_cells")]
    pub cells: BTreeMap<(SubjectId, String), TensorEntry>,
}

impl AuthorizationMatrix {
    pub fn cell(&self, s: &str, f: &str) -> Option<&TensorEntry> {
        self.cells.get(&(SubjectId::new(s).ok()?, f.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapabilityMatrix {
    pub subject: SubjectId,
    pub compressed: bool,
    pub functions: Vec<String>,
    pub objects: Vec<ObjectTuple>,
    #[serde(serialize_with = "ser_cells")]
    pub cells: BTreeMap<(String, ObjectTuple), TensorEntry>,
}

impl CapabilityMatrix {
    pub fn cell(&self, f: &str, o: &ObjectTuple) -> Option<&TensorEntry> {
        self.cells.get(&(f.to_string(), o.clone()))
    }
}

/// Classic subject × object matrix for one fixed function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerFunctionAcm {
    pub function: FunctionSig,
    pub compressed: bool,
    pub subjects: Vec<SubjectId>,
    pub objects: Vec<ObjectTuple>,
    #[serde(serialize_with = "ser_cells")]
    pub cells: BTreeMap<(SubjectId, ObjectTuple), TensorEntry>,
}

impl PerFunctionAcm {
    pub fn cell(&self, s: &str, o: &ObjectTuple) -> Option<&TensorEntry> {
        self.cells.get(&(SubjectId::new(s).ok()?, o.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionList {
    pub subject: SubjectId,
    pub object: ObjectTuple,
    pub entries: BTreeMap<String, TensorEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubjectList {
    pub function: FunctionSig,
    pub object: ObjectTuple,
    pub restriction: Option<BTreeSet<SubjectId>>,
    pub entries: BTreeMap<SubjectId, TensorEntry>,
}

impl SubjectList {
    /// Subjects holding `True` or `True[P]`.
    pub fn granted(&self) -> BTreeSet<SubjectId> {
        self.entries.iter().filter(|(_, e)| e.is_grant()).map(|(s, _)| s.clone()).collect()
    }
}

/// Restriction `B*` of an object list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TupleRestriction {
    /// Explicit set of tuples.
    Tuples(BTreeSet<ObjectTuple>),
    /// Tuples whose every element starts with the prefix, e.g. a directory.
    Prefix(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjectList {
    pub subject: SubjectId,
    pub function: FunctionSig,
    pub restriction: Option<TupleRestriction>,
    #[serde(serialize_with = "ser_cells")]
    pub entries: BTreeMap<ObjectTuple, TensorEntry>,
}

fn ser_cells<K: Serialize, S: serde::Serializer>(
    cells: &BTreeMap<K, TensorEntry>,
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    #[derive(Serialize)]
    struct Cell<'a, K> {
        at: &'a K,
        entry: &'a TensorEntry,
    }
    let mut seq = s.serialize_seq(Some(cells.len()))?;
    for (at, entry) in cells {
        seq.serialize_element(&Cell { at, entry })?;
    }
    seq.end()
}

fn check_tuple(t: &AccessTensor, o: &ObjectTuple) -> Result<(), ProjectionError> {
    Ok(t.check_objects(o.as_slice())?)
}

pub fn authorization_matrix(
    t: &AccessTensor,
    o: &ObjectTuple,
    compress: bool,
) -> Result<AuthorizationMatrix, ProjectionError> {
    check_tuple(t, o)?;
    let subjects: Vec<SubjectId> = t.subjects().cloned().collect();
    let functions: Vec<String> = t
        .functions()
        .filter(|f| !compress || f.arity == o.len())
        .map(|f| f.name.clone())
        .collect();
    let mut cells = BTreeMap::new();
    for s in &subjects {
        for f in &functions {
            cells.insert((s.clone(), f.clone()), t.lookup(s.as_str(), f, o.as_slice())?);
        }
    }
    Ok(AuthorizationMatrix { object: o.clone(), compressed: compress, subjects, functions, cells })
}

pub fn capability_matrix(
    t: &AccessTensor,
    s: &str,
    compress: bool,
    limits: Limits,
) -> Result<CapabilityMatrix, ProjectionError> {
    let subject = SubjectId::new(s)?;
    if !t.has_subject(s) {
        return Err(ActError::UnknownSubject(s.to_string()).into());
    }
    let objects: Vec<ObjectRef> = t.objects().cloned().collect();
    let tuples = tuples_of_lens(&objects, &column_lengths(t.functions(), compress), limits)?;
    let functions: Vec<String> = t.functions().map(|f| f.name.clone()).collect();
    let mut cells = BTreeMap::new();
    for f in t.functions() {
        for o in &tuples {
            if compress && o.len() != f.arity {
                continue;
            }
            cells.insert((f.name.clone(), o.clone()), t.lookup(s, &f.name, o.as_slice())?);
        }
    }
    Ok(CapabilityMatrix { subject, compressed: compress, functions, objects: tuples, cells })
}

pub fn per_function_acm(
    t: &AccessTensor,
    f: &str,
    compress: bool,
    limits: Limits,
) -> Result<PerFunctionAcm, ProjectionError> {
    let function = t.function(f)?.clone();
    let objects: Vec<ObjectRef> = t.objects().cloned().collect();
    let lens = if compress {
        BTreeSet::from([function.arity])
    } else {
        column_lengths(t.functions(), false)
    };
    let tuples = tuples_of_lens(&objects, &lens, limits)?;
    let subjects: Vec<SubjectId> = t.subjects().cloned().collect();
    let mut cells = BTreeMap::new();
    for s in &subjects {
        for o in &tuples {
            cells.insert((s.clone(), o.clone()), t.lookup(s.as_str(), f, o.as_slice())?);
        }
    }
    Ok(PerFunctionAcm { function, compressed: compress, subjects, objects: tuples, cells })
}

/// Rights of `s` on `o` for every function whose arity fits the tuple.
pub fn function_list(t: &AccessTensor, s: &str, o: &ObjectTuple) -> Result<FunctionList, ProjectionError> {
    build_function_list(t, s, o, |_| true)
}

/// Like [`function_list`] but limited to the functions available in an
/// application.
pub fn application_restricted_function_list(
    t: &AccessTensor,
    app: &BTreeSet<String>,
    s: &str,
    o: &ObjectTuple,
) -> Result<FunctionList, ProjectionError> {
    for f in app {
        t.function(f)?;
    }
    build_function_list(t, s, o, |f| app.contains(f))
}

fn build_function_list(
    t: &AccessTensor,
    s: &str,
    o: &ObjectTuple,
    keep: impl Fn(&str) -> bool,
) -> Result<FunctionList, ProjectionError> {
    let subject = SubjectId::new(s)?;
    if !t.has_subject(s) {
        return Err(ActError::UnknownSubject(s.to_string()).into());
    }
    check_tuple(t, o)?;
    let mut entries = BTreeMap::new();
    for f in t.functions().filter(|f| f.arity == o.len() && keep(&f.name)) {
        entries.insert(f.name.clone(), t.lookup(s, &f.name, o.as_slice())?);
    }
    Ok(FunctionList { subject, object: o.clone(), entries })
}

/// Who holds what on `(f, o)`, optionally restricted to the subjects in `only`.
pub fn subject_list(
    t: &AccessTensor,
    f: &str,
    o: &ObjectTuple,
    only: Option<&BTreeSet<SubjectId>>,
) -> Result<SubjectList, ProjectionError> {
    let function = t.function(f)?.clone();
    check_tuple(t, o)?;
    if function.arity != o.len() {
        return Err(ProjectionError::MeaninglessPair {
            function: f.to_string(),
            objects: o.to_string(),
            arity: function.arity,
        });
    }
    if let Some(only) = only {
        if let Some(bad) = only.iter().find(|s| !t.has_subject(s.as_str())) {
            return Err(ActError::UnknownSubject(bad.to_string()).into());
        }
    }
    let mut entries = BTreeMap::new();
    for s in t.subjects().filter(|s| only.is_none_or(|set| set.contains(*s))) {
        entries.insert(s.clone(), t.lookup(s.as_str(), f, o.as_slice())?);
    }
    Ok(SubjectList { function, object: o.clone(), restriction: only.cloned(), entries })
}

/// On which tuples `s` may run `f`, and with what restriction.
pub fn object_list(
    t: &AccessTensor,
    s: &str,
    f: &str,
    restriction: Option<&TupleRestriction>,
    limits: Limits,
) -> Result<ObjectList, ProjectionError> {
    let subject = SubjectId::new(s)?;
    if !t.has_subject(s) {
        return Err(ActError::UnknownSubject(s.to_string()).into());
    }
    let function = t.function(f)?.clone();
    let tuples: Vec<ObjectTuple> = match restriction {
        Some(TupleRestriction::Tuples(set)) => {
            for o in set {
                check_tuple(t, o)?;
            }
            set.iter().filter(|o| o.len() == function.arity).cloned().collect()
        }
        Some(TupleRestriction::Prefix(p)) => {
            let objects: Vec<ObjectRef> = t.objects().filter(|o| o.has_prefix(p)).cloned().collect();
            tuples_of_len(&objects, function.arity, limits)?
        }
        None => {
            let objects: Vec<ObjectRef> = t.objects().cloned().collect();
            tuples_of_len(&objects, function.arity, limits)?
        }
    };
    let mut entries = BTreeMap::new();
    for o in tuples {
        let e = t.lookup(s, f, o.as_slice())?;
        entries.insert(o, e);
    }
    Ok(ObjectList { subject, function, restriction: restriction.cloned(), entries })
}

// -- reports ------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Authz,
    Cap,
    Acm,
    Flist,
    Slist,
    Olist,
}

impl FromStr for ProjectionKind {
    type Err = ProjectionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "authz" => Self::Authz,
            "cap" => Self::Cap,
            "acm" => Self::Acm,
            "flist" => Self::Flist,
            "slist" => Self::Slist,
            "olist" => Self::Olist,
            other => return Err(ProjectionError::UnknownKind(other.to_string())),
        })
    }
}

/// Any of the six views, for uniform reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Projection {
    Authz(AuthorizationMatrix),
    Cap(CapabilityMatrix),
    Acm(PerFunctionAcm),
    Flist(FunctionList),
    Slist(SubjectList),
    Olist(ObjectList),
}

fn render_table(title: &str, header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let mut out = format!("{title}\n");
    let line = |cells: &[String], out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = widths[i]))
            .collect();
        let _ = writeln!(out, "{}", parts.join(" | ").trim_end());
    };
    line(header, &mut out);
    let sep: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", sep.join("-+-"));
    for r in rows {
        line(r, &mut out);
    }
    out
}

fn cell_text(e: Option<&TensorEntry>) -> String {
    e.map_or_else(String::new, |e| e.to_string())
}

impl Projection {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("projection serializes")
    }

    /// Tabular UTF-8 report.
    pub fn to_text(&self) -> String {
        match self {
            Projection::Authz(m) => {
                let mut header = vec!["subject \\ function".to_string()];
                header.extend(m.functions.iter().cloned());
                let rows: Vec<Vec<String>> = m
                    .subjects
                    .iter()
                    .map(|s| {
                        let mut r = vec![s.to_string()];
                        r.extend(m.functions.iter().map(|f| cell_text(m.cells.get(&(s.clone(), f.clone())))));
                        r
                    })
                    .collect();
                render_table(&format!("authorization matrix for ({})", m.object), &header, &rows)
            }
            Projection::Cap(m) => {
                let mut header = vec!["function \\ objects".to_string()];
                header.extend(m.objects.iter().map(|o| format!("({o})")));
                let rows: Vec<Vec<String>> = m
                    .functions
                    .iter()
                    .map(|f| {
                        let mut r = vec![f.clone()];
                        r.extend(m.objects.iter().map(|o| cell_text(m.cells.get(&(f.clone(), o.clone())))));
                        r
                    })
                    .collect();
                render_table(&format!("capability matrix for {}", m.subject), &header, &rows)
            }
            Projection::Acm(m) => {
                let mut header = vec!["subject \\ objects".to_string()];
                header.extend(m.objects.iter().map(|o| format!("({o})")));
                let rows: Vec<Vec<String>> = m
                    .subjects
                    .iter()
                    .map(|s| {
                        let mut r = vec![s.to_string()];
                        r.extend(m.objects.iter().map(|o| cell_text(m.cells.get(&(s.clone(), o.clone())))));
                        r
                    })
                    .collect();
                render_table(&format!("access control matrix for {}", m.function), &header, &rows)
            }
            Projection::Flist(l) => {
                let rows: Vec<Vec<String>> =
                    l.entries.iter().map(|(f, e)| vec![f.clone(), e.to_string()]).collect();
                render_table(
                    &format!("function list for {} on ({})", l.subject, l.object),
                    &["function".into(), "entry".into()],
                    &rows,
                )
            }
            Projection::Slist(l) => {
                let rows: Vec<Vec<String>> =
                    l.entries.iter().map(|(s, e)| vec![s.to_string(), e.to_string()]).collect();
                render_table(
                    &format!("subject list for {} on ({})", l.function.name, l.object),
                    &["subject".into(), "entry".into()],
                    &rows,
                )
            }
            Projection::Olist(l) => {
                let rows: Vec<Vec<String>> =
                    l.entries.iter().map(|(o, e)| vec![format!("({o})"), e.to_string()]).collect();
                render_table(
                    &format!("object list for {} using {}", l.subject, l.function.name),
                    &["objects".into(), "entry".into()],
                    &rows,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::act::{PolicyFile, Predicate};

    fn tensor(text: &str) -> AccessTensor {
        PolicyFile::parse(text).unwrap().to_tensor().unwrap()
    }

    fn tup(s: &str) -> ObjectTuple {
        ObjectTuple::parse(s).unwrap()
    }

    const UNIVERSE: &str = "\
SUBJECT alice
FUNCTION grep 1
FUNCTION join 2
OBJECT fileA
OBJECT fileB
";

    #[test]
    fn authz_compression_drops_wrong_arity_functions() {
        let t = tensor(UNIVERSE);
        let m = authorization_matrix(&t, &tup("fileA"), true).unwrap();
        assert_eq!(m.functions, vec!["grep".to_string()]);
        assert!(m.cells.values().all(|e| *e == TensorEntry::False));
        let full = authorization_matrix(&t, &tup("fileA"), false).unwrap();
        assert_eq!(full.cell("alice", "join"), Some(&TensorEntry::NotApplicable));
    }

    #[test]
    fn capability_singleton_grant() {
        let t = tensor("SUBJECT bob\nFUNCTION print 1\nFUNCTION join 2\nOBJECT docX\nENTRY bob print docX TRUE\n");
        let m = capability_matrix(&t, "bob", true, Limits::default()).unwrap();
        let granted: Vec<_> = m.cells.iter().filter(|(_, e)| **e != TensorEntry::False).collect();
        assert_eq!(granted.len(), 1);
        // (join, (docX)) is N/A and must be compressed away
        assert!(m.cell("join", &tup("docX")).is_none());
        assert!(m.cells.values().all(|e| *e != TensorEntry::NotApplicable));
    }

    #[test]
    fn acm_degenerates_to_lampson_matrix() {
        let t = tensor(
            "SUBJECT u1\nSUBJECT u2\nFUNCTION read 1\nOBJECT f1\nOBJECT f2\n\
             ENTRY u1 read f1 TRUE\nENTRY u2 read f2 TRUE\n",
        );
        let m = per_function_acm(&t, "read", true, Limits::default()).unwrap();
        let expect = [("u1", "f1", true), ("u1", "f2", false), ("u2", "f1", false), ("u2", "f2", true)];
        assert_eq!(m.cells.len(), 4);
        for (s, o, allowed) in expect {
            let want = if allowed { TensorEntry::True } else { TensorEntry::False };
            assert_eq!(m.cell(s, &tup(o)), Some(&want));
        }
    }

    #[test]
    fn restricted_function_list_is_intersection() {
        let t = tensor(
            "SUBJECT s\nFUNCTION search 1\nFUNCTION copy 1\nFUNCTION print 1\nOBJECT d\n\
             ENTRY s search d TRUE\nENTRY s print d TRUE\n",
        );
        let app: BTreeSet<String> = ["search".into(), "copy".into()].into();
        let l = application_restricted_function_list(&t, &app, "s", &tup("d")).unwrap();
        let granted: Vec<_> = l.entries.iter().filter(|(_, e)| e.is_grant()).map(|(f, _)| f.as_str()).collect();
        assert_eq!(granted, vec!["search"]);
        let everything: BTreeSet<String> = t.functions().map(|f| f.name.clone()).collect();
        assert_eq!(
            application_restricted_function_list(&t, &everything, "s", &tup("d")).unwrap(),
            function_list(&t, "s", &tup("d")).unwrap()
        );
    }

    #[test]
    fn leaked_document_audit() {
        let mut text = String::from("FUNCTION read_context 1\nOBJECT docX\n");
        for s in ["s1", "s2", "s3", "s4", "s5"] {
            text.push_str(&format!("SUBJECT {s}\n"));
        }
        text.push_str("ENTRY s2 read_context docX TRUE\nENTRY s4 read_context docX TRUE\n");
        let t = tensor(&text);
        let l = subject_list(&t, "read_context", &tup("docX"), None).unwrap();
        let granted: Vec<String> = l.granted().into_iter().map(String::from).collect();
        assert_eq!(granted, vec!["s2", "s4"]);
        let empty = subject_list(&t, "read_context", &tup("docX"), Some(&BTreeSet::new())).unwrap();
        assert!(empty.entries.is_empty());
    }

    #[test]
    fn subject_list_requires_meaningful_pair() {
        let t = tensor(UNIVERSE);
        assert!(matches!(
            subject_list(&t, "join", &tup("fileA"), None),
            Err(ProjectionError::MeaninglessPair { .. })
        ));
    }

    #[test]
    fn object_list_prefix_and_bounds() {
        let t = tensor(
            "SUBJECT a\nFUNCTION grep 1\nFUNCTION join 2\nOBJECT cia/f1\nOBJECT cia/f2\nOBJECT fbi/f3\n\
             ENTRY a grep cia/f1 TRUE_RE:pattern=terrorist\\nSTDIN:\n",
        );
        let l = object_list(&t, "a", "grep", Some(&TupleRestriction::Prefix("cia/".into())), Limits::default()).unwrap();
        assert_eq!(l.entries.len(), 2);
        assert!(l.entries.keys().all(|o| o.iter().all(|x| x.has_prefix("cia/"))));
        assert!(matches!(l.entries[&tup("cia/f1")], TensorEntry::TrueWith(Predicate::RegularExpression(_))));
        let all = object_list(&t, "a", "join", None, Limits::default()).unwrap();
        assert!(all.entries.len() <= 9);
        assert_eq!(all.entries.len(), 9);
    }

    #[test]
    fn enumeration_cap() {
        let t = tensor(UNIVERSE);
        let tiny = Limits { max_tuples: 3 };
        assert!(matches!(
            object_list(&t, "alice", "join", None, tiny),
            Err(ProjectionError::EnumerationTooLarge { count: 4, cap: 3 })
        ));
    }

    #[test]
    fn reports_render() {
        let t = tensor(UNIVERSE);
        let p = Projection::Authz(authorization_matrix(&t, &tup("fileA"), true).unwrap());
        let text = p.to_text();
        assert!(text.contains("alice"));
        assert!(text.contains("grep"));
        let json: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        assert_eq!(json["kind"], "authz");
        assert_eq!("olist".parse::<ProjectionKind>().unwrap(), ProjectionKind::Olist);
        assert!("matrix".parse::<ProjectionKind>().is_err());
    }
}

//! Generators and brute-force oracles shared by the integration tests.
//!
//! The oracles here re-derive expected values from first principles and do
//! not call the library code they are used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fbac::act::{AccessTensor, FunctionSig, ObjectRef, ObjectTuple, Predicate, SubjectId, TensorEntry};
use fbac::adoc::{Atom, AtomLink, AtomicDocument, Cascade, PolicyEntry};
use fbac::lattice::SecurityClass;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn sid(s: &str) -> SubjectId {
    SubjectId::new(s).unwrap()
}

pub fn oref(s: &str) -> ObjectRef {
    ObjectRef::new(s).unwrap()
}

pub fn tuple(names: &[String]) -> ObjectTuple {
    names.iter().map(|n| oref(n)).collect::<Vec<_>>().into()
}

/// `objects^len` by nested loops, in lexicographic order of positions.
pub fn all_tuples(objects: &[String], len: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for prefix in &out {
            for o in objects {
                let mut t = prefix.clone();
                t.push(o.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// A dense copy of a tensor: every stored coordinate and its entry.
#[derive(Debug, Clone, Default)]
pub struct Dense {
    pub subjects: Vec<String>,
    pub functions: Vec<(String, usize)>,
    pub objects: Vec<String>,
    pub stored: BTreeMap<(String, String, Vec<String>), TensorEntry>,
}

impl Dense {
    pub fn arity(&self, f: &str) -> usize {
        self.functions.iter().find(|(n, _)| n == f).map(|(_, a)| *a).unwrap()
    }

    pub fn max_arity(&self) -> usize {
        self.functions.iter().map(|(_, a)| *a).max().unwrap_or(0)
    }

    /// Definition-level lookup: wrong length is N/A, a missing entry is False.
    pub fn lookup(&self, s: &str, f: &str, o: &[String]) -> TensorEntry {
        if o.len() != self.arity(f) {
            return TensorEntry::NotApplicable;
        }
        self.stored.get(&(s.to_string(), f.to_string(), o.to_vec())).cloned().unwrap_or(TensorEntry::False)
    }
}

pub fn random_entry(rng: &mut impl Rng) -> TensorEntry {
    match rng.gen_range(0..3) {
        0 => TensorEntry::False,
        1 => TensorEntry::True,
        _ => TensorEntry::TrueWith(Predicate::regex(["count=[0-5]\nSTDIN:.*", "quiet.*", "[^;]*"][rng.gen_range(0..3)]).unwrap()),
    }
}

/// A tensor with up to `max_dim` subjects, functions and objects, arities up
/// to `max_arity`, and a random subset of coordinates stored.
pub fn random_tensor(rng: &mut impl Rng, max_dim: usize, max_arity: usize) -> (AccessTensor, Dense) {
    let mut d = Dense {
        subjects: (0..rng.gen_range(1..=max_dim)).map(|i| format!("s{i}")).collect(),
        functions: (0..rng.gen_range(1..=max_dim)).map(|i| (format!("f{i}"), rng.gen_range(0..=max_arity))).collect(),
        objects: (0..rng.gen_range(1..=max_dim)).map(|i| format!("o{i}")).collect(),
        ..Dense::default()
    };
    let mut t = AccessTensor::new();
    for s in &d.subjects {
        t.create_subject(sid(s)).unwrap();
    }
    for (f, a) in &d.functions {
        t.create_function(FunctionSig::new(f.clone(), *a).unwrap()).unwrap();
    }
    for o in &d.objects {
        t.create_object(oref(o)).unwrap();
    }
    let density = rng.gen_range(0.0..0.8);
    for s in d.subjects.clone() {
        for (f, a) in d.functions.clone() {
            for o in all_tuples(&d.objects, a) {
                if rng.gen_bool(density) {
                    let e = random_entry(rng);
                    t.enter_entry(&sid(&s), &f, tuple(&o), e.clone()).unwrap();
                    d.stored.insert((s.clone(), f.clone(), o), e);
                }
            }
        }
    }
    (t, d)
}

pub const WORDS: &[&str] = &[
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
];

/// Text whose every line carries the atom id and line number, so no two
/// atoms ever share a line.
pub fn unique_lines(rng: &mut impl Rng, atom: &str, n: usize) -> String {
    (0..n)
        .map(|i| {
            let words: Vec<&str> = (0..rng.gen_range(1..5)).map(|_| *WORDS.choose(rng).unwrap()).collect();
            format!("{atom}-line{i} {}", words.join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Unary functions a document policy may name.
pub const POLICY_FUNCTIONS: &[&str] = &[
    "read",
    "search",
    "print",
    "email",
    "copy_byte_restricted",
    "copy_character_limited",
    "copy_sensitive_word_exclusion",
    "copy_with_citation",
];

/// A document with `n` atoms of unique lines (image atoms included) and
/// random grants for `subjects` over `functions`. No forbidden functions.
pub fn random_policy_document(
    rng: &mut impl Rng,
    id: &str,
    n: usize,
    subjects: &[SubjectId],
    functions: &[&str],
) -> AtomicDocument {
    let mut d = AtomicDocument::new(id).unwrap();
    for i in 0..n {
        let aid = format!("a{i}");
        let atom = if rng.gen_bool(0.15) {
            Atom::image(&aid, format!("media/{aid}.png")).unwrap()
        } else {
            let lines = rng.gen_range(1..6);
            Atom::text(&aid, unique_lines(rng, &format!("{id}{aid}"), lines)).unwrap()
        };
        d = d.with_atom(atom).unwrap();
    }
    let ids: Vec<String> = d.atoms.iter().map(|a| a.id.clone()).collect();
    for aid in &ids {
        for s in subjects {
            for f in functions {
                if rng.gen_bool(0.45) {
                    d = d.grant(aid, s, f, random_grant(rng)).unwrap();
                }
            }
        }
    }
    d
}

fn random_grant(rng: &mut impl Rng) -> TensorEntry {
    match rng.gen_range(0..4) {
        0 => TensorEntry::False,
        1 => TensorEntry::TrueWith(Predicate::regex("pattern=[^;]*;context=(?:0|1|2);.*").unwrap()),
        _ => TensorEntry::True,
    }
}

const TEXT_PIECES: &[&str] = &[
    "plain",
    "ümlaut",
    "日本語",
    "a]]>b",
    "<tag attr=\"x\">",
    "&amp; &",
    "tab\there",
    "'quote'",
    "",
    "  padded  ",
    "emoji 🦀",
];

fn random_class(rng: &mut impl Rng) -> SecurityClass {
    let comps: Vec<&str> = ["A", "B", "C"].into_iter().filter(|_| rng.gen_bool(0.5)).collect();
    SecurityClass::new(rng.gen_range(0..4), comps)
}

/// A structurally valid document exercising every part of the format:
/// image atoms, classifications, links, removed atoms, forbidden
/// functions, awkward text and policy predicates.
pub fn random_format_document(rng: &mut impl Rng, id: &str) -> AtomicDocument {
    let mut d = AtomicDocument::new(id).unwrap();
    let n = rng.gen_range(1..8);
    for i in 0..n {
        let aid = format!("x{i}");
        let mut atom = if rng.gen_bool(0.2) {
            Atom::image(&aid, format!("https://example.org/{aid}.png?q={}", rng.gen::<u16>())).unwrap()
        } else {
            let lines: Vec<String> = (0..rng.gen_range(0..4))
                .map(|_| {
                    (0..rng.gen_range(1..4)).map(|_| *TEXT_PIECES.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
                })
                .collect();
            Atom::text(&aid, lines.join("\n")).unwrap()
        };
        if rng.gen_bool(0.3) {
            atom = atom.with_classification(random_class(rng));
        }
        atom.removed = rng.gen_bool(0.1);
        d = d.with_atom(atom).unwrap();
    }
    let ids: Vec<String> = d.atoms.iter().map(|a| a.id.clone()).collect();
    for aid in &ids {
        let a = d.atoms.iter_mut().find(|a| a.id == *aid).unwrap();
        for _ in 0..rng.gen_range(0..3) {
            let target = ids.choose(rng).unwrap();
            if target != aid {
                let cascade = if rng.gen_bool(0.5) { Cascade::UnavailableOnRemove } else { Cascade::None };
                a.links.push(AtomLink::new(target.clone(), "quote-of", cascade).unwrap());
            }
        }
        if rng.gen_bool(0.2) {
            a.links.push(AtomLink::new("other/p1", "cites", Cascade::None).unwrap());
        }
        for _ in 0..rng.gen_range(0..4) {
            let subject = sid(["alice", "bob", "carol"].choose(rng).unwrap());
            let function = POLICY_FUNCTIONS.choose(rng).unwrap().to_string();
            if a.policy.iter().any(|e| e.subject == subject && e.function == function) {
                continue;
            }
            let objects = ObjectTuple::single(ObjectRef::atom(id, aid).unwrap());
            a.policy.push(PolicyEntry { subject, function, objects, value: random_grant(rng) });
        }
    }
    if rng.gen_bool(0.5) {
        let f: Vec<&str> = POLICY_FUNCTIONS.iter().copied().filter(|_| rng.gen_bool(0.2)).collect();
        d = d.with_forbidden(f);
    }
    if rng.gen_bool(0.3) {
        d = d.with_classification(random_class(rng));
    }
    d
}

/// Per-atom acceptance: no granted function is forbidden, and in a
/// classified document the atom is classified and dominated.
pub fn atom_acceptable(d: &AtomicDocument, a: &Atom) -> bool {
    let granted: BTreeSet<&str> = a
        .policy
        .iter()
        .filter(|e| matches!(e.value, TensorEntry::True | TensorEntry::TrueWith(_)))
        .map(|e| e.function.as_str())
        .collect();
    let no_forbidden = granted.iter().all(|f| !d.forbidden_functions.contains(*f));
    let dominated = match (&d.classification, &a.classification) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(dc), Some(ac)) => ac.level <= dc.level && ac.compartments.iter().all(|c| dc.compartments.contains(c)),
    };
    no_forbidden && dominated
}

/// `\xHH` encoding of one string under the canonical-serialization rule,
/// written byte by byte from the rule rather than from the library.
pub fn encode(bytes: &[u8], in_value: bool) -> String {
    let mut out = String::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        let (valid, bad) = match std::str::from_utf8(rest) {
            Ok(s) => (s, 0),
            Err(e) => (std::str::from_utf8(&rest[..e.valid_up_to()]).unwrap(), e.error_len().unwrap_or(rest.len() - e.valid_up_to())),
        };
        for c in valid.chars() {
            let escape = c == '\\' || c == '\u{7f}' || (in_value && (c == '\n' || c == ';')) || (c != '\n' && c != '\t' && (c as u32) < 0x20);
            if escape {
                out.push_str(&format!("\\x{:02x}", c as u32));
            } else {
                out.push(c);
            }
        }
        let skip = valid.len();
        for b in &rest[skip..skip + bad] {
            out.push_str(&format!("\\x{b:02x}"));
        }
        rest = &rest[skip + bad..];
    }
    out
}

pub fn canonical_oracle(options: &[(String, Option<String>)], stdin: &[u8]) -> String {
    let opts: Vec<String> = options
        .iter()
        .map(|(k, v)| match v {
            Some(v) => format!("{k}={}", encode(v.as_bytes(), true)),
            None => k.clone(),
        })
        .collect();
    format!("{}\nSTDIN:{}", opts.join(";"), encode(stdin, false))
}

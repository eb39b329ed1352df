//! Lattice information-flow policies with function-dependent security classes.
//!
//! A class is a rank plus a compartment set, ordered by rank and set
//! inclusion. Classes are assigned to subjects and to (function, objects)
//! pairs; information flows to a subject through `f` on `o` only when the
//! pair's class is dominated by the subject's class. Integrity (Biba) writes
//! use the same order: `s` may write `o` when `class(o) ⪯ class(s)`.
//!
//! A [`ClassAssignment`] compiles into plain tensor entries so the decision
//! path stays policy-agnostic. Pairs without a class are left untouched and
//! therefore deny.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::act::{AccessTensor, ActError, ObjectTuple, SubjectId, TensorEntry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("class {0} is not part of the lattice")]
    ForeignClass(String),
    #[error("no class assigned to subject `{0}`")]
    UnassignedSubject(String),
    #[error("no class assigned to pair ({function}, {objects})")]
    UnassignedPair { function: String, objects: String },
    #[error("no class assigned to object tuple ({0})")]
    UnassignedObject(String),
    #[error(transparent)]
    Act(#[from] ActError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SecurityClass {
    pub level: u32,
    pub compartments: BTreeSet<String>,
}

impl SecurityClass {
    pub fn new<I, S>(level: u32, compartments: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { level, compartments: compartments.into_iter().map(Into::into).collect() }
    }

    /// Dominance without lattice membership checks.
    pub fn dominated_by(&self, other: &SecurityClass) -> bool {
        self.level <= other.level && self.compartments.is_subset(&other.compartments)
    }
}

impl fmt::Display for SecurityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {{", self.level)?;
        for (i, c) in self.compartments.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(c)?;
        }
        f.write_str("})")
    }
}

/// The lattice `(SC, ⪯)` spanned by a set of ranks and a compartment universe.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClassLattice {
    pub levels: BTreeMap<u32, String>,
    pub compartments: BTreeSet<String>,
}

impl ClassLattice {
    pub fn new<L, C>(levels: L, compartments: C) -> Self
    where
        L: IntoIterator<Item = (u32, String)>,
        C: IntoIterator<Item = String>,
    {
        Self { levels: levels.into_iter().collect(), compartments: compartments.into_iter().collect() }
    }

    pub fn contains(&self, c: &SecurityClass) -> bool {
        self.levels.contains_key(&c.level) && c.compartments.is_subset(&self.compartments)
    }

    fn check(&self, c: &SecurityClass) -> Result<(), LatticeError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(LatticeError::ForeignClass(c.to_string()))
        }
    }

    pub fn leq(&self, a: &SecurityClass, b: &SecurityClass) -> Result<bool, LatticeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(a.dominated_by(b))
    }

    pub fn join(&self, a: &SecurityClass, b: &SecurityClass) -> Result<SecurityClass, LatticeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(SecurityClass {
            level: a.level.max(b.level),
            compartments: a.compartments.union(&b.compartments).cloned().collect(),
        })
    }

    pub fn meet(&self, a: &SecurityClass, b: &SecurityClass) -> Result<SecurityClass, LatticeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(SecurityClass {
            level: a.level.min(b.level),
            compartments: a.compartments.intersection(&b.compartments).cloned().collect(),
        })
    }

    /// Every class of the lattice: each level with each compartment subset.
    pub fn classes(&self) -> Vec<SecurityClass> {
        let comps: Vec<&String> = self.compartments.iter().collect();
        let mut out = Vec::new();
        for &level in self.levels.keys() {
            for mask in 0u64..(1u64 << comps.len()) {
                let set = comps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, c)| (*c).clone())
                    .collect();
                out.push(SecurityClass { level, compartments: set });
            }
        }
        out
    }

    /// Resolves a level written either as its rank or its name.
    pub fn level_by_name(&self, s: &str) -> Option<u32> {
        if let Ok(r) = s.parse::<u32>() {
            return self.levels.contains_key(&r).then_some(r);
        }
        self.levels.iter().find(|(_, n)| n.as_str() == s).map(|(r, _)| *r)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Confidentiality,
    Integrity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassAssignment {
    pub lattice: ClassLattice,
    pub mode: Mode,
    pub subject_class: BTreeMap<SubjectId, SecurityClass>,
    pub pair_class: BTreeMap<(String, ObjectTuple), SecurityClass>,
    /// Integrity classes of object tuples, used by Biba write checks.
    pub object_class: BTreeMap<ObjectTuple, SecurityClass>,
}

impl ClassAssignment {
    pub fn new(lattice: ClassLattice) -> Self {
        Self { lattice, ..Self::default() }
    }

    pub fn assign_subject(&mut self, s: SubjectId, c: SecurityClass) -> Result<(), LatticeError> {
        self.lattice.check(&c)?;
        self.subject_class.insert(s, c);
        Ok(())
    }

    pub fn assign_pair(&mut self, f: &str, o: ObjectTuple, c: SecurityClass) -> Result<(), LatticeError> {
        self.lattice.check(&c)?;
        self.pair_class.insert((f.to_string(), o), c);
        Ok(())
    }

    pub fn assign_object(&mut self, o: ObjectTuple, c: SecurityClass) -> Result<(), LatticeError> {
        self.lattice.check(&c)?;
        self.object_class.insert(o, c);
        Ok(())
    }

    fn subject(&self, s: &str) -> Result<&SecurityClass, LatticeError> {
        SubjectId::new(s)
            .ok()
            .and_then(|id| self.subject_class.get(&id))
            .ok_or_else(|| LatticeError::UnassignedSubject(s.to_string()))
    }

    /// `class(f, o) ⪯ class(s)`.
    pub fn flow_allowed(&self, s: &str, f: &str, o: &ObjectTuple) -> Result<bool, LatticeError> {
        let sc = self.subject(s)?;
        let pc = self
            .pair_class
            .get(&(f.to_string(), o.clone()))
            .ok_or_else(|| LatticeError::UnassignedPair { function: f.to_string(), objects: o.to_string() })?;
        self.lattice.leq(pc, sc)
    }

    /// Biba: `class(o) ⪯ class(s)` under integrity levels.
    pub fn biba_write_allowed(&self, s: &str, o: &ObjectTuple) -> Result<bool, LatticeError> {
        let sc = self.subject(s)?;
        let oc = self
            .object_class
            .get(o)
            .ok_or_else(|| LatticeError::UnassignedObject(o.to_string()))?;
        self.lattice.leq(oc, sc)
    }

    /// Writes `True`/`False` for every (assigned subject, assigned pair)
    /// coordinate into a copy of `base`. Everything else is left as is.
    pub fn compile_to_tensor(&self, base: &AccessTensor) -> Result<AccessTensor, LatticeError> {
        let mut t = base.clone();
        for (s, sc) in &self.subject_class {
            for ((f, o), pc) in &self.pair_class {
                let e = if self.lattice.leq(pc, sc)? { TensorEntry::True } else { TensorEntry::False };
                t.enter_entry(s, f, o.clone(), e)?;
            }
        }
        Ok(t)
    }

    /// Parses a lattice policy file:
    ///
    /// ```text
    /// MODE confidentiality
    /// LEVEL 0 UNCLASSIFIED
    /// LEVEL 2 SECRET
    /// COMPARTMENT CT
    /// SUBJECTCLASS analyst SECRET CT
    /// PAIRCLASS grep_terrorist_count5 cia/report 0 CT
    /// OBJECTCLASS cia/report 0
    /// ```
    ///
    /// `LEVEL` and `COMPARTMENT` lines must precede their use.
    pub fn parse(text: &str) -> Result<Self, LatticeError> {
        let mut a = ClassAssignment::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |m: String| LatticeError::Parse { line, message: m };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let class_at = |a: &ClassAssignment, i: usize| -> Result<SecurityClass, LatticeError> {
                let lvl = fields.get(i).ok_or_else(|| err("missing level".into()))?;
                let level = a.lattice.level_by_name(lvl).ok_or_else(|| err(format!("unknown level `{lvl}`")))?;
                let c = SecurityClass::new(level, fields[i + 1..].iter().copied());
                a.lattice.check(&c).map_err(|e| err(e.to_string()))?;
                Ok(c)
            };
            match fields[0] {
                "MODE" => {
                    a.mode = match fields.get(1).copied() {
                        Some("confidentiality") if fields.len() == 2 => Mode::Confidentiality,
                        Some("integrity") if fields.len() == 2 => Mode::Integrity,
                        _ => return Err(err("expected `MODE confidentiality|integrity`".into())),
                    }
                }
                "LEVEL" => {
                    if fields.len() != 3 {
                        return Err(err("expected `LEVEL <rank> <name>`".into()));
                    }
                    let rank: u32 = fields[1].parse().map_err(|_| err(format!("invalid rank `{}`", fields[1])))?;
                    if a.lattice.levels.insert(rank, fields[2].to_string()).is_some() {
                        return Err(err(format!("rank {rank} declared twice")));
                    }
                }
                "COMPARTMENT" => {
                    if fields.len() != 2 {
                        return Err(err("expected `COMPARTMENT <token>`".into()));
                    }
                    a.lattice.compartments.insert(fields[1].to_string());
                }
                "SUBJECTCLASS" => {
                    let s = fields.get(1).ok_or_else(|| err("missing subject".into()))?;
                    let s = SubjectId::new(*s).map_err(|e| err(e.to_string()))?;
                    let c = class_at(&a, 2)?;
                    a.subject_class.insert(s, c);
                }
                "PAIRCLASS" => {
                    let f = fields.get(1).ok_or_else(|| err("missing function".into()))?;
                    let o = fields.get(2).ok_or_else(|| err("missing objects".into()))?;
                    let o = ObjectTuple::parse(o).map_err(|e| err(e.to_string()))?;
                    let c = class_at(&a, 3)?;
                    a.pair_class.insert((f.to_string(), o), c);
                }
                "OBJECTCLASS" => {
                    let o = fields.get(1).ok_or_else(|| err("missing objects".into()))?;
                    let o = ObjectTuple::parse(o).map_err(|e| err(e.to_string()))?;
                    let c = class_at(&a, 2)?;
                    a.object_class.insert(o, c);
                }
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }
        Ok(a)
    }
}

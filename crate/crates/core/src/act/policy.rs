//! Line-oriented policy files.
//!
//! ```text
//! # comment
//! SUBJECT alice
//! FUNCTION grep_in_file 1
//! OBJECT fileA
//! ENTRY alice grep_in_file fileA TRUE_RE:pattern=terrorist;context=[0-5]\nSTDIN:.*
//! ```
//!
//! Entry values are `FALSE`, `TRUE`, `TRUE_RE:<pattern>` (the rest of the
//! line) or `TRUE_PROG:<name>`. The object column is a comma separated tuple
//! or `-` for the empty tuple.

use std::collections::BTreeMap;

use super::ids::{FunctionSig, ObjectRef, ObjectTuple, SubjectId};
use super::tensor::{AccessTensor, TensorEntry};
use super::ActError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Subject(SubjectId),
    Function(FunctionSig),
    Object(ObjectRef),
    Entry {
        subject: SubjectId,
        function: String,
        objects: ObjectTuple,
        value: TensorEntry,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyFile {
    pub statements: Vec<(usize, Statement)>,
}

/// How [`PolicyFile::apply`] treats identifiers that already exist or are
/// missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyMode {
    /// Duplicate declarations and undeclared identifiers are errors.
    Strict,
    /// Declarations are idempotent and entry subjects are registered on
    /// first use. Functions and objects must still be known.
    Merge,
}

fn parse_err(line: usize, message: impl Into<String>) -> ActError {
    ActError::Parse { line, message: message.into() }
}

/// Splits off the next whitespace-delimited field.
fn next_field(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    if s.is_empty() {
        return None;
    }
    let end = s.find(char::is_whitespace).unwrap_or(s.len());
    Some((&s[..end], &s[end..]))
}

impl PolicyFile {
    pub fn parse(text: &str) -> Result<Self, ActError> {
        Self::parse_scoped(text, None)
    }

    /// Parses a policy block in which `@` in the object column stands for
    /// `this`. Only `ENTRY` lines are accepted when a scope is given.
    pub fn parse_scoped(text: &str, this: Option<&ObjectRef>) -> Result<Self, ActError> {
        let mut statements = Vec::new();
        let mut arities: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kw, rest) = next_field(line).expect("non-empty line");
            if this.is_some() && kw != "ENTRY" {
                return Err(parse_err(lineno, format!("only ENTRY lines are allowed here, found `{kw}`")));
            }
            let stmt = match kw {
                "SUBJECT" => Statement::Subject(Self::single_id(lineno, rest, |s| SubjectId::new(s))?),
                "OBJECT" => Statement::Object(Self::single_id(lineno, rest, |s| ObjectRef::new(s))?),
                "FUNCTION" => {
                    let (name, rest) = next_field(rest).ok_or_else(|| parse_err(lineno, "missing function name"))?;
                    let (arity, rest) = next_field(rest).ok_or_else(|| parse_err(lineno, "missing arity"))?;
                    if !rest.trim().is_empty() {
                        return Err(parse_err(lineno, "trailing input after arity"));
                    }
                    let arity: usize = arity
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("invalid arity `{arity}`")))?;
                    let sig = FunctionSig::new(name, arity).map_err(|e| parse_err(lineno, e.to_string()))?;
                    arities.insert(sig.name.clone(), arity);
                    Statement::Function(sig)
                }
                "ENTRY" => {
                    let (s, rest) = next_field(rest).ok_or_else(|| parse_err(lineno, "missing subject"))?;
                    let (f, rest) = next_field(rest).ok_or_else(|| parse_err(lineno, "missing function"))?;
                    let (o, rest) = next_field(rest).ok_or_else(|| parse_err(lineno, "missing object tuple"))?;
                    let value = rest.trim_start();
                    if value.is_empty() {
                        return Err(parse_err(lineno, "missing entry value"));
                    }
                    // Patterns may contain spaces; everything else is a single token.
                    if !value.starts_with("TRUE_RE:") && value.split_whitespace().count() != 1 {
                        return Err(parse_err(lineno, "trailing input after entry value"));
                    }
                    let subject = SubjectId::new(s).map_err(|e| parse_err(lineno, e.to_string()))?;
                    let objects = Self::parse_tuple(lineno, o, this)?;
                    if let Some(&arity) = arities.get(f) {
                        if arity != objects.len() {
                            return Err(parse_err(
                                lineno,
                                format!("function `{f}` has arity {arity} but the tuple has {} element(s)", objects.len()),
                            ));
                        }
                    }
                    let value = TensorEntry::from_token(value).map_err(|e| parse_err(lineno, e.to_string()))?;
                    Statement::Entry { subject, function: f.to_string(), objects, value }
                }
                other => return Err(parse_err(lineno, format!("unknown keyword `{other}`"))),
            };
            statements.push((lineno, stmt));
        }
        Ok(Self { statements })
    }

    fn single_id<T>(lineno: usize, rest: &str, ctor: impl Fn(&str) -> Result<T, ActError>) -> Result<T, ActError> {
        let (id, rest) = next_field(rest).ok_or_else(|| parse_err(lineno, "missing identifier"))?;
        if !rest.trim().is_empty() {
            return Err(parse_err(lineno, "trailing input after identifier"));
        }
        ctor(id).map_err(|e| parse_err(lineno, e.to_string()))
    }

    fn parse_tuple(lineno: usize, s: &str, this: Option<&ObjectRef>) -> Result<ObjectTuple, ActError> {
        if s == "-" {
            return Ok(ObjectTuple::empty());
        }
        s.split(',')
            .map(|part| match (part, this) {
                ("@", Some(me)) => Ok(me.clone()),
                _ => ObjectRef::new(part),
            })
            .collect::<Result<ObjectTuple, _>>()
            .map_err(|e| parse_err(lineno, e.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&SubjectId, &str, &ObjectTuple, &TensorEntry)> {
        self.statements.iter().filter_map(|(_, s)| match s {
            Statement::Entry { subject, function, objects, value } => {
                Some((subject, function.as_str(), objects, value))
            }
            _ => None,
        })
    }

    /// Builds a fresh tensor from this file alone.
    pub fn to_tensor(&self) -> Result<AccessTensor, ActError> {
        let mut t = AccessTensor::new();
        self.apply(&mut t, ApplyMode::Strict)?;
        Ok(t)
    }

    /// Applies declarations first, then entries, to `t`. Errors are reported
    /// with the offending line.
    pub fn apply(&self, t: &mut AccessTensor, mode: ApplyMode) -> Result<(), ActError> {
        let at = |line: usize| move |e: ActError| parse_err(line, e.to_string());
        for (line, stmt) in &self.statements {
            let res = match stmt {
                Statement::Subject(s) => {
                    if mode == ApplyMode::Merge && t.has_subject(s.as_str()) {
                        Ok(())
                    } else {
                        t.create_subject(s.clone())
                    }
                }
                Statement::Object(o) => {
                    if mode == ApplyMode::Merge && t.has_object(o.as_str()) {
                        Ok(())
                    } else {
                        t.create_object(o.clone())
                    }
                }
                Statement::Function(f) => match t.function(&f.name) {
                    Ok(existing) if mode == ApplyMode::Merge => {
                        if existing.arity == f.arity {
                            Ok(())
                        } else {
                            Err(ActError::ArityMismatch {
                                function: f.name.clone(),
                                expected: existing.arity,
                                got: f.arity,
                            })
                        }
                    }
                    _ => t.create_function(f.clone()),
                },
                Statement::Entry { .. } => Ok(()),
            };
            res.map_err(at(*line))?;
        }
        for (line, stmt) in &self.statements {
            if let Statement::Entry { subject, function, objects, value } = stmt {
                if mode == ApplyMode::Merge && !t.has_subject(subject.as_str()) {
                    t.create_subject(subject.clone()).map_err(at(*line))?;
                }
                t.enter_entry(subject, function, objects.clone(), value.clone()).map_err(at(*line))?;
            }
        }
        Ok(())
    }
}

/// Serializes a set of entries scoped to `this`, writing `@` for it.
pub fn scoped_entries_text<'a>(
    entries: impl IntoIterator<Item = (&'a SubjectId, &'a str, &'a ObjectTuple, &'a TensorEntry)>,
    this: &ObjectRef,
) -> String {
    let mut out = String::new();
    for (s, f, o, e) in entries {
        let tuple = if o.is_empty() {
            "-".to_string()
        } else {
            o.iter()
                .map(|x| if x == this { "@" } else { x.as_str() })
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str(&format!("ENTRY {s} {f} {tuple} {}\n", e.to_token()));
    }
    out
}

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use regex::{Regex, RegexBuilder};

use super::invocation::{canonical_serialize, Invocation};
use super::ActError;

const REGEX_SIZE_LIMIT: usize = 1 << 20;

/// Restriction attached to a `TrueWith` entry.
#[derive(Clone)]
pub enum Predicate {
    /// Pattern matched against the whole canonical serialization of the
    /// invocation.
    RegularExpression(CompiledPattern),
    /// Name of a registered built-in evaluator.
    ProgramRef(String),
}

#[derive(Clone)]
pub struct CompiledPattern {
    source: String,
    anchored: Arc<Regex>,
}

impl CompiledPattern {
    pub fn as_str(&self) -> &str {
        &self.source
    }

    pub fn is_full_match(&self, text: &str) -> bool {
        self.anchored.is_match(text)
    }
}

/// Rewrites raw newline, carriage return and tab characters into their regex
/// escapes so the pattern fits on one policy-file line, and spells leading or
/// trailing whitespace as `\x{..}` so it survives field trimming. Semantics
/// are unchanged.
fn normalize_pattern(p: &str) -> String {
    let mut out = String::with_capacity(p.len());
    let mut backslashes = 0usize;
    for c in p.chars() {
        let esc = match c {
            '\n' => Some('n'),
            '\r' => Some('r'),
            '\t' => Some('t'),
            _ => None,
        };
        match esc {
            // An escaped raw control char means the same as the raw char.
            Some(e) if backslashes % 2 == 1 => {
                out.pop();
                out.push('\\');
                out.push(e);
            }
            Some(e) => {
                out.push('\\');
                out.push(e);
            }
            None => out.push(c),
        }
        backslashes = if c == '\\' { backslashes + 1 } else { 0 };
    }
    protect_edges(&out)
}

fn hex_escape(c: char) -> String {
    format!("\\x{{{:x}}}", c as u32)
}

fn protect_edges(p: &str) -> String {
    let lead_len = p.len() - p.trim_start().len();
    let mut out: String = p[..lead_len].chars().map(hex_escape).collect();
    let body = &p[lead_len..];
    let trimmed = body.trim_end();
    if trimmed.len() == body.len() {
        out.push_str(body);
        return out;
    }
    let mut head = trimmed.to_string();
    let tail = &body[trimmed.len()..];
    let odd = head.chars().rev().take_while(|c| *c == '\\').count() % 2 == 1;
    if odd {
        // `\ ` is an escaped space; the escape is folded into the hex form.
        head.pop();
    }
    out.push_str(&head);
    out.extend(tail.chars().map(hex_escape));
    out
}

impl Predicate {
    /// Compiles a regular-expression predicate. The pattern must be valid on
    /// its own; it is then anchored at both ends with `.` matching newlines.
    pub fn regex(pattern: &str) -> Result<Self, ActError> {
        let source = normalize_pattern(pattern);
        let build = |p: &str| {
            RegexBuilder::new(p)
                .dot_matches_new_line(true)
                .size_limit(REGEX_SIZE_LIMIT)
                .build()
        };
        build(&source).map_err(|e| ActError::InvalidPattern {
            pattern: source.clone(),
            message: e.to_string(),
        })?;
        let anchored = build(&format!("^(?:{source})$")).map_err(|e| ActError::InvalidPattern {
            pattern: source.clone(),
            message: e.to_string(),
        })?;
        Ok(Predicate::RegularExpression(CompiledPattern {
            source,
            anchored: Arc::new(anchored),
        }))
    }

    pub fn program(name: impl Into<String>) -> Self {
        Predicate::ProgramRef(name.into())
    }

    pub fn body(&self) -> &str {
        match self {
            Predicate::RegularExpression(p) => p.as_str(),
            Predicate::ProgramRef(n) => n,
        }
    }

    /// Evaluates the predicate. Never mutates anything.
    pub fn matches(&self, programs: &ProgramRegistry, inv: &Invocation) -> Result<bool, ActError> {
        match self {
            Predicate::RegularExpression(p) => Ok(p.is_full_match(&canonical_serialize(inv))),
            Predicate::ProgramRef(name) => programs
                .get(name)
                .map(|prog| prog(inv))
                .ok_or_else(|| ActError::PredicateError(format!("unknown program `{name}`"))),
        }
    }
}

/// Free-function form of [`Predicate::matches`].
pub fn match_predicate(
    p: &Predicate,
    programs: &ProgramRegistry,
    inv: &Invocation,
) -> Result<bool, ActError> {
    p.matches(programs, inv)
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Predicate::RegularExpression(a), Predicate::RegularExpression(b)) => a.source == b.source,
            (Predicate::ProgramRef(a), Predicate::ProgramRef(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Predicate {}

impl Hash for Predicate {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Predicate::RegularExpression(p) => {
                0u8.hash(state);
                p.source.hash(state);
            }
            Predicate::ProgramRef(n) => {
                1u8.hash(state);
                n.hash(state);
            }
        }
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::RegularExpression(p) => f.debug_tuple("Regex").field(&p.source).finish(),
            Predicate::ProgramRef(n) => f.debug_tuple("Program").field(n).finish(),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::RegularExpression(p) => write!(f, "re:{}", p.source),
            Predicate::ProgramRef(n) => write!(f, "prog:{n}"),
        }
    }
}

pub type ProgramFn = Arc<dyn Fn(&Invocation) -> bool + Send + Sync>;

/// Registry of pure boolean evaluators usable as `ProgramRef` predicates.
#[derive(Clone)]
pub struct ProgramRegistry {
    programs: BTreeMap<String, ProgramFn>,
}

impl ProgramRegistry {
    pub fn empty() -> Self {
        Self { programs: BTreeMap::new() }
    }

    /// The built-in evaluators: `always`, `never`, `empty_stdin`, `no_options`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("always", |_| true);
        r.register("never", |_| false);
        r.register("empty_stdin", |inv| inv.stdin().is_empty());
        r.register("no_options", |inv| inv.options().is_empty());
        r
    }

    pub fn register<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&Invocation) -> bool + Send + Sync + 'static,
    {
        self.programs.insert(name.to_string(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&ProgramFn> {
        self.programs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.programs.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.programs.keys().map(String::as_str)
    }
}

impl Default for ProgramRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl fmt::Debug for ProgramRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.programs.keys()).finish()
    }
}

use regex::{Regex, RegexBuilder};
use serde::Serialize;

use super::catalog::ResolvedOptions;
use super::copy::word_matcher;
use super::render::Gate;
use super::{GuardedError, HIDDEN_WORD_MARKER};
use crate::act::{AccessTensor, Invocation, ObjectRef, Predicate, SubjectId};
use crate::adoc::{AtomKind, AtomicDocument};

const PATTERN_SIZE_LIMIT: usize = 1 << 20;

/// `true` iff `decide` allows; lookup errors (unknown subject or object)
/// deny like a missing entry, so callers cannot probe for existence.
pub(crate) fn permits(t: &AccessTensor, s: &SubjectId, f: &str, o: &[ObjectRef], inv: &Invocation) -> bool {
    t.decide(s.as_str(), f, o, inv).is_ok_and(|d| d.is_allow())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchOptions {
    pub pattern: String,
    /// Lines emitted above and below each hit.
    pub context: usize,
    /// Report only whether something matched.
    pub quiet: bool,
    /// Words replaced by a marker in every emitted line.
    pub hide_words: Vec<String>,
}

impl SearchOptions {
    pub fn new(pattern: impl Into<String>) -> Self {
        Self { pattern: pattern.into(), ..Self::default() }
    }

    pub fn context(mut self, n: usize) -> Self {
        self.context = n;
        self
    }

    pub fn quiet(mut self, q: bool) -> Self {
        self.quiet = q;
        self
    }

    pub fn hide<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.hide_words.extend(words.into_iter().map(Into::into));
        self
    }

    pub fn from_resolved(r: &ResolvedOptions) -> Self {
        Self {
            pattern: r.text("pattern").to_string(),
            context: usize::try_from(r.int("context")).unwrap_or(usize::MAX),
            quiet: r.flag("quiet"),
            hide_words: r.list("hide"),
        }
    }

    /// The same values in canonical schema order.
    pub fn resolved(&self) -> ResolvedOptions {
        let hide: Vec<&str> = self.hide_words.iter().map(|w| w.trim()).filter(|w| !w.is_empty()).collect();
        ResolvedOptions {
            values: vec![
                ("pattern".into(), self.pattern.clone()),
                ("context".into(), self.context.to_string()),
                ("quiet".into(), self.quiet.to_string()),
                ("hide".into(), hide.join(",")),
            ],
        }
    }

    pub fn invocation(&self, stdin: &[u8]) -> Invocation {
        self.resolved().invocation(stdin)
    }
}

/// A regular-expression predicate admitting search invocations whose
/// `context` option is at most `max`. Other options are unconstrained.
pub fn context_at_most(max: usize) -> Predicate {
    let alts: Vec<String> = (0..=max).map(|n| n.to_string()).collect();
    Predicate::regex(&format!("pattern=[^;]*;context=(?:{});.*", alts.join("|")))
        .expect("generated pattern is valid")
}

fn char_class(chars: &[char], negated: bool) -> String {
    let body: String = chars.iter().map(|c| format!("\\x{{{:x}}}", *c as u32)).collect();
    if negated {
        format!("[^{body}]")
    } else {
        format!("[{body}]")
    }
}

fn alt(a: Option<String>, b: String) -> Option<String> {
    Some(match a {
        Some(a) => format!("{a}|{b}"),
        None => b,
    })
}

/// A regular-expression predicate admitting invocations whose standard input
/// does not contain `word`. Options are unconstrained. The word must be
/// printable text without a backslash, since the canonical serialization
/// would escape anything else.
pub fn stdin_excludes(word: &str) -> Result<Predicate, GuardedError> {
    let bad = |m: &str| GuardedError::InvalidPattern { pattern: word.to_string(), message: m.to_string() };
    if word.is_empty() {
        return Err(bad("empty word"));
    }
    if word.chars().any(|c| c.is_control() || c == '\\') {
        return Err(bad("word must be printable and free of backslashes"));
    }
    let w: Vec<char> = word.chars().collect();
    let n = w.len();
    let mut alphabet = w.clone();
    alphabet.sort_unstable();
    alphabet.dedup();
    // Matching automaton: state k means the input ends with w[..k].
    let step = |k: usize, c: char| -> usize {
        let mut s: Vec<char> = w[..k].to_vec();
        s.push(c);
        (0..=s.len().min(n)).rev().find(|&l| s[s.len() - l..] == w[..l]).unwrap_or(0)
    };
    // a[i][j]: characters leading from i to j; b[i]: whether i may end.
    let mut a: Vec<Vec<Option<String>>> = vec![vec![None; n]; n];
    let mut b: Vec<Option<String>> = vec![Some(String::new()); n];
    for (k, row) in a.iter_mut().enumerate() {
        let mut to: Vec<Vec<char>> = vec![Vec::new(); n + 1];
        for &c in &alphabet {
            to[step(k, c)].push(c);
        }
        for (j, cs) in to.iter().enumerate().take(n) {
            if !cs.is_empty() {
                row[j] = Some(char_class(cs, false));
            }
        }
        row[0] = alt(row[0].take(), char_class(&alphabet, true));
    }
    // Eliminate states from the last, using Arden's rule on self loops.
    for k in (1..n).rev() {
        let star = a[k][k].take().map_or(String::new(), |l| format!("(?:{l})*"));
        for i in 0..k {
            let Some(into) = a[i][k].take() else { continue };
            let via = format!("(?:{into}){star}");
            let row = a[k][..k].to_vec();
            for (j, out) in row.into_iter().enumerate() {
                if let Some(out) = out {
                    a[i][j] = alt(a[i][j].take(), format!("{via}(?:{out})"));
                }
            }
            if let Some(end) = b[k].clone() {
                b[i] = alt(b[i].take(), format!("{via}(?:{end})"));
            }
        }
    }
    let star = a[0][0].take().map_or(String::new(), |l| format!("(?:{l})*"));
    let tail = b[0].take().unwrap_or_default();
    Predicate::regex(&format!("[^\\n]*\\nSTDIN:{star}(?:{tail})")).map_err(|e| bad(&e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hit {
    /// `None` for hits in standard input.
    pub atom: Option<String>,
    /// 1-based line number within the atom or input.
    pub line_number: usize,
    pub line: String,
    pub before: Vec<String>,
    pub after: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchResult {
    pub boolean_only: bool,
    pub matched: bool,
    pub hits: Vec<Hit>,
    /// Atoms (or inputs) searched after an Allow.
    pub searched: usize,
    /// Atoms skipped after a Deny.
    pub denied: usize,
}

impl SearchResult {
    /// Every line this result would show, in order.
    pub fn emitted_lines(&self) -> impl Iterator<Item = &str> {
        self.hits.iter().flat_map(|h| {
            h.before.iter().map(String::as_str).chain(std::iter::once(h.line.as_str())).chain(h.after.iter().map(String::as_str))
        })
    }

    /// grep-like text: `atom:line:text` for hits, `atom-line-text` for
    /// context, `--` between hits. Quiet results print `true`/`false`.
    pub fn to_text(&self) -> String {
        if self.boolean_only {
            return format!("{}\n", self.matched);
        }
        let mut out = String::new();
        for (i, h) in self.hits.iter().enumerate() {
            if i > 0 {
                out.push_str("--\n");
            }
            let tag = h.atom.as_deref().unwrap_or("-");
            let first = h.line_number - h.before.len();
            for (k, l) in h.before.iter().enumerate() {
                out.push_str(&format!("{tag}-{}-{l}\n", first + k));
            }
            out.push_str(&format!("{tag}:{}:{}\n", h.line_number, h.line));
            for (k, l) in h.after.iter().enumerate() {
                out.push_str(&format!("{tag}-{}-{l}\n", h.line_number + 1 + k));
            }
        }
        out
    }

    /// The payload a pipeline passes on: emitted lines only, no decoration.
    pub fn to_plain(&self) -> String {
        if self.boolean_only {
            return format!("{}\n", self.matched);
        }
        self.emitted_lines().flat_map(|l| [l, "\n"]).collect()
    }
}

struct Compiled {
    pattern: Regex,
    hide: Option<Regex>,
}

fn compile(opts: &SearchOptions) -> Result<Compiled, GuardedError> {
    let pattern = RegexBuilder::new(&opts.pattern)
        .size_limit(PATTERN_SIZE_LIMIT)
        .build()
        .map_err(|e| GuardedError::InvalidPattern { pattern: opts.pattern.clone(), message: e.to_string() })?;
    let hide = word_matcher(&opts.hide_words);
    Ok(Compiled { pattern, hide })
}

fn hide_line(c: &Compiled, line: &str) -> String {
    match &c.hide {
        Some(re) => re.replace_all(line, HIDDEN_WORD_MARKER).into_owned(),
        None => line.to_string(),
    }
}

/// Line search over one undividable unit. Hidden words are replaced before
/// matching, so a hidden word can never be detected through a match.
fn search_unit(c: &Compiled, atom: Option<&str>, text: &str, context: usize, out: &mut Vec<Hit>) -> bool {
    let lines: Vec<String> = text.lines().map(|l| hide_line(c, l)).collect();
    let mut any = false;
    for (i, l) in lines.iter().enumerate() {
        if !c.pattern.is_match(l) {
            continue;
        }
        any = true;
        let lo = i.saturating_sub(context);
        let hi = (i + 1).saturating_add(context).min(lines.len());
        out.push(Hit {
            atom: atom.map(str::to_string),
            line_number: i + 1,
            line: l.clone(),
            before: lines[lo..i].to_vec(),
            after: lines[i + 1..hi].to_vec(),
        });
    }
    any
}

fn finish(opts: &SearchOptions, matched: bool, hits: Vec<Hit>, searched: usize, denied: usize) -> SearchResult {
    if opts.quiet {
        SearchResult { boolean_only: true, matched, hits: Vec::new(), searched, denied }
    } else {
        SearchResult { boolean_only: false, matched, hits, searched, denied }
    }
}

/// Searches `text` without any authorization check. Used as the core of
/// both search functions and as a reference in tests.
pub fn search_lines(text: &str, opts: &SearchOptions) -> Result<Vec<Hit>, GuardedError> {
    let c = compile(opts)?;
    let mut hits = Vec::new();
    search_unit(&c, None, text, opts.context, &mut hits);
    Ok(hits)
}

/// Searches the available text atoms of `d` on which `s` is allowed
/// `search` under the invocation built from `opts`.
pub fn search(
    t: &AccessTensor,
    s: &SubjectId,
    d: &AtomicDocument,
    opts: &SearchOptions,
) -> Result<SearchResult, GuardedError> {
    search_atoms(t, s, d, None, opts, ("search", &opts.invocation(b"")))
}

pub(crate) fn search_atoms(
    t: &AccessTensor,
    s: &SubjectId,
    d: &AtomicDocument,
    only: Option<&str>,
    opts: &SearchOptions,
    gate: Gate<'_>,
) -> Result<SearchResult, GuardedError> {
    let c = compile(opts)?;
    let (function, inv) = gate;
    let (mut searched, mut denied, mut matched) = (0, 0, false);
    let mut hits = Vec::new();
    for a in d.available_atoms() {
        if a.kind != AtomKind::Text || only.is_some_and(|id| id != a.id) {
            continue;
        }
        let o = d.object_ref(&a.id)?;
        if !permits(t, s, function, &[o], inv) {
            denied += 1;
            continue;
        }
        searched += 1;
        matched |= search_unit(&c, Some(&a.id), &a.content, opts.context, &mut hits);
    }
    Ok(finish(opts, matched, hits, searched, denied))
}

/// Searches standard input. `decide` sees the empty tuple and an invocation
/// embedding `stdin`, so a predicate can constrain the input itself.
pub fn search_standard(
    t: &AccessTensor,
    s: &SubjectId,
    stdin: &[u8],
    opts: &SearchOptions,
) -> Result<SearchResult, GuardedError> {
    search_standard_as(t, s, ("search_standard", &opts.invocation(stdin)), stdin, opts)
}

pub(crate) fn search_standard_as(
    t: &AccessTensor,
    s: &SubjectId,
    gate: Gate<'_>,
    stdin: &[u8],
    opts: &SearchOptions,
) -> Result<SearchResult, GuardedError> {
    let c = compile(opts)?;
    let (function, inv) = gate;
    if !permits(t, s, function, &[], inv) {
        return Ok(finish(opts, false, Vec::new(), 0, 1));
    }
    Ok(search_stdin_unchecked(&c, stdin, opts))
}

fn search_stdin_unchecked(c: &Compiled, stdin: &[u8], opts: &SearchOptions) -> SearchResult {
    let text = String::from_utf8_lossy(stdin);
    let mut hits = Vec::new();
    let matched = search_unit(c, None, &text, opts.context, &mut hits);
    finish(opts, matched, hits, 1, 0)
}

/// Runs the standard-input search on already authorized data (the outer
/// stage of a pipeline whose composite decision has been made).
pub(crate) fn search_piped(stdin: &[u8], opts: &SearchOptions) -> Result<SearchResult, GuardedError> {
    let c = compile(opts)?;
    Ok(search_stdin_unchecked(&c, stdin, opts))
}

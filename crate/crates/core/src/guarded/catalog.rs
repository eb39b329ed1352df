use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::GuardedError;
use crate::act::{AccessTensor, ActError, FunctionSig, Invocation, COMPOSE_SEPARATOR};
use crate::adoc::FunctionRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionType {
    /// Non-negative decimal integer, canonicalized without leading zeros.
    Int,
    /// `true` or `false`.
    Bool,
    /// Comma separated items, trimmed, empties dropped.
    List,
    /// Arbitrary text, kept verbatim.
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptionSpec {
    pub key: String,
    pub ty: OptionType,
    /// `None` marks a required option.
    pub default: Option<String>,
}

impl OptionSpec {
    fn new(key: &str, ty: OptionType, default: Option<&str>) -> Self {
        Self { key: key.to_string(), ty, default: default.map(str::to_string) }
    }

    fn canonical(&self, raw: &str) -> Result<String, GuardedError> {
        let bad = |m: &str| GuardedError::InvalidOption { key: self.key.clone(), message: m.to_string() };
        match self.ty {
            OptionType::Int => {
                if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad("expected a non-negative integer"));
                }
                raw.parse::<u64>().map(|n| n.to_string()).map_err(|_| bad("integer out of range"))
            }
            OptionType::Bool => match raw {
                "true" | "false" => Ok(raw.to_string()),
                _ => Err(bad("expected `true` or `false`")),
            },
            OptionType::List => Ok(split_list(raw).join(",")),
            OptionType::Text => Ok(raw.to_string()),
        }
    }
}

pub(crate) fn split_list(raw: &str) -> Vec<&str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// What a function may emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputContract {
    /// Content of readable atoms, markers elsewhere.
    RenderedView,
    /// Matching lines with a bounded context window, or a boolean.
    SearchResult,
    /// A watermarked, paginated rendered view.
    PrintArtifact,
    /// An outbox record whose CC includes the policy address.
    OutboxRecord,
    /// A bounded payload inserted into a destination document.
    CopyResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CopyKind {
    ByteRestricted,
    CharacterLimited,
    SensitiveWordExclusion,
    WithCitation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Read,
    Search,
    SearchStandard,
    Print,
    Email,
    Copy(CopyKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Implementation {
    Builtin(Builtin),
    /// `outer∘inner`: `inner` runs on the objects, `outer` reads its output
    /// as standard input.
    Composite { outer: String, inner: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GuardedFunctionSpec {
    pub sig: FunctionSig,
    pub options: Vec<OptionSpec>,
    pub output: OutputContract,
    pub implementation: Implementation,
}

/// Option values after validation, in schema order with defaults filled in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ResolvedOptions {
    pub values: Vec<(String, String)>,
}

impl ResolvedOptions {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn text(&self, key: &str) -> &str {
        self.get(key).unwrap_or("")
    }

    pub fn int(&self, key: &str) -> u64 {
        self.get(key).and_then(|v| v.parse().ok()).unwrap_or(0)
    }

    pub fn flag(&self, key: &str) -> bool {
        self.get(key) == Some("true")
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        split_list(self.text(key)).into_iter().map(str::to_string).collect()
    }

    /// The invocation `decide` sees: every option as `key=value` in schema
    /// order, then `stdin`.
    pub fn invocation(&self, stdin: &[u8]) -> Invocation {
        let mut inv = Invocation::default().with_stdin(stdin.to_vec());
        for (k, v) in &self.values {
            inv = inv.with_value(k, v).expect("schema keys are valid option keys");
        }
        inv
    }
}

/// The registry of executable functions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Catalog {
    specs: BTreeMap<String, GuardedFunctionSpec>,
}

fn search_options() -> Vec<OptionSpec> {
    vec![
        OptionSpec::new("pattern", OptionType::Text, None),
        OptionSpec::new("context", OptionType::Int, Some("0")),
        OptionSpec::new("quiet", OptionType::Bool, Some("false")),
        OptionSpec::new("hide", OptionType::List, Some("")),
    ]
}

impl Catalog {
    /// The built-in functions: `read`, `search`, `search_standard`,
    /// `print`, `email` and the four copy variants.
    pub fn standard() -> Self {
        let dest = || OptionSpec::new("dest", OptionType::Text, Some(""));
        let mut c = Catalog::default();
        let mut add = |name: &str, arity, options, output, b| {
            let sig = FunctionSig::new(name, arity).expect("valid builtin name");
            c.specs.insert(
                name.to_string(),
                GuardedFunctionSpec { sig, options, output, implementation: Implementation::Builtin(b) },
            );
        };
        add("read", 1, vec![], OutputContract::RenderedView, Builtin::Read);
        add("search", 1, search_options(), OutputContract::SearchResult, Builtin::Search);
        add("search_standard", 0, search_options(), OutputContract::SearchResult, Builtin::SearchStandard);
        add("print", 1, vec![], OutputContract::PrintArtifact, Builtin::Print);
        add(
            "email",
            1,
            vec![OptionSpec::new("to", OptionType::List, None), OptionSpec::new("cc", OptionType::List, Some(""))],
            OutputContract::OutboxRecord,
            Builtin::Email,
        );
        add(
            "copy_byte_restricted",
            1,
            vec![OptionSpec::new("max_bytes", OptionType::Int, None), dest()],
            OutputContract::CopyResult,
            Builtin::Copy(CopyKind::ByteRestricted),
        );
        add(
            "copy_character_limited",
            1,
            vec![OptionSpec::new("max_chars", OptionType::Int, None), dest()],
            OutputContract::CopyResult,
            Builtin::Copy(CopyKind::CharacterLimited),
        );
        add(
            "copy_sensitive_word_exclusion",
            1,
            vec![OptionSpec::new("blocklist", OptionType::List, None), dest()],
            OutputContract::CopyResult,
            Builtin::Copy(CopyKind::SensitiveWordExclusion),
        );
        add(
            "copy_with_citation",
            1,
            vec![dest()],
            OutputContract::CopyResult,
            Builtin::Copy(CopyKind::WithCitation),
        );
        c
    }

    /// Registers a custom function spec, e.g. for tests over small
    /// registries.
    pub fn register(&mut self, spec: GuardedFunctionSpec) -> Result<(), GuardedError> {
        if self.specs.contains_key(&spec.sig.name) {
            return Err(GuardedError::DuplicateComposite(spec.sig.name));
        }
        self.specs.insert(spec.sig.name.clone(), spec);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&GuardedFunctionSpec, GuardedError> {
        self.specs.get(name).ok_or_else(|| GuardedError::UnknownFunction(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.specs.contains_key(name)
    }

    pub fn specs(&self) -> impl Iterator<Item = &GuardedFunctionSpec> {
        self.specs.values()
    }

    pub fn names(&self) -> BTreeSet<String> {
        self.specs.keys().cloned().collect()
    }

    /// Registers `f∘g`. Its arity is that of `g`; its options are those of
    /// `f` followed by the remaining ones of `g`, shared keys being passed
    /// to both. No authorization is inherited from `f` or `g`.
    pub fn compose(&mut self, f: &str, g: &str) -> Result<FunctionSig, GuardedError> {
        let outer = self.get(f)?.clone();
        let inner = self.get(g)?.clone();
        let name = format!("{f}{COMPOSE_SEPARATOR}{g}");
        if self.specs.contains_key(&name) {
            return Err(GuardedError::DuplicateComposite(name));
        }
        let mut options = outer.options.clone();
        for o in &inner.options {
            match options.iter().find(|x| x.key == o.key) {
                Some(x) if x.ty != o.ty => {
                    return Err(GuardedError::InvalidOption {
                        key: o.key.clone(),
                        message: format!("declared with different types by `{f}` and `{g}`"),
                    })
                }
                Some(_) => {}
                None => options.push(o.clone()),
            }
        }
        let sig = FunctionSig::new(name.clone(), inner.sig.arity)?;
        self.specs.insert(
            name,
            GuardedFunctionSpec {
                sig: sig.clone(),
                options,
                output: outer.output,
                implementation: Implementation::Composite { outer: f.to_string(), inner: g.to_string() },
            },
        );
        Ok(sig)
    }

    /// Declares every catalog function in `t` that is not declared yet.
    pub fn install(&self, t: &mut AccessTensor) -> Result<(), ActError> {
        for spec in self.specs.values() {
            match t.function(&spec.sig.name) {
                Ok(existing) if existing.arity != spec.sig.arity => {
                    return Err(ActError::ArityMismatch {
                        function: spec.sig.name.clone(),
                        expected: spec.sig.arity,
                        got: existing.arity,
                    })
                }
                Ok(_) => {}
                Err(_) => t.create_function(spec.sig.clone())?,
            }
        }
        Ok(())
    }

    /// Validates caller options against the schema of `function`.
    pub fn resolve_options(&self, function: &str, given: &[(String, String)]) -> Result<ResolvedOptions, GuardedError> {
        let spec = self.get(function)?;
        let mut seen = BTreeSet::new();
        for (k, _) in given {
            if !seen.insert(k.as_str()) {
                return Err(GuardedError::InvalidOption { key: k.clone(), message: "given more than once".into() });
            }
            if !spec.options.iter().any(|o| o.key == *k) {
                return Err(GuardedError::InvalidOption {
                    key: k.clone(),
                    message: format!("not an option of `{function}`"),
                });
            }
        }
        let mut values = Vec::with_capacity(spec.options.len());
        for o in &spec.options {
            let raw = match given.iter().find(|(k, _)| *k == o.key) {
                Some((_, v)) => v.as_str(),
                None => o.default.as_deref().ok_or_else(|| GuardedError::InvalidOption {
                    key: o.key.clone(),
                    message: "required".into(),
                })?,
            };
            values.push((o.key.clone(), o.canonical(raw)?));
        }
        Ok(ResolvedOptions { values })
    }

    /// Options for one stage of a composite, taken from the composite's
    /// resolved values.
    pub(crate) fn project_options(&self, function: &str, all: &ResolvedOptions) -> Result<ResolvedOptions, GuardedError> {
        let spec = self.get(function)?;
        let values = spec
            .options
            .iter()
            .map(|o| (o.key.clone(), all.text(&o.key).to_string()))
            .collect();
        Ok(ResolvedOptions { values })
    }
}

impl FunctionRegistry for Catalog {
    fn arity(&self, name: &str) -> Option<usize> {
        self.specs.get(name).map(|s| s.sig.arity)
    }
}

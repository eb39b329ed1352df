use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ActError;

/// The non-object inputs of a function call: its options and standard input.
///
/// Options keep the order in which the caller supplied them, since that order
/// is visible to regular-expression predicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Invocation {
    options: Vec<(String, Option<String>)>,
    #[serde(with = "hex_bytes")]
    stdin: Vec<u8>,
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

fn valid_option_key(k: &str) -> bool {
    !k.is_empty() && !k.contains(['=', ';']) && !k.chars().any(|c| c.is_control())
}

impl Invocation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an option. Keys may not contain `=`, `;` or control characters.
    pub fn with_option(mut self, key: &str, value: Option<&str>) -> Result<Self, ActError> {
        self.push_option(key, value)?;
        Ok(self)
    }

    pub fn with_flag(self, key: &str) -> Result<Self, ActError> {
        self.with_option(key, None)
    }

    pub fn with_value(self, key: &str, value: impl ToString) -> Result<Self, ActError> {
        self.with_option(key, Some(&value.to_string()))
    }

    pub fn with_stdin(mut self, stdin: impl Into<Vec<u8>>) -> Self {
        self.stdin = stdin.into();
        self
    }

    pub fn push_option(&mut self, key: &str, value: Option<&str>) -> Result<(), ActError> {
        if !valid_option_key(key) {
            return Err(ActError::InvalidOptionKey(key.to_string()));
        }
        self.options.push((key.to_string(), value.map(str::to_string)));
        Ok(())
    }

    pub fn options(&self) -> &[(String, Option<String>)] {
        &self.options
    }

    pub fn stdin(&self) -> &[u8] {
        &self.stdin
    }

    /// Looks up the first occurrence of `key`.
    pub fn option(&self, key: &str) -> Option<Option<&str>> {
        self.options.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_deref())
    }

    /// Deterministic string form matched by regular-expression predicates:
    /// `key=value` or bare `key` joined by `;`, then `\nSTDIN:` and the
    /// standard input.
    pub fn canonical(&self) -> String {
        canonical_serialize(self)
    }
}

/// See [`Invocation::canonical`].
///
/// Standard input is copied verbatim except for bytes that are not valid
/// UTF-8, ASCII control characters other than newline and tab, DEL and the
/// backslash, which become `\xHH` (lowercase hex). Option values use the same
/// escape and additionally escape newline and `;`, so a value can never forge
/// an option boundary or the `STDIN:` marker.
pub fn canonical_serialize(inv: &Invocation) -> String {
    let mut out = String::with_capacity(32 + inv.stdin.len());
    for (i, (k, v)) in inv.options.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        out.push_str(k);
        if let Some(v) = v {
            out.push('=');
            escape_into(&mut out, v.as_bytes(), true);
        }
    }
    out.push_str("\nSTDIN:");
    escape_into(&mut out, &inv.stdin, false);
    out
}

fn escape_char(c: char, in_value: bool) -> bool {
    match c {
        '\\' | '\x7f' => true,
        '\n' | ';' => in_value,
        '\t' => false,
        c => c.is_ascii_control(),
    }
}

fn escape_into(out: &mut String, bytes: &[u8], in_value: bool) {
    for chunk in bytes.utf8_chunks() {
        for c in chunk.valid().chars() {
            if escape_char(c, in_value) {
                let _ = write!(out, "\\x{:02x}", c as u32);
            } else {
                out.push(c);
            }
        }
        for b in chunk.invalid() {
            let _ = write!(out, "\\x{b:02x}");
        }
    }
}

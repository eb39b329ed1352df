use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ActError;

/// Separator used when a composite function name is formed from two parts.
pub const COMPOSE_SEPARATOR: char = '∘';

pub(crate) fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '/' | '-')
}

/// Checks the identifier syntax `[A-Za-z0-9._/-]+`.
pub fn is_valid_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_token_char)
}

/// Function names additionally admit the composition operator.
pub fn is_valid_function_name(s: &str) -> bool {
    !s.is_empty()
        && s.split(COMPOSE_SEPARATOR).all(is_valid_token)
}

macro_rules! token_newtype {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Result<Self, ActError> {
                let s = s.into();
                if is_valid_token(&s) {
                    Ok(Self(s))
                } else {
                    Err(ActError::InvalidIdentifier { kind: $what, value: s })
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = ActError;
            fn try_from(s: String) -> Result<Self, Self::Error> {
                Self::new(s)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = ActError;
            fn try_from(s: &str) -> Result<Self, Self::Error> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(v: $name) -> String {
                v.0
            }
        }
    };
}

token_newtype!(
    /// A subject (user, service) named by a token.
    SubjectId,
    "subject"
);

token_newtype!(
    /// A hierarchical object identifier such as `report` or `report/a3`.
    ObjectRef,
    "object"
);

impl ObjectRef {
    /// Builds the reference of an atom inside a document: `<doc>/<atom>`.
    pub fn atom(doc: &str, atom: &str) -> Result<Self, ActError> {
        Self::new(format!("{doc}/{atom}"))
    }

    /// First path segment (the document id for atom references).
    pub fn root(&self) -> &str {
        self.0.split('/').next().unwrap_or(&self.0)
    }

    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.0.starts_with(prefix)
    }
}

/// A function together with the number of predefined object inputs it takes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FunctionSig {
    pub name: String,
    pub arity: usize,
}

impl FunctionSig {
    pub fn new(name: impl Into<String>, arity: usize) -> Result<Self, ActError> {
        let name = name.into();
        if !is_valid_function_name(&name) {
            return Err(ActError::InvalidIdentifier { kind: "function", value: name });
        }
        Ok(Self { name, arity })
    }
}

impl fmt::Display for FunctionSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// An ordered tuple of objects, an element of `O^m`. The empty tuple is legal.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectTuple(Vec<ObjectRef>);

impl ObjectTuple {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn single(o: ObjectRef) -> Self {
        Self(vec![o])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ObjectRef> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[ObjectRef] {
        &self.0
    }

    /// Parses the policy-file notation: `-` for the empty tuple, otherwise a
    /// comma separated list of object ids.
    pub fn parse(s: &str) -> Result<Self, ActError> {
        if s == "-" {
            return Ok(Self::empty());
        }
        s.split(',').map(ObjectRef::new).collect::<Result<Vec<_>, _>>().map(Self)
    }
}

impl From<Vec<ObjectRef>> for ObjectTuple {
    fn from(v: Vec<ObjectRef>) -> Self {
        Self(v)
    }
}

impl FromIterator<ObjectRef> for ObjectTuple {
    fn from_iter<I: IntoIterator<Item = ObjectRef>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl Borrow<[ObjectRef]> for ObjectTuple {
    fn borrow(&self) -> &[ObjectRef] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a ObjectTuple {
    type Item = &'a ObjectRef;
    type IntoIter = std::slice::Iter<'a, ObjectRef>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for ObjectTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(o.as_str())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_syntax() {
        assert!(SubjectId::new("alice").is_ok());
        assert!(ObjectRef::new("cia/file-1.txt").is_ok());
        assert!(SubjectId::new("").is_err());
        assert!(SubjectId::new("bob smith").is_err());
        assert!(ObjectRef::new("a,b").is_err());
        assert!(FunctionSig::new("search_standard∘read", 1).is_ok());
        assert!(FunctionSig::new("∘read", 1).is_err());
    }

    #[test]
    fn tuple_notation() {
        assert_eq!(ObjectTuple::parse("-").unwrap(), ObjectTuple::empty());
        let t = ObjectTuple::parse("a,b").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.to_string(), "a,b");
        assert_eq!(ObjectTuple::empty().to_string(), "-");
        assert!(ObjectTuple::parse("a,,b").is_err());
    }

    #[test]
    fn tuples_are_ordered() {
        let ab = ObjectTuple::parse("a,b").unwrap();
        let ba = ObjectTuple::parse("b,a").unwrap();
        assert_ne!(ab, ba);
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MonitorError;
use crate::act::SubjectId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Author,
    CoAuthor,
    Viewer,
    Admin,
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "author" => Ok(Role::Author),
            "coauthor" | "co-author" => Ok(Role::CoAuthor),
            "viewer" => Ok(Role::Viewer),
            "admin" => Ok(Role::Admin),
            _ => Err(format!("unknown role `{s}`")),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Author => "author",
            Role::CoAuthor => "coauthor",
            Role::Viewer => "viewer",
            Role::Admin => "admin",
        })
    }
}

/// An authenticated caller. The role selects default policy templates and
/// administrative API access; it never changes a `decide` outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Principal {
    pub subject: SubjectId,
    pub role: Role,
    #[serde(skip)]
    pub token: String,
}

/// Token to principal map read from a static identity file.
///
/// ```text
/// # token    subject  role
/// tok-alice  alice    author
/// tok-root   root     admin
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Identities {
    by_token: BTreeMap<String, Principal>,
}

impl Identities {
    pub fn parse(text: &str) -> Result<Self, MonitorError> {
        let mut ids = Identities::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: String| MonitorError::Identity { line: i + 1, message: m };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [token, subject, role] = fields[..] else {
                return Err(bad(format!("expected `<token> <subject> <role>`, found {} field(s)", fields.len())));
            };
            let subject = SubjectId::new(subject).map_err(|e| bad(e.to_string()))?;
            let role = role.parse().map_err(bad)?;
            ids.insert(token, subject, role).map_err(|e| bad(e.to_string()))?;
        }
        Ok(ids)
    }

    pub fn insert(&mut self, token: &str, subject: SubjectId, role: Role) -> Result<(), MonitorError> {
        if token.is_empty() {
            return Err(MonitorError::Unauthenticated);
        }
        if self.by_token.contains_key(token) {
            return Err(MonitorError::DuplicateToken);
        }
        self.by_token.insert(token.to_string(), Principal { subject, role, token: token.to_string() });
        Ok(())
    }

    pub fn authenticate(&self, token: &str) -> Result<Principal, MonitorError> {
        if token.is_empty() {
            return Err(MonitorError::Unauthenticated);
        }
        self.by_token.get(token).cloned().ok_or(MonitorError::Unauthenticated)
    }

    pub fn principals(&self) -> impl Iterator<Item = &Principal> {
        self.by_token.values()
    }

    pub fn to_text(&self) -> String {
        self.by_token.values().map(|p| format!("{} {} {}\n", p.token, p.subject, p.role)).collect()
    }
}

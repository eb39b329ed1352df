//! The access control tensor.
//!
//! An [`AccessTensor`] maps a subject, a function and an ordered tuple of
//! objects to one of `N/A`, `False`, `True` or `True[P]`. `N/A` is derived
//! from the function's arity and is never stored; an arity-correct coordinate
//! without a stored entry reads as `False`.
//!
//! `True[P]` entries carry a [`Predicate`] evaluated against the invocation's
//! options and standard input. Regular-expression predicates match the whole
//! of [`canonical_serialize`]'s output.

mod ids;
mod invocation;
mod policy;
mod predicate;
mod store;
mod tensor;

use thiserror::Error;

pub use ids::{is_valid_token, FunctionSig, ObjectRef, ObjectTuple, SubjectId, COMPOSE_SEPARATOR};
pub use invocation::{canonical_serialize, Invocation};
pub use policy::{scoped_entries_text, ApplyMode, PolicyFile, Statement};
pub use predicate::{match_predicate, CompiledPattern, Predicate, ProgramFn, ProgramRegistry};
pub use store::TensorStore;
pub use tensor::{AccessTensor, Decision, DecisionReason, Outcome, TensorEntry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActError {
    #[error("invalid {kind} identifier `{value}`")]
    InvalidIdentifier { kind: &'static str, value: String },
    #[error("invalid option key `{0}`")]
    InvalidOptionKey(String),
    #[error("invalid pattern `{pattern}`: {message}")]
    InvalidPattern { pattern: String, message: String },
    #[error("predicate error: {0}")]
    PredicateError(String),
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("{kind} `{value}` already exists")]
    DuplicateIdentifier { kind: &'static str, value: String },
    #[error("function `{function}` takes {expected} object(s), got {got}")]
    ArityMismatch { function: String, expected: usize, got: usize },
    #[error("invalid entry value `{0}`")]
    InvalidEntry(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

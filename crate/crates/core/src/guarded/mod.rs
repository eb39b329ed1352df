//! The guarded-function catalog.
//!
//! Every function consults `decide` before touching an atom and emits only
//! what its output contract allows: search emits matching lines and a
//! bounded window, views substitute markers for denied atoms, copies are
//! bounded and all-or-nothing. Functions read immutable snapshots; copy
//! returns an updated destination document instead of mutating in place.

mod catalog;
mod copy;
mod dispatch;
mod render;
mod search;

use thiserror::Error;

use crate::act::ActError;
use crate::adoc::AdocError;

pub use catalog::{
    Builtin, Catalog, CopyKind, GuardedFunctionSpec, Implementation, OptionSpec, OptionType, OutputContract,
    ResolvedOptions,
};
pub use copy::{copy, AtomRange, AppliedLimits, Citation, CopyResult, CopyVariant};
pub use dispatch::{dispatch, Effects, Env, Execution, Output, Request, Settings};
pub use render::{
    force_cc_email, redacted_view, validate_address, watermark_print, OutboxRecord, PrintArtifact, RenderedView,
    Segment, SegmentBody,
};
pub use search::{
    context_at_most, search, search_lines, search_standard, stdin_excludes, Hit, SearchOptions, SearchResult,
};

/// Replaces the content of a text atom the subject may not read.
pub const REDACTED_MARKER: &str = "[REDACTED]";
/// Replaces an image atom the subject may not read.
pub const BLURRED_IMAGE_MARKER: &str = "[BLURRED IMAGE]";
/// Replaces a hidden word inside an emitted line.
pub const HIDDEN_WORD_MARKER: &str = "[HIDDEN]";

pub const DEFAULT_PAGE_LINES: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GuardedError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("composite `{0}` is already registered")]
    DuplicateComposite(String),
    #[error("`{0}` cannot run as a pipeline: its outer function must read standard input")]
    NotComposable(String),
    #[error("option `{key}`: {message}")]
    InvalidOption { key: String, message: String },
    #[error("invalid search pattern `{pattern}`: {message}")]
    InvalidPattern { pattern: String, message: String },
    #[error("invalid email address `{0}`")]
    InvalidAddress(String),
    #[error("invalid atom range: {0}")]
    InvalidRange(String),
    #[error("expected {expected} argument(s), got {got}")]
    BadArguments { expected: String, got: usize },
    #[error("access denied")]
    Denied,
    #[error(transparent)]
    Adoc(#[from] AdocError),
    #[error(transparent)]
    Act(#[from] ActError),
}

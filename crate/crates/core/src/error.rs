use std::path::PathBuf;

use crate::syntax::Production;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no parser available for language `{0}`")]
    ParserUnavailable(String),

    #[error("syntax tree contains error or missing nodes")]
    TreeHasErrors,

    #[error("source does not parse cleanly{}", offset_suffix(*.offset))]
    SyntaxInvalid { offset: Option<usize> },

    #[error("format error: {0}")]
    Format(String),

    #[error("base vocabulary has no token for byte 0x{0:02x}")]
    NotByteComplete(u8),

    #[error("unsupported format_version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("no corpus file parsed ({skipped} skipped)")]
    EmptyCorpus { skipped: usize },

    #[error("token id {id} out of range (vocabulary size {total})")]
    OutOfRange { id: u32, total: u32 },

    #[error("production `{0}` is not in the vocabulary")]
    UnknownProduction(Production),

    #[error("anonymous node `{kind}` at byte {offset} has text that differs from its literal")]
    UnfixedLiteral { kind: String, offset: usize },

    #[error("record `{record}`: {source}")]
    Record {
        record: String,
        #[source]
        source: Box<Error>,
    },

    #[error("sequence ends before the derivation is complete (after {position} tokens)")]
    IncompleteSequence { position: usize },

    #[error("invalid token at position {position}: expected {expected}")]
    InvalidToken { position: usize, expected: String },

    #[error("decoding requires an exact-mode sequence")]
    ModeUnsupported,

    #[error("contingency table has a zero marginal")]
    DegenerateTable,

    #[error("contingency analysis needs at least 4 parseable pairs, got {0}")]
    TooFewPairs(usize),

    #[error("pair `{0}` has no outcome")]
    MissingOutcome(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn offset_suffix(offset: Option<usize>) -> String {
    offset.map(|o| format!(" (first error at byte {o})")).unwrap_or_default()
}

impl Error {
    /// Stable name of the error kind, shared by the CLI diagnostics and the bindings.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ParserUnavailable(_) => "ParserUnavailable",
            Error::TreeHasErrors => "TreeHasErrors",
            Error::SyntaxInvalid { .. } => "SyntaxInvalid",
            Error::Format(_) => "FormatError",
            Error::NotByteComplete(_) => "NotByteComplete",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::EmptyCorpus { .. } => "EmptyCorpus",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::UnknownProduction(_) => "UnknownProduction",
            Error::UnfixedLiteral { .. } => "UnknownProduction",
            Error::Record { source, .. } => source.name(),
            Error::IncompleteSequence { .. } => "IncompleteSequence",
            Error::InvalidToken { .. } => "InvalidToken",
            Error::ModeUnsupported => "ModeUnsupported",
            Error::DegenerateTable => "DegenerateTable",
            Error::TooFewPairs(_) => "TooFewPairs",
            Error::MissingOutcome(_) => "MissingOutcome",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn in_record(self, record: &str) -> Self {
        Error::Record {
            record: record.to_string(),
            source: Box::new(self),
        }
    }
}

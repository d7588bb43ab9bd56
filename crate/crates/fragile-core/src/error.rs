//! Crate-wide error type with the exit-code mapping used by the CLI.

use thiserror::Error;

/// One integrity violation found while cross-checking a loaded corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityViolation {
    /// Record id (instance id or variant id) the violation is attached to.
    pub record: String,
    pub message: String,
}

impl std::fmt::Display for IntegrityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.record, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity check failed with {} violation(s): {}", .0.len(), format_violations(.0))]
    Integrity(Vec<IntegrityViolation>),

    #[error("unsupported option arity: expected {expected}, got {got}")]
    UnsupportedArity { expected: usize, got: usize },

    #[error("invalid label `{label}`: {context}")]
    InvalidLabel { label: String, context: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("basis is not orthonormal: {0}")]
    NonOrthonormal(String),

    #[error("degenerate vector in {what}: norm {norm:.3e} below threshold")]
    Degenerate { what: String, norm: f64 },

    #[error("rank deficiency: requested {requested} components, only {available} independent")]
    RankDeficient { requested: usize, available: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("empty set after filtering: {0}")]
    EmptySet(String),

    #[error("instance `{instance}` is unpaired: {context}")]
    Pairing { instance: String, context: String },

    #[error("model `{model_id}` lacks capability `{capability}`")]
    Capability { model_id: String, capability: String },

    #[error("no adapter registered for model id `{0}`")]
    AdapterNotFound(String),

    #[error("hook error: {0}")]
    Hook(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("all {} samples invalid; raw outputs: {}", .raw.len(), .raw.join(", "))]
    AllInvalid { raw: Vec<String> },

    #[error("token mapping error: {0}")]
    TokenMapping(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("artifact mismatch on {field}: artifact has `{artifact}`, handle has `{handle}`")]
    ArtifactMismatch {
        field: String,
        artifact: String,
        handle: String,
    },

    #[error("client transport error after {retries} attempt(s): {message}")]
    Transport { retries: usize, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(v: &[IntegrityViolation]) -> String {
    let shown: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
    let mut s = shown.join("; ");
    if v.len() > 5 {
        s.push_str(&format!("; ... ({} more)", v.len() - 5));
    }
    s
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 data integrity,
    /// 3 model/capability, 4 degenerate math.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Parse { .. }
            | Error::Integrity(_)
            | Error::UnsupportedArity { .. }
            | Error::InvalidLabel { .. }
            | Error::ArtifactMismatch { .. }
            | Error::Pairing { .. }
            | Error::Io { .. } => 2,
            Error::Capability { .. }
            | Error::AdapterNotFound(_)
            | Error::Hook(_)
            | Error::Sampling(_)
            | Error::AllInvalid { .. }
            | Error::TokenMapping(_)
            | Error::Transport { .. } => 3,
            Error::Dimension { .. }
            | Error::NonOrthonormal(_)
            | Error::Degenerate { .. }
            | Error::RankDeficient { .. }
            | Error::EmptyInput(_)
            | Error::EmptySet(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("unknown enum symbol {symbol:?} for {kind}")]
    UnknownSymbol { kind: &'static str, symbol: String },

    #[error("line {line}: unknown enum symbol {symbol:?} for {kind}")]
    UnknownSymbolAt {
        line: usize,
        kind: &'static str,
        symbol: String,
    },

    #[error("line {line}: overlapping subword spans")]
    OverlappingSubwords { line: usize },

    #[error("line {line}: duplicate (sentence_id, index) = ({sentence_id:?}, {index})")]
    DuplicateIndex {
        line: usize,
        sentence_id: String,
        index: u32,
    },

    #[error("invalid time span [{begin}, {end}]")]
    InvalidSpan { begin: f64, end: f64 },

    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),

    #[error("truncated or invalid WAV header: {0}")]
    InvalidWav(String),

    #[error("zero-length audio")]
    EmptyAudio,

    #[error("invalid audio clip: {0}")]
    InvalidClip(String),

    #[error("clip of {duration}s is shorter than required {required}s")]
    ClipTooShort { duration: f64, required: f64 },

    #[error("invalid posterior sequence: {0}")]
    InvalidPosterior(String),

    #[error("empty posterior sequence")]
    EmptyPosterior,

    #[error("sentence span [{begin}, {end}] lies outside posterior coverage")]
    SpanOutsideCoverage { begin: f64, end: f64 },

    #[error("label {0:?} has zero training clips")]
    EmptyLabel(String),

    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sample rate mismatch: table built at {expected} Hz, clip is {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    #[error("IPA table: duplicate symbol {0:?}")]
    DuplicateSymbol(String),

    #[error("IPA table: fewer than 2 entries")]
    TooFewEntries,

    #[error("IPA table: non-distinct references for {0:?} and {1:?}")]
    NonDistinctReferences(String, String),

    #[error("empty observation list")]
    NoObservations,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("word type {0} absent from corpus")]
    WordTypeAbsent(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            message: message.into(),
        }
    }

    /// Wraps `self` with the name of the pipeline stage that raised it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Whether the error stems from input data (including unreadable files)
    /// rather than configuration.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_data_error(),
            Error::Config(_) => false,
            _ => true,
        }
    }
}

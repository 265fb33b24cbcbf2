use thiserror::Error;

/// Everything that can go wrong inside the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("utterance is empty")]
    EmptyUtterance,

    #[error("word `{0}` has no entry in the gold lexicon")]
    MissingEntry(String),

    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("observing referent `{referent}` would make {observed} referents, above beta = {beta}; raise beta")]
    ReferentOverflow {
        referent: String,
        observed: usize,
        beta: u32,
    },

    #[error("association score for ({word}, {referent}) is no longer finite")]
    AssocOverflow { word: String, referent: String },

    #[error("pair {index}: {source}")]
    AtPair {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("corpus needs at least {needed} pairs, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("trial construction: {0}")]
    Trials(String),

    #[error("no observed words to evaluate")]
    EmptyEvaluation,

    #[error("word `{0}` has zero total count; cannot normalize")]
    ZeroRow(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use ingredient_hmm_core::Error as CoreError;
use thiserror::Error;

use crate::model_file::ModelFileError;

/// Process exit codes, one per failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const IO: i32 = 4;
    pub const DECODE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: CoreError },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelFileError },
    #[error("{path}:{line}: {message}")]
    Input { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: unknown token {token:?} (sentence {sentence})")]
    OutOfVocabulary { path: PathBuf, line: usize, sentence: usize, token: String },
    #[error("{path}: sentence {sentence}: {source}")]
    Decode { path: PathBuf, sentence: usize, source: CoreError },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Csv(_) => exit::IO,
            CliError::Corpus { .. } | CliError::Model { .. } | CliError::Input { .. } => exit::PARSE,
            CliError::OutOfVocabulary { .. } | CliError::Decode { .. } => exit::DECODE,
            CliError::Config(_) => exit::CONFIG,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

pub fn core_exit_code(e: &CoreError) -> i32 {
    use CoreError::*;
    match e {
        NoSentences | FieldCount { .. } | EmptyField { .. } | InvalidState { .. }
        | OrphanContinuation { .. } | MalformedSentence(_) | EmptyToken => exit::PARSE,
        EmptyObservations | Undecodable { .. } | OutOfVocabulary { .. } | MissingTags
        | TagLength { .. } | UnknownTag { .. } | TooLarge { .. } => exit::DECODE,
        _ => exit::CONFIG,
    }
}

pub type CliResult<T> = Result<T, CliError>;

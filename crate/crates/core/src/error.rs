use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong in the core crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Corpus text contained no sentence.
    NoSentences,
    /// A corpus line did not have exactly three tab-separated fields.
    FieldCount { line: usize, found: usize },
    /// A corpus line had an empty token or label.
    EmptyField { line: usize },
    /// Ingredient state outside `{0,1,2,3}`.
    InvalidState { line: usize, symbol: String },
    /// State `2` at the start of a sentence or right after a `0`.
    OrphanContinuation { line: usize },
    /// Parallel columns of a sentence differ in length, or the sentence is empty.
    MalformedSentence(String),
    /// Prefix of an empty token.
    EmptyToken,
    FoldCount { k: usize, sentences: usize },
    /// A fold ended up without a sentence.
    EmptyFold(usize),
    /// Observation and state field of an estimator are unusable together.
    FieldSelection(String),
    MissingLayer(&'static str),
    EmptyObservations,
    /// Every path has zero probability at `position` and fallback is off.
    Undecodable { position: usize },
    /// Out-of-vocabulary token under the `error` OOV policy.
    OutOfVocabulary { position: usize, token: String },
    MissingTags,
    TagLength { tokens: usize, tags: usize },
    UnknownTag { position: usize, tag: String },
    InvalidLambda(f64),
    /// Brute-force enumeration above its size limit.
    TooLarge { states: usize, len: usize },
    /// Gold and predicted sequences are misaligned.
    LengthMismatch { sentence: usize },
    UnreachableAccuracy(f64),
    Dimension(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NoSentences => f.write_str("no sentences"),
            Error::FieldCount { line, found } => {
                write!(f, "line {line}: expected 3 tab-separated fields, found {found}")
            }
            Error::EmptyField { line } => write!(f, "line {line}: empty field"),
            Error::InvalidState { line, symbol } => {
                write!(f, "line {line}: ingredient state {symbol:?} is not one of 0,1,2,3")
            }
            Error::OrphanContinuation { line } => write!(
                f,
                "line {line}: state 2 must follow an ingredient token (1, 2 or 3)"
            ),
            Error::MalformedSentence(msg) => write!(f, "malformed sentence: {msg}"),
            Error::EmptyToken => f.write_str("empty token has no prefix"),
            Error::FoldCount { k, sentences } => {
                write!(f, "fold count {k} must be in 2..={sentences}")
            }
            Error::EmptyFold(i) => write!(f, "fold {i} has no sentences"),
            Error::FieldSelection(msg) => write!(f, "invalid field selection: {msg}"),
            Error::MissingLayer(layer) => write!(f, "corpus has no {layer} annotation"),
            Error::EmptyObservations => f.write_str("empty observation sequence"),
            Error::Undecodable { position } => {
                write!(f, "undecodable: every path has zero probability at position {position}")
            }
            Error::OutOfVocabulary { position, token } => {
                write!(f, "out-of-vocabulary token {token:?} at position {position}")
            }
            Error::MissingTags => f.write_str("feature-conditioned decode needs POS tags"),
            Error::TagLength { tokens, tags } => {
                write!(f, "{tags} tags supplied for {tokens} tokens")
            }
            Error::UnknownTag { position, tag } => {
                write!(f, "tag {tag:?} at position {position} is not in the model tagset")
            }
            Error::InvalidLambda(l) => write!(f, "lambda must be a finite value >= 1, got {l}"),
            Error::TooLarge { states, len } => {
                write!(f, "brute force over {states}^{len} sequences exceeds 10^7")
            }
            Error::LengthMismatch { sentence } => {
                write!(f, "gold and predicted lengths differ in sentence {sentence}")
            }
            Error::UnreachableAccuracy(a) => {
                write!(f, "first-layer accuracy {a} cannot be reached by tag corruption")
            }
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

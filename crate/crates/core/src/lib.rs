//! Hidden Markov sequence taggers for annotated recipe corpora.
//!
//! The crate estimates first-order, full second-order and POS-feature-conditioned
//! HMMs by relative-frequency counting, decodes them with Viterbi (probability or
//! log space, with an emission weight `lambda`), handles out-of-vocabulary tokens
//! through prefix-aggregated emission tables, and chains a POS layer into an
//! ingredient-state layer.
//!
//! Everything here is `no_std` + `alloc`. File IO, the model file format and the
//! command line live in the `ingredient-hmm` crate.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod corpus;
pub mod decoder;
mod error;
pub mod eval;
pub mod pipeline;
pub mod tables;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use corpus::{
    build_lexicon, corpus_stats, extract_prefix, oov_stats, parse_corpus, split_folds,
    AnnotatedSentence, Corpus, CorpusStats, Field, FoldPlan, IngState, Lexicon, Lookup, OovStats,
    ParseStats, Provenance,
};
pub use decoder::{
    brute_force_decode, viterbi_feature_conditioned, ModelRef, BRUTE_FORCE_LIMIT, viterbi_feature_conditioned_log,
    viterbi_first_order, viterbi_second_order, DecodeConfig, DecodeRequest, DecodeResult,
    OovPolicy, Space,
};
pub use error::{Error, Result};
pub use eval::{
    closed_test, cross_validate, degrade_tags, lambda_sweep, score, CrossValReport, EvalReport,
    Family, MetricsRow, SweepRow, TagCondition,
};
pub use pipeline::{
    decode_states, extract_ingredients, predict_tags, spans_to_states, states_to_spans,
    train_pipeline, Diagnostics, Extraction, IngredientSpan, Layer1Model, Layer1Order,
    PipelineConfig, PipelineModel, SpanKind, TagMode, TagSource,
};
pub use tables::{
    build_prefix_table, estimate_feature_conditioned, estimate_first_order, estimate_second_order,
    CondTable, EstimateOptions, FeatureConditionedModel, FirstOrderModel, PrefixTable,
    SecondOrderModel,
};

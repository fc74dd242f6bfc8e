//! Viterbi decoding for the three model families.
//!
//! All decoders share one scoring convention. Position 0 scores
//! `pi_j * e_j(v_0)`. Every later position multiplies in a transition and an
//! emission. In log space the emission of a known word at positions >= 1 is
//! weighted by `lambda`; unknown words read the prefix table and are not
//! weighted unless `lambda_on_oov` is set. Ties go to the smallest state index
//! at every max, which makes the decoded path the colexicographically smallest
//! optimal path (compared from the last position backwards).

mod brute;
mod chain;

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Lexicon, Lookup};
use crate::error::{Error, Result};
use crate::tables::{
    CondTable, FeatureConditionedModel, FirstOrderModel, PrefixTable, SecondOrderModel,
};

pub use brute::{brute_force_decode, ModelRef, BRUTE_FORCE_LIMIT};

use chain::{run_chain, run_pairs, Chain, Emission, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Probability,
    Log,
}

impl core::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probability" | "prob" => Ok(Space::Probability),
            "log" => Ok(Space::Log),
            other => Err(Error::FieldSelection(alloc::format!("unknown space {other:?}"))),
        }
    }
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Probability => "probability",
            Space::Log => "log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OovPolicy {
    /// Substitute the prefix-table row for the emission row.
    PrefixTable,
    Error,
}

impl OovPolicy {
    pub fn name(self) -> &'static str {
        match self {
            OovPolicy::PrefixTable => "prefix_table",
            OovPolicy::Error => "error",
        }
    }
}

impl core::str::FromStr for OovPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prefix_table" | "prefix" => Ok(OovPolicy::PrefixTable),
            "error" => Ok(OovPolicy::Error),
            other => Err(Error::FieldSelection(alloc::format!("unknown OOV policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Emission weight in log space; ignored in probability space.
    pub lambda: f64,
    pub space: Space,
    pub oov_policy: OovPolicy,
    /// Apply `lambda` to prefix-table emissions too.
    pub lambda_on_oov: bool,
    /// Substitute a uniform emission (then a uniform transition) at positions
    /// where every path has zero probability instead of failing.
    pub fallback: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            lambda: 4.0,
            space: Space::Log,
            oov_policy: OovPolicy::PrefixTable,
            lambda_on_oov: false,
            fallback: true,
        }
    }
}

impl DecodeConfig {
    /// Plain Viterbi: log space, `lambda = 1`.
    pub fn plain() -> Self {
        Self { lambda: 1.0, ..Self::default() }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_space(mut self, space: Space) -> Self {
        self.space = space;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 1.0) {
            return Err(Error::InvalidLambda(self.lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecodeRequest<'a> {
    pub observations: &'a [String],
    /// POS tags, one per observation; required by the feature-conditioned model.
    pub tags: Option<&'a [String]>,
    pub config: DecodeConfig,
}

impl<'a> DecodeRequest<'a> {
    pub fn new(observations: &'a [String], config: DecodeConfig) -> Self {
        Self { observations, tags: None, config }
    }

    pub fn with_tags(mut self, tags: &'a [String]) -> Self {
        self.tags = Some(tags);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// State indices into the model's state inventory.
    pub states: Vec<usize>,
    /// Path probability, or log score in log space.
    pub score: f64,
    /// `true` where the token is not in the model lexicon.
    pub oov_mask: Vec<bool>,
    pub used_fallback: bool,
}

impl DecodeResult {
    pub fn symbols<'m>(&self, inventory: &'m [String]) -> Vec<&'m str> {
        self.states.iter().map(|&s| inventory[s].as_str()).collect()
    }
}

pub(crate) fn lookups(
    vocab: &Lexicon,
    observations: &[String],
    policy: OovPolicy,
) -> Result<Vec<Lookup>> {
    if observations.is_empty() {
        return Err(Error::EmptyObservations);
    }
    observations
        .iter()
        .enumerate()
        .map(|(position, token)| {
            let lookup = vocab.lookup(token);
            if lookup.is_unknown() && policy == OovPolicy::Error {
                Err(Error::OutOfVocabulary { position, token: token.clone() })
            } else {
                Ok(lookup)
            }
        })
        .collect()
}

pub(crate) fn tag_indices(model: &FeatureConditionedModel, req: &DecodeRequest) -> Result<Vec<usize>> {
    let tags = req.tags.ok_or(Error::MissingTags)?;
    if tags.len() != req.observations.len() {
        return Err(Error::TagLength { tokens: req.observations.len(), tags: tags.len() });
    }
    tags.iter()
        .enumerate()
        .map(|(position, tag)| {
            model
                .tag_index(tag)
                .ok_or_else(|| Error::UnknownTag { position, tag: tag.clone() })
        })
        .collect()
}

/// Emission of `lookup` from context `row`; unknown words read the prefix table.
#[inline]
pub(crate) fn emission_of(
    emit: &CondTable,
    prefix: &PrefixTable,
    row: usize,
    lookup: Lookup,
    position: usize,
    lambda_on_oov: bool,
) -> Emission {
    match lookup {
        Lookup::Known(w) => Emission { prob: emit.prob(row, w), weighted: position > 0 },
        Lookup::Unknown(Some(p)) => {
            Emission { prob: prefix.prob(row, p), weighted: position > 0 && lambda_on_oov }
        }
        Lookup::Unknown(None) => Emission { prob: 0.0, weighted: position > 0 && lambda_on_oov },
    }
}

fn uniform_emission(vocab: &Lexicon) -> f64 {
    1.0 / vocab.len().max(1) as f64
}

struct FirstOrderChain<'a> {
    model: &'a FirstOrderModel,
    obs: &'a [Lookup],
    lambda_on_oov: bool,
}

impl Chain for FirstOrderChain<'_> {
    fn n_states(&self) -> usize {
        self.model.n_states()
    }

    fn len(&self) -> usize {
        self.obs.len()
    }

    fn start(&self, j: usize) -> f64 {
        self.model.pi.prob(0, j)
    }

    fn transition(&self, _t: usize, i: usize, j: usize) -> f64 {
        self.model.trans.prob(i, j)
    }

    fn emission(&self, t: usize, j: usize) -> Emission {
        emission_of(&self.model.emit, &self.model.prefix_emit, j, self.obs[t], t, self.lambda_on_oov)
    }
}

struct FeatureChain<'a> {
    model: &'a FeatureConditionedModel,
    obs: &'a [Lookup],
    tags: &'a [usize],
    lambda_on_oov: bool,
}

impl Chain for FeatureChain<'_> {
    fn n_states(&self) -> usize {
        self.model.n_states()
    }

    fn len(&self) -> usize {
        self.obs.len()
    }

    fn start(&self, j: usize) -> f64 {
        self.model.pi.prob(0, j)
    }

    fn transition(&self, t: usize, i: usize, j: usize) -> f64 {
        self.model.trans.prob(self.model.context(self.tags[t - 1], i), j)
    }

    fn emission(&self, t: usize, j: usize) -> Emission {
        let row = self.model.context(self.tags[t], j);
        emission_of(&self.model.emit, &self.model.prefix_emit, row, self.obs[t], t, self.lambda_on_oov)
    }
}

fn finish(path: chain::Path, obs: &[Lookup]) -> DecodeResult {
    DecodeResult {
        states: path.states,
        score: path.score,
        oov_mask: obs.iter().map(|l| l.is_unknown()).collect(),
        used_fallback: path.used_fallback,
    }
}

/// First-order Viterbi.
pub fn viterbi_first_order(model: &FirstOrderModel, req: &DecodeRequest) -> Result<DecodeResult> {
    req.config.validate()?;
    let obs = lookups(&model.vocab, req.observations, req.config.oov_policy)?;
    let chain = FirstOrderChain { model, obs: &obs, lambda_on_oov: req.config.lambda_on_oov };
    let scorer = Scorer::new(req.config.space, req.config.lambda);
    let path = run_chain(&chain, scorer, req.config.fallback, uniform_emission(&model.vocab))?;
    Ok(finish(path, &obs))
}

/// Full second-order Viterbi over a (previous state, state) lattice.
pub fn viterbi_second_order(model: &SecondOrderModel, req: &DecodeRequest) -> Result<DecodeResult> {
    req.config.validate()?;
    let obs = lookups(&model.vocab, req.observations, req.config.oov_policy)?;
    let scorer = Scorer::new(req.config.space, req.config.lambda);
    let path = run_pairs(model, &obs, scorer, &req.config, uniform_emission(&model.vocab))?;
    Ok(finish(path, &obs))
}

/// Tag-pinned second-layer Viterbi: the tag index at every position is fixed
/// to the supplied POS tag, so only that slice of the (tag, state) lattice is
/// evaluated. Honors `req.config.space`.
pub fn viterbi_feature_conditioned(
    model: &FeatureConditionedModel,
    req: &DecodeRequest,
) -> Result<DecodeResult> {
    req.config.validate()?;
    let tags = tag_indices(model, req)?;
    let obs = lookups(&model.vocab, req.observations, req.config.oov_policy)?;
    let chain = FeatureChain { model, obs: &obs, tags: &tags, lambda_on_oov: req.config.lambda_on_oov };
    let scorer = Scorer::new(req.config.space, req.config.lambda);
    let path = run_chain(&chain, scorer, req.config.fallback, uniform_emission(&model.vocab))?;
    Ok(finish(path, &obs))
}

/// [`viterbi_feature_conditioned`] in log space with the request's `lambda`.
pub fn viterbi_feature_conditioned_log(
    model: &FeatureConditionedModel,
    req: &DecodeRequest,
) -> Result<DecodeResult> {
    let mut req = *req;
    req.config.space = Space::Log;
    viterbi_feature_conditioned(model, &req)
}

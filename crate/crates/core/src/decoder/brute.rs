//! Exhaustive decoding oracle.
//!
//! Scores every state sequence straight from the model tables and keeps the
//! best one. Ties resolve to the colexicographically smallest sequence, which is
//! the path the Viterbi tie rule produces. The oracle never falls back: if every
//! sequence has zero probability it reports the first position at which all of
//! them have died.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Lookup;
use crate::error::{Error, Result};
use crate::tables::{
    CondTable, FeatureConditionedModel, FirstOrderModel, PrefixTable, SecondOrderModel,
};

use super::{lookups, tag_indices, DecodeRequest, DecodeResult, Space};

/// Largest number of sequences the oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub enum ModelRef<'a> {
    First(&'a FirstOrderModel),
    Second(&'a SecondOrderModel),
    Feature(&'a FeatureConditionedModel),
}

struct Rule {
    space: Space,
    lambda: f64,
    lambda_on_oov: bool,
}

impl Rule {
    fn emission(&self, emit: &CondTable, prefix: &PrefixTable, row: usize, obs: Lookup, t: usize) -> (f64, bool) {
        match obs {
            Lookup::Known(w) => (emit.prob(row, w), t > 0),
            Lookup::Unknown(Some(p)) => (prefix.prob(row, p), t > 0 && self.lambda_on_oov),
            Lookup::Unknown(None) => (0.0, t > 0 && self.lambda_on_oov),
        }
    }

    fn log_emission(&self, (prob, weighted): (f64, bool)) -> f64 {
        if weighted {
            self.lambda * libm::log(prob)
        } else {
            libm::log(prob)
        }
    }

    fn init(&self, pi: f64, e: (f64, bool)) -> f64 {
        match self.space {
            Space::Probability => pi * e.0,
            Space::Log => libm::log(pi) + self.log_emission(e),
        }
    }

    fn extend(&self, score: f64, trans: f64, e: (f64, bool)) -> f64 {
        match self.space {
            Space::Probability => score * trans * e.0,
            Space::Log => score + libm::log(trans) + self.log_emission(e),
        }
    }

    fn is_dead(&self, score: f64) -> bool {
        match self.space {
            Space::Probability => !(score > 0.0),
            Space::Log => !(score > f64::NEG_INFINITY),
        }
    }
}

/// Score of `seq` and the first position where the running score hit zero
/// (`seq.len()` if it never did).
fn score_sequence(model: ModelRef, obs: &[Lookup], tags: &[usize], seq: &[usize], rule: &Rule) -> (f64, usize) {
    let mut death = seq.len();
    let mut score = 0.0;
    for t in 0..seq.len() {
        let s = seq[t];
        score = match model {
            ModelRef::First(m) => {
                let e = rule.emission(&m.emit, &m.prefix_emit, s, obs[t], t);
                if t == 0 {
                    rule.init(m.pi.prob(0, s), e)
                } else {
                    rule.extend(score, m.trans.prob(seq[t - 1], s), e)
                }
            }
            ModelRef::Second(m) => {
                let n = m.n_states();
                if t == 0 {
                    let e = rule.emission(&m.emit1, &m.prefix_emit1, s, obs[0], 0);
                    rule.init(m.pi.prob(0, s), e)
                } else {
                    let pair = seq[t - 1] * n + s;
                    let e = rule.emission(&m.emit2, &m.prefix_emit2, pair, obs[t], t);
                    let a = if t == 1 {
                        m.trans2.prob(seq[0], s)
                    } else {
                        m.trans3.prob(seq[t - 2] * n + seq[t - 1], s)
                    };
                    rule.extend(score, a, e)
                }
            }
            ModelRef::Feature(m) => {
                let e = rule.emission(&m.emit, &m.prefix_emit, m.context(tags[t], s), obs[t], t);
                if t == 0 {
                    rule.init(m.pi.prob(0, s), e)
                } else {
                    rule.extend(score, m.trans.prob(m.context(tags[t - 1], seq[t - 1]), s), e)
                }
            }
        };
        if death == seq.len() && rule.is_dead(score) {
            death = t;
        }
    }
    (score, death)
}

fn colex_less(a: &[usize], b: &[usize]) -> bool {
    a.iter().rev().cmp(b.iter().rev()) == core::cmp::Ordering::Less
}

/// Exhaustive argmax under the same scoring rule as the Viterbi decoders.
pub fn brute_force_decode(model: ModelRef, req: &DecodeRequest) -> Result<DecodeResult> {
    if !(req.config.lambda.is_finite() && req.config.lambda >= 1.0) {
        return Err(Error::InvalidLambda(req.config.lambda));
    }
    let (n, obs, tags) = match model {
        ModelRef::First(m) => (m.n_states(), lookups(&m.vocab, req.observations, req.config.oov_policy)?, Vec::new()),
        ModelRef::Second(m) => (m.n_states(), lookups(&m.vocab, req.observations, req.config.oov_policy)?, Vec::new()),
        ModelRef::Feature(m) => {
            let tags = tag_indices(m, req)?;
            (m.n_states(), lookups(&m.vocab, req.observations, req.config.oov_policy)?, tags)
        }
    };
    let len = obs.len();
    let total = (n as u64)
        .checked_pow(len as u32)
        .filter(|&t| t <= BRUTE_FORCE_LIMIT)
        .ok_or(Error::TooLarge { states: n, len })?;

    let rule = Rule {
        space: req.config.space,
        lambda: req.config.lambda,
        lambda_on_oov: req.config.lambda_on_oov,
    };
    let mut seq = vec![0usize; len];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut latest_death = 0;
    for _ in 0..total {
        let (score, death) = score_sequence(model, &obs, &tags, &seq, &rule);
        if rule.is_dead(score) {
            latest_death = latest_death.max(death);
        } else {
            let better = match &best {
                None => true,
                Some((b, bseq)) => score > *b || (score == *b && colex_less(&seq, bseq)),
            };
            if better {
                best = Some((score, seq.clone()));
            }
        }
        // odometer, first position fastest
        for s in seq.iter_mut() {
            *s += 1;
            if *s < n {
                break;
            }
            *s = 0;
        }
    }
    let (score, states) = best.ok_or(Error::Undecodable { position: latest_death })?;
    Ok(DecodeResult {
        states,
        score,
        oov_mask: obs.iter().map(|l| l.is_unknown()).collect(),
        used_fallback: false,
    })
}

//! Token-level metrics, closed tests, k-fold cross-validation and lambda sweeps.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{split_folds, Corpus, Field, IngState};
use crate::decoder::{viterbi_first_order, viterbi_second_order, DecodeRequest};
use crate::error::{Error, Result};
use crate::pipeline::{decode_states, predict_tags, train_pipeline, PipelineConfig, PipelineModel};
use crate::tables::{
    estimate_first_order, estimate_second_order, EstimateOptions, FirstOrderModel, SecondOrderModel,
};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub known_total: usize,
    pub known_correct: usize,
    pub unknown_correct: usize,
    pub token_accuracy: f64,
    /// F1 of every state seen in gold or predictions.
    pub per_class_f1: BTreeMap<IngState, f64>,
    /// Unweighted mean F1 over the states present in gold.
    pub macro_f1: f64,
    /// Mean F1 over states 1, 2, 3 present in gold.
    pub macro_f1_positive: Option<f64>,
    pub known_accuracy: Option<f64>,
    pub unknown_accuracy: Option<f64>,
    pub oov_count: usize,
    pub oov_rate: f64,
    /// Accuracy of the tags fed to the second layer, when they were not gold.
    pub layer1_accuracy: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Token-level scoring of predicted against gold states.
pub fn score(gold: &[Vec<IngState>], predicted: &[Vec<IngState>], oov_mask: &[Vec<bool>]) -> Result<EvalReport> {
    if gold.len() != predicted.len() || gold.len() != oov_mask.len() {
        return Err(Error::LengthMismatch { sentence: gold.len().min(predicted.len()).min(oov_mask.len()) });
    }
    // (true positives, false positives, false negatives) per state
    let mut counts: BTreeMap<IngState, (usize, usize, usize)> = BTreeMap::new();
    let (mut total, mut correct, mut known_total, mut known_correct, mut unknown_correct) = (0, 0, 0, 0, 0);
    let mut in_gold = [false; 4];
    for (s, ((g, p), m)) in gold.iter().zip(predicted).zip(oov_mask).enumerate() {
        if g.len() != p.len() || g.len() != m.len() {
            return Err(Error::LengthMismatch { sentence: s });
        }
        for ((&gs, &ps), &unknown) in g.iter().zip(p).zip(m) {
            total += 1;
            in_gold[gs.value() as usize] = true;
            let hit = gs == ps;
            if hit {
                correct += 1;
                counts.entry(gs).or_default().0 += 1;
            } else {
                counts.entry(ps).or_default().1 += 1;
                counts.entry(gs).or_default().2 += 1;
            }
            if unknown {
                unknown_correct += hit as usize;
            } else {
                known_total += 1;
                known_correct += hit as usize;
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyObservations);
    }
    let per_class_f1: BTreeMap<IngState, f64> = counts
        .iter()
        .map(|(&state, &(tp, fp, fn_))| (state, (2 * tp) as f64 / (2 * tp + fp + fn_) as f64))
        .collect();
    let mean = |states: &mut dyn Iterator<Item = IngState>| {
        let f1s: Vec<f64> = states.filter(|s| in_gold[s.value() as usize]).map(|s| per_class_f1[&s]).collect();
        (!f1s.is_empty()).then(|| f1s.iter().sum::<f64>() / f1s.len() as f64)
    };
    let macro_f1 = mean(&mut IngState::ALL.into_iter()).expect("gold is non-empty");
    let macro_f1_positive = mean(&mut IngState::ALL[1..].iter().copied());
    let oov_count = total - known_total;
    Ok(EvalReport {
        total,
        correct,
        known_total,
        known_correct,
        unknown_correct,
        token_accuracy: correct as f64 / total as f64,
        per_class_f1,
        macro_f1,
        macro_f1_positive,
        known_accuracy: ratio(known_correct, known_total),
        unknown_accuracy: ratio(unknown_correct, oov_count),
        oov_count,
        oov_rate: oov_count as f64 / total as f64,
        layer1_accuracy: None,
    })
}

/// Where the extractor's POS features come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TagCondition {
    /// Gold tags: a perfect first layer.
    Oracle,
    /// Tags from the trained first layer.
    Predicted,
    /// Gold tags with a seeded random subset replaced so that exactly
    /// `round((1 - target) * tokens)` tags are wrong.
    Degraded { target: f64, seed: u64 },
}

impl TagCondition {
    pub fn label(&self) -> String {
        match self {
            TagCondition::Oracle => "oracle".into(),
            TagCondition::Predicted => "predicted".into(),
            TagCondition::Degraded { target, .. } => format!("degraded:{target:.4}"),
        }
    }
}

/// What is trained and decoded for ingredient states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// First-order HMM over tokens (or tags) predicting states.
    FirstOrder { obs: Field },
    SecondOrder { obs: Field },
    /// The two-layer extractor.
    Extractor(TagCondition),
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::FirstOrder { obs } => format!("first_order_{}", obs.name()),
            Family::SecondOrder { obs } => format!("second_order_{}", obs.name()),
            Family::Extractor(c) => format!("extractor_{}", c.label()),
        }
    }
}

/// Gold tags with exactly `round((1 - target) * tokens)` replaced by a
/// different tag drawn uniformly from `tagset`.
pub fn degrade_tags(corpus: &Corpus, tagset: &[String], target: f64, seed: u64) -> Result<Vec<Vec<String>>> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::UnreachableAccuracy(target));
    }
    let total = corpus.token_count();
    let wrong = libm::round((1.0 - target) * total as f64) as usize;
    if wrong > 0 && tagset.len() < 2 {
        return Err(Error::UnreachableAccuracy(target));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = index::sample(&mut rng, total, wrong).into_vec();
    positions.sort_unstable();
    let mut tags: Vec<Vec<String>> = corpus.sentences().iter().map(|s| s.pos_labels().to_vec()).collect();
    let mut next = positions.into_iter().peekable();
    let mut offset = 0;
    for sentence in tags.iter_mut() {
        for (i, tag) in sentence.iter_mut().enumerate() {
            if next.peek() == Some(&(offset + i)) {
                next.next();
                let current = tagset.iter().position(|t| t == tag);
                let mut pick = rng.random_range(0..tagset.len() - current.is_some() as usize);
                if current.is_some_and(|c| pick >= c) {
                    pick += 1;
                }
                *tag = tagset[pick].clone();
            }
        }
        offset += sentence.len();
    }
    Ok(tags)
}

fn accuracy_of(gold: &Corpus, tags: &[Vec<String>]) -> f64 {
    let mut hit = 0;
    for (s, t) in gold.sentences().iter().zip(tags) {
        hit += s.pos_labels().iter().zip(t).filter(|(a, b)| a == b).count();
    }
    hit as f64 / gold.token_count() as f64
}

enum Trained {
    First(FirstOrderModel, Field),
    Second(SecondOrderModel, Field),
    Extractor(PipelineModel, TagCondition),
}

fn train(family: Family, corpus: &Corpus, config: &PipelineConfig) -> Result<Trained> {
    let opts = EstimateOptions { smoothing: config.smoothing };
    Ok(match family {
        Family::FirstOrder { obs } => {
            Trained::First(estimate_first_order(corpus, obs, Field::IngState, opts)?, obs)
        }
        Family::SecondOrder { obs } => {
            Trained::Second(estimate_second_order(corpus, obs, Field::IngState, opts)?, obs)
        }
        Family::Extractor(condition) => Trained::Extractor(train_pipeline(corpus, *config)?, condition),
    })
}

fn parse_states(inventory: &[String], states: &[usize]) -> Vec<IngState> {
    states
        .iter()
        .map(|&s| IngState::parse(&inventory[s]).expect("ingredient-state inventory"))
        .collect()
}

/// Decodes every sentence of `test` and scores it.
fn evaluate(trained: &Trained, test: &Corpus, config: &PipelineConfig, seed_offset: u64) -> Result<EvalReport> {
    let gold: Vec<Vec<IngState>> = test.sentences().iter().map(|s| s.ing_states().to_vec()).collect();
    let mut predicted = Vec::with_capacity(test.len());
    let mut masks = Vec::with_capacity(test.len());
    let mut layer1_accuracy = None;
    match trained {
        Trained::First(_, obs) | Trained::Second(_, obs) => {
            for s in test.sentences() {
                let column: Vec<String> = s.column(*obs).into_iter().map(String::from).collect();
                let req = DecodeRequest::new(&column, config.layer1_decode());
                let (result, inventory) = match trained {
                    Trained::First(m, _) => (viterbi_first_order(m, &req)?, &m.states),
                    Trained::Second(m, _) => (viterbi_second_order(m, &req)?, &m.states),
                    Trained::Extractor(..) => unreachable!(),
                };
                predicted.push(parse_states(inventory, &result.states));
                masks.push(result.oov_mask);
            }
        }
        Trained::Extractor(pipeline, condition) => {
            let tags = match condition {
                TagCondition::Oracle => test.sentences().iter().map(|s| s.pos_labels().to_vec()).collect(),
                TagCondition::Predicted => test
                    .sentences()
                    .iter()
                    .map(|s| predict_tags(pipeline, s.tokens()).map(|(t, _)| t))
                    .collect::<Result<Vec<_>>>()?,
                TagCondition::Degraded { target, seed } => {
                    degrade_tags(test, &pipeline.layer2.tags, *target, seed.wrapping_add(seed_offset))?
                }
            };
            if *condition != TagCondition::Oracle {
                layer1_accuracy = Some(accuracy_of(test, &tags));
            }
            for (s, t) in test.sentences().iter().zip(&tags) {
                let (states, decoded) = decode_states(pipeline, s.tokens(), t)?;
                predicted.push(states);
                masks.push(decoded.oov_mask);
            }
        }
    }
    let mut report = score(&gold, &predicted, &masks)?;
    report.layer1_accuracy = layer1_accuracy;
    Ok(report)
}

/// Trains on `corpus` and decodes the same sentences.
pub fn closed_test(corpus: &Corpus, family: Family, config: &PipelineConfig) -> Result<EvalReport> {
    let trained = train(family, corpus, config)?;
    evaluate(&trained, corpus, config, 0)
}

/// One line of a cross-validation table: a fold, or the average over folds.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub accuracy: f64,
    pub f1: f64,
    pub unknown_accuracy: Option<f64>,
    pub known_accuracy: Option<f64>,
    pub unknown_count: f64,
    pub unknown_rate: f64,
}

impl From<&EvalReport> for MetricsRow {
    fn from(r: &EvalReport) -> Self {
        MetricsRow {
            accuracy: r.token_accuracy,
            f1: r.macro_f1,
            unknown_accuracy: r.unknown_accuracy,
            known_accuracy: r.known_accuracy,
            unknown_count: r.oov_count as f64,
            unknown_rate: r.oov_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValReport {
    pub family: Family,
    pub folds: Vec<EvalReport>,
    /// Unweighted mean of the fold rows. Optional metrics average over the
    /// folds where they are defined.
    pub average: MetricsRow,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn average_rows(rows: &[MetricsRow]) -> MetricsRow {
    let m = |f: fn(&MetricsRow) -> f64| mean_of(rows.iter().map(f)).unwrap_or(f64::NAN);
    MetricsRow {
        accuracy: m(|r| r.accuracy),
        f1: m(|r| r.f1),
        unknown_accuracy: mean_of(rows.iter().filter_map(|r| r.unknown_accuracy)),
        known_accuracy: mean_of(rows.iter().filter_map(|r| r.known_accuracy)),
        unknown_count: m(|r| r.unknown_count),
        unknown_rate: m(|r| r.unknown_rate),
    }
}

/// k-fold cross-validation: every fold is decoded by a model trained on the
/// other k-1 folds, using tables rebuilt from scratch.
pub fn cross_validate(corpus: &Corpus, k: usize, seed: u64, family: Family, config: &PipelineConfig) -> Result<CrossValReport> {
    let plan = split_folds(corpus, k, seed)?;
    let mut folds = Vec::with_capacity(k);
    for (f, test_idx) in plan.folds().iter().enumerate() {
        if test_idx.is_empty() {
            return Err(Error::EmptyFold(f));
        }
        let train_set = corpus.subset(&plan.training_indices(f))?;
        let test_set = corpus.subset(test_idx)?;
        let trained = train(family, &train_set, config)?;
        folds.push(evaluate(&trained, &test_set, config, f as u64)?);
    }
    let rows: Vec<MetricsRow> = folds.iter().map(MetricsRow::from).collect();
    Ok(CrossValReport { family, average: average_rows(&rows), folds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub condition: String,
    pub accuracy: f64,
    pub f1: f64,
}

/// Closed-test accuracy and macro-F1 of the extractor for every lambda under
/// every tag condition. Rows are grouped by condition, lambdas ascending.
pub fn lambda_sweep(
    corpus: &Corpus,
    lambdas: &[f64],
    conditions: &[TagCondition],
    config: &PipelineConfig,
) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(Error::Dimension("empty lambda list".into()));
    }
    for (i, &l) in lambdas.iter().enumerate() {
        if !(l.is_finite() && l >= 1.0) || (i > 0 && l <= lambdas[i - 1]) {
            return Err(Error::InvalidLambda(l));
        }
    }
    let mut rows = Vec::with_capacity(lambdas.len() * conditions.len());
    for &condition in conditions {
        let mut pipeline = train_pipeline(corpus, *config)?;
        for &lambda in lambdas {
            pipeline.config.lambda = lambda;
            let cfg = PipelineConfig { lambda, ..*config };
            let report = evaluate(&Trained::Extractor(pipeline.clone(), condition), corpus, &cfg, 0)?;
            rows.push(SweepRow { lambda, condition: condition.label(), accuracy: report.token_accuracy, f1: report.macro_f1 });
        }
    }
    Ok(rows)
}

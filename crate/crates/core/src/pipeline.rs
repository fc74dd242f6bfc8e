//! Two-layer ingredient extractor: a POS tagger feeds tag features to the
//! tag-conditioned ingredient-state decoder, whose states are then grouped into
//! ingredient spans.

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Field, IngState};
use crate::decoder::{
    viterbi_feature_conditioned, viterbi_first_order, viterbi_second_order, DecodeConfig,
    DecodeRequest, DecodeResult, OovPolicy, Space,
};
use crate::error::{Error, Result};
use crate::tables::{
    estimate_feature_conditioned, estimate_first_order, estimate_second_order, EstimateOptions,
    FeatureConditionedModel, FirstOrderModel, SecondOrderModel,
};
use crate::Lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layer1Order {
    #[default]
    First,
    Second,
}

/// Where the second layer gets its POS tags by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagMode {
    #[default]
    Predicted,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Emission weight of the second layer.
    pub lambda: f64,
    pub space: Space,
    pub oov_policy: OovPolicy,
    pub lambda_on_oov: bool,
    pub fallback: bool,
    pub layer1_order: Layer1Order,
    pub tag_mode: TagMode,
    pub smoothing: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lambda: 4.0,
            space: Space::Log,
            oov_policy: OovPolicy::PrefixTable,
            lambda_on_oov: false,
            fallback: true,
            layer1_order: Layer1Order::First,
            tag_mode: TagMode::Predicted,
            smoothing: 0.0,
        }
    }
}

impl PipelineConfig {
    /// Decoder settings of the POS layer: plain Viterbi.
    pub fn layer1_decode(&self) -> DecodeConfig {
        DecodeConfig {
            lambda: 1.0,
            space: self.space,
            oov_policy: self.oov_policy,
            lambda_on_oov: false,
            fallback: self.fallback,
        }
    }

    pub fn layer2_decode(&self) -> DecodeConfig {
        DecodeConfig {
            lambda: self.lambda,
            space: self.space,
            oov_policy: self.oov_policy,
            lambda_on_oov: self.lambda_on_oov,
            fallback: self.fallback,
        }
    }
}

/// POS tagger of the first layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer1Model {
    First(FirstOrderModel),
    Second(SecondOrderModel),
}

impl Layer1Model {
    pub fn states(&self) -> &[String] {
        match self {
            Layer1Model::First(m) => &m.states,
            Layer1Model::Second(m) => &m.states,
        }
    }

    pub fn vocab(&self) -> &Lexicon {
        match self {
            Layer1Model::First(m) => &m.vocab,
            Layer1Model::Second(m) => &m.vocab,
        }
    }

    pub fn decode(&self, req: &DecodeRequest) -> Result<DecodeResult> {
        match self {
            Layer1Model::First(m) => viterbi_first_order(m, req),
            Layer1Model::Second(m) => viterbi_second_order(m, req),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub layer1: Layer1Model,
    pub layer2: FeatureConditionedModel,
    pub config: PipelineConfig,
}

impl PipelineModel {
    /// Checks that both layers share the lexicon and that the second layer's
    /// tag features are exactly the first layer's states.
    pub fn validate(&self) -> Result<()> {
        if self.layer1.vocab() != &self.layer2.vocab {
            return Err(Error::Dimension("layers use different lexicons".into()));
        }
        if self.layer1.states() != self.layer2.tags.as_slice() {
            return Err(Error::Dimension("layer-2 tagset differs from layer-1 states".into()));
        }
        Ok(())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.layer2.vocab
    }
}

pub fn train_pipeline(corpus: &Corpus, config: PipelineConfig) -> Result<PipelineModel> {
    if corpus.pos_tagset().is_empty() {
        return Err(Error::MissingLayer("POS"));
    }
    if corpus.state_set().is_empty() {
        return Err(Error::MissingLayer("ingredient state"));
    }
    let opts = EstimateOptions { smoothing: config.smoothing };
    let layer1 = match config.layer1_order {
        Layer1Order::First => {
            Layer1Model::First(estimate_first_order(corpus, Field::Token, Field::PosLabel, opts)?)
        }
        Layer1Order::Second => {
            Layer1Model::Second(estimate_second_order(corpus, Field::Token, Field::PosLabel, opts)?)
        }
    };
    let layer2 = estimate_feature_conditioned(corpus, opts)?;
    let model = PipelineModel { layer1, layer2, config };
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, Copy)]
pub enum TagSource<'a> {
    /// Tag with the first layer.
    Predicted,
    /// Use the given tags (gold tags give a perfect first layer).
    Oracle(&'a [String]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpanKind {
    /// `1` followed by any number of `2`.
    Ingredient,
    /// Run of `2` that does not extend an ingredient.
    OrphanContinuation,
    /// Run of `3`.
    StateThree,
}

impl SpanKind {
    pub fn flag(self) -> &'static str {
        match self {
            SpanKind::Ingredient => "",
            SpanKind::OrphanContinuation => "malformed_continuation",
            SpanKind::StateThree => "state_3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngredientSpan {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub text: String,
    pub kind: SpanKind,
}

/// Groups decoded states into spans. Malformed runs are flagged, never repaired.
pub fn states_to_spans<S: AsRef<str>>(tokens: &[S], states: &[IngState]) -> Vec<IngredientSpan> {
    assert_eq!(tokens.len(), states.len(), "tokens and states must align");
    let mut spans: Vec<IngredientSpan> = Vec::new();
    let mut open: Option<(usize, SpanKind)> = None;
    let close = |open: &mut Option<(usize, SpanKind)>, end: usize, spans: &mut Vec<IngredientSpan>| {
        if let Some((start, kind)) = open.take() {
            let text = tokens[start..=end].iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
            spans.push(IngredientSpan { start, end, text, kind });
        }
    };
    for (i, &state) in states.iter().enumerate() {
        let extends = match (state, open) {
            (IngState::CONTINUATION, Some((_, SpanKind::Ingredient | SpanKind::OrphanContinuation))) => true,
            (IngState::THIRD, Some((_, SpanKind::StateThree))) => true,
            _ => false,
        };
        if extends {
            continue;
        }
        if i > 0 {
            close(&mut open, i - 1, &mut spans);
        }
        open = match state {
            IngState::START => Some((i, SpanKind::Ingredient)),
            IngState::CONTINUATION => Some((i, SpanKind::OrphanContinuation)),
            IngState::THIRD => Some((i, SpanKind::StateThree)),
            _ => None,
        };
    }
    if !states.is_empty() {
        close(&mut open, states.len() - 1, &mut spans);
    }
    spans
}

/// Inverse of [`states_to_spans`] on sentences of length `len`.
pub fn spans_to_states(len: usize, spans: &[IngredientSpan]) -> Vec<IngState> {
    let mut states = alloc::vec![IngState::OUTSIDE; len];
    for span in spans {
        for (offset, s) in states[span.start..=span.end].iter_mut().enumerate() {
            *s = match span.kind {
                SpanKind::Ingredient if offset == 0 => IngState::START,
                SpanKind::Ingredient | SpanKind::OrphanContinuation => IngState::CONTINUATION,
                SpanKind::StateThree => IngState::THIRD,
            };
        }
    }
    states
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Diagnostics {
    /// OOV mask of the POS layer; `None` when tags were supplied.
    pub layer1_oov: Option<Vec<bool>>,
    pub layer2_oov: Vec<bool>,
    pub layer1_fallback: bool,
    pub layer2_fallback: bool,
    pub malformed_spans: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub tags: Vec<String>,
    pub states: Vec<IngState>,
    pub spans: Vec<IngredientSpan>,
    pub diagnostics: Diagnostics,
}

/// POS tags for `tokens` from the first layer.
pub fn predict_tags(pipeline: &PipelineModel, tokens: &[String]) -> Result<(Vec<String>, DecodeResult)> {
    let req = DecodeRequest::new(tokens, pipeline.config.layer1_decode());
    let decoded = pipeline.layer1.decode(&req)?;
    let states = pipeline.layer1.states();
    let tags = decoded.states.iter().map(|&s| states[s].clone()).collect();
    Ok((tags, decoded))
}

/// Ingredient states for `tokens` given their POS tags.
pub fn decode_states(pipeline: &PipelineModel, tokens: &[String], tags: &[String]) -> Result<(Vec<IngState>, DecodeResult)> {
    let req = DecodeRequest::new(tokens, pipeline.config.layer2_decode()).with_tags(tags);
    let decoded = viterbi_feature_conditioned(&pipeline.layer2, &req)?;
    let states = decoded
        .states
        .iter()
        .map(|&s| IngState::parse(&pipeline.layer2.states[s]).expect("layer-2 states are ingredient states"))
        .collect();
    Ok((states, decoded))
}

pub fn extract_ingredients(pipeline: &PipelineModel, tokens: &[String], source: TagSource) -> Result<Extraction> {
    let (tags, layer1) = match source {
        TagSource::Predicted => {
            let (tags, decoded) = predict_tags(pipeline, tokens)?;
            (tags, Some(decoded))
        }
        TagSource::Oracle(tags) => {
            if tags.len() != tokens.len() {
                return Err(Error::TagLength { tokens: tokens.len(), tags: tags.len() });
            }
            (tags.to_vec(), None)
        }
    };
    let (states, layer2) = decode_states(pipeline, tokens, &tags)?;
    let spans = states_to_spans(tokens, &states);
    let diagnostics = Diagnostics {
        layer1_fallback: layer1.as_ref().is_some_and(|d| d.used_fallback),
        layer1_oov: layer1.map(|d| d.oov_mask),
        layer2_oov: layer2.oov_mask,
        layer2_fallback: layer2.used_fallback,
        malformed_spans: spans.iter().filter(|s| s.kind != SpanKind::Ingredient).count(),
    };
    Ok(Extraction { tags, states, spans, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;
    use alloc::string::ToString;
    use alloc::vec;

    const TABLE1: &str = "رشة\tC\t0\nملح\tD\t1\nو\tJ\t0\nفلفل\tE\t1\nاسود\tF\t2\n";

    fn st(v: &[u8]) -> Vec<IngState> {
        v.iter().map(|&x| IngState::new(x).unwrap()).collect()
    }

    #[test]
    fn spans_from_recipe_sentence() {
        let tokens = ["رشة", "ملح", "و", "فلفل", "اسود"];
        let spans = states_to_spans(&tokens, &st(&[0, 1, 0, 1, 2]));
        assert_eq!(spans.len(), 2);
        assert_eq!((spans[0].start, spans[0].end, spans[0].text.as_str()), (1, 1, "ملح"));
        assert_eq!((spans[1].start, spans[1].end, spans[1].text.as_str()), (3, 4, "فلفل اسود"));
        assert!(spans.iter().all(|s| s.kind == SpanKind::Ingredient));
    }

    #[test]
    fn span_edge_cases() {
        assert!(states_to_spans(&["a", "b"], &st(&[0, 0])).is_empty());
        let spans = states_to_spans(&["a", "b"], &st(&[2, 0]));
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end, spans[0].kind), (0, 0, SpanKind::OrphanContinuation));
        let spans = states_to_spans(&["a", "b", "c", "d"], &st(&[1, 3, 3, 2]));
        let kinds: Vec<_> = spans.iter().map(|s| (s.start, s.end, s.kind)).collect();
        assert_eq!(
            kinds,
            [(0, 0, SpanKind::Ingredient), (1, 2, SpanKind::StateThree), (3, 3, SpanKind::OrphanContinuation)]
        );
        let spans = states_to_spans(&["a", "b", "c"], &st(&[1, 1, 2]));
        assert_eq!(spans.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(), [(0, 0), (1, 2)]);
    }

    #[test]
    fn well_formed_states_round_trip_through_spans() {
        let states = st(&[0, 1, 2, 2, 0, 1, 1, 0]);
        let tokens: Vec<String> = (0..states.len()).map(|i| i.to_string()).collect();
        assert_eq!(spans_to_states(states.len(), &states_to_spans(&tokens, &states)), states);
    }

    #[test]
    fn one_sentence_pipeline_memorizes() {
        let corpus = parse_corpus(TABLE1).unwrap();
        let pipeline = train_pipeline(&corpus, PipelineConfig::default()).unwrap();
        let s = &corpus.sentences()[0];
        for source in [TagSource::Oracle(s.pos_labels()), TagSource::Predicted] {
            let out = extract_ingredients(&pipeline, s.tokens(), source).unwrap();
            assert_eq!(out.states, s.ing_states());
            let texts: Vec<&str> = out.spans.iter().map(|x| x.text.as_str()).collect();
            assert_eq!(texts, ["ملح", "فلفل اسود"]);
            assert_eq!(out.diagnostics.malformed_spans, 0);
        }
    }

    #[test]
    fn single_class_corpus_decodes_to_zero() {
        let corpus = parse_corpus("a\tA\t0\nb\tB\t0\n\nc\tA\t0\n").unwrap();
        let pipeline = train_pipeline(&corpus, PipelineConfig::default()).unwrap();
        let tokens = vec!["b".to_string(), "zz".to_string(), "a".to_string()];
        let out = extract_ingredients(&pipeline, &tokens, TagSource::Predicted).unwrap();
        assert!(out.states.iter().all(|&s| s == IngState::OUTSIDE));
        assert!(out.spans.is_empty());
    }

    #[test]
    fn dimensions_and_oov_diagnostics() {
        let text = "رشة\tC\t0\nملح\tD\t1\n\nو\tJ\t0\nفلفل\tE\t1\nاسود\tF\t2\n\nملح\tA\t1\nو\tJ\t0\nفلفل\tA\t1\n";
        let corpus = parse_corpus(text).unwrap();
        let pipeline = train_pipeline(&corpus, PipelineConfig::default()).unwrap();
        assert_eq!(pipeline.layer1.states().len(), 6);
        assert_eq!(pipeline.layer2.n_states(), 3);
        assert_eq!(pipeline.layer2.n_tags(), 6);
        let tokens = vec!["ملح".to_string(), "و".to_string(), "فلفلة".to_string()];
        let out = extract_ingredients(&pipeline, &tokens, TagSource::Predicted).unwrap();
        assert_eq!(out.diagnostics.layer1_oov.as_deref(), Some(&[false, false, true][..]));
        assert_eq!(out.diagnostics.layer2_oov, [false, false, true]);
    }

    #[test]
    fn second_order_first_layer() {
        let corpus = parse_corpus(TABLE1).unwrap();
        let cfg = PipelineConfig { layer1_order: Layer1Order::Second, ..Default::default() };
        let pipeline = train_pipeline(&corpus, cfg).unwrap();
        let s = &corpus.sentences()[0];
        let out = extract_ingredients(&pipeline, s.tokens(), TagSource::Predicted).unwrap();
        assert_eq!(out.tags, s.pos_labels());
    }
}

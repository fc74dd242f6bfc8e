//! Annotated corpus: parsing, lexicon, prefixes and fold plans.
//!
//! A corpus file holds one token per line as `token<TAB>pos_label<TAB>ing_state`,
//! sentences separated by blank lines, `#` comment lines ignored.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Ingredient state of a token: 0 outside, 1 ingredient start, 2 continuation,
/// 3 declared by the annotation scheme but without fixed semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IngState(u8);

impl IngState {
    pub const OUTSIDE: IngState = IngState(0);
    pub const START: IngState = IngState(1);
    pub const CONTINUATION: IngState = IngState(2);
    pub const THIRD: IngState = IngState(3);
    pub const ALL: [IngState; 4] = [Self::OUTSIDE, Self::START, Self::CONTINUATION, Self::THIRD];

    pub fn new(value: u8) -> Option<Self> {
        (value <= 3).then_some(IngState(value))
    }

    pub fn parse(symbol: &str) -> Option<Self> {
        match symbol {
            "0" => Some(Self::OUTSIDE),
            "1" => Some(Self::START),
            "2" => Some(Self::CONTINUATION),
            "3" => Some(Self::THIRD),
            _ => None,
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn as_str(self) -> &'static str {
        ["0", "1", "2", "3"][self.0 as usize]
    }
}

impl fmt::Display for IngState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which annotation column a model reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Token,
    PosLabel,
    IngState,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Token => "token",
            Field::PosLabel => "pos_label",
            Field::IngState => "ing_state",
        }
    }
}

impl core::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(Field::Token),
            "pos_label" | "pos" | "tag" => Ok(Field::PosLabel),
            "ing_state" | "state" => Ok(Field::IngState),
            other => Err(Error::FieldSelection(alloc::format!("unknown field {other:?}"))),
        }
    }
}

/// One training sentence with its two annotation layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    tokens: Vec<String>,
    pos_labels: Vec<String>,
    ing_states: Vec<IngState>,
}

impl AnnotatedSentence {
    pub fn new(
        tokens: Vec<String>,
        pos_labels: Vec<String>,
        ing_states: Vec<IngState>,
    ) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::MalformedSentence("empty sentence".into()));
        }
        if tokens.len() != pos_labels.len() || tokens.len() != ing_states.len() {
            return Err(Error::MalformedSentence(alloc::format!(
                "{} tokens, {} labels, {} states",
                tokens.len(),
                pos_labels.len(),
                ing_states.len()
            )));
        }
        if let Some(pos) = first_orphan_continuation(&ing_states) {
            return Err(Error::MalformedSentence(alloc::format!(
                "state 2 without a preceding ingredient token at position {pos}"
            )));
        }
        Ok(Self { tokens, pos_labels, ing_states })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn pos_labels(&self) -> &[String] {
        &self.pos_labels
    }

    pub fn ing_states(&self) -> &[IngState] {
        &self.ing_states
    }

    /// Symbol at `position` in the requested column.
    pub fn symbol(&self, field: Field, position: usize) -> &str {
        match field {
            Field::Token => &self.tokens[position],
            Field::PosLabel => &self.pos_labels[position],
            Field::IngState => self.ing_states[position].as_str(),
        }
    }

    pub fn column(&self, field: Field) -> Vec<&str> {
        (0..self.len()).map(|i| self.symbol(field, i)).collect()
    }
}

fn first_orphan_continuation(states: &[IngState]) -> Option<usize> {
    states.iter().enumerate().find_map(|(i, &s)| {
        let orphan = s == IngState::CONTINUATION
            && (i == 0 || states[i - 1] == IngState::OUTSIDE);
        orphan.then_some(i)
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub sentences: usize,
    pub tokens: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    pub source: Option<String>,
    pub stats: ParseStats,
}

/// A parsed corpus with its tag and state inventories in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<AnnotatedSentence>,
    pos_tagset: Vec<String>,
    state_set: Vec<IngState>,
    provenance: Provenance,
}

impl Corpus {
    /// Builds a corpus and derives its inventories from the sentences.
    pub fn from_sentences(sentences: Vec<AnnotatedSentence>) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::NoSentences);
        }
        let mut pos_tagset: Vec<String> = Vec::new();
        let mut state_set: Vec<IngState> = Vec::new();
        for s in &sentences {
            for label in s.pos_labels() {
                if !pos_tagset.iter().any(|t| t == label) {
                    pos_tagset.push(label.clone());
                }
            }
            for &state in s.ing_states() {
                if !state_set.contains(&state) {
                    state_set.push(state);
                }
            }
        }
        let stats = ParseStats {
            sentences: sentences.len(),
            tokens: sentences.iter().map(AnnotatedSentence::len).sum(),
        };
        Ok(Self {
            sentences,
            pos_tagset,
            state_set,
            provenance: Provenance { source: None, stats },
        })
    }

    /// Sub-corpus over `indices` that keeps this corpus' inventories, so models
    /// trained on a fold share symbol indices with the full corpus.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::NoSentences);
        }
        let sentences: Vec<_> = indices.iter().map(|&i| self.sentences[i].clone()).collect();
        let stats = ParseStats {
            sentences: sentences.len(),
            tokens: sentences.iter().map(AnnotatedSentence::len).sum(),
        };
        Ok(Self {
            sentences,
            pos_tagset: self.pos_tagset.clone(),
            state_set: self.state_set.clone(),
            provenance: Provenance { source: self.provenance.source.clone(), stats },
        })
    }

    /// Copy of this corpus with the POS column replaced sentence by sentence.
    pub fn with_pos_labels(&self, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != self.sentences.len() {
            return Err(Error::Dimension(alloc::format!(
                "{} label sequences for {} sentences",
                labels.len(),
                self.sentences.len()
            )));
        }
        let sentences = self
            .sentences
            .iter()
            .zip(labels)
            .map(|(s, l)| AnnotatedSentence::new(s.tokens.clone(), l, s.ing_states.clone()))
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        for s in &sentences {
            for label in s.pos_labels() {
                if !out.pos_tagset.iter().any(|t| t == label) {
                    out.pos_tagset.push(label.clone());
                }
            }
        }
        out.sentences = sentences;
        Ok(out)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.provenance.source = Some(source.into());
        self
    }

    pub fn sentences(&self) -> &[AnnotatedSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.provenance.stats.tokens
    }

    pub fn pos_tagset(&self) -> &[String] {
        &self.pos_tagset
    }

    pub fn state_set(&self) -> &[IngState] {
        &self.state_set
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Ordered symbol inventory of a state column.
    pub fn inventory(&self, field: Field) -> Result<Vec<String>> {
        match field {
            Field::PosLabel => Ok(self.pos_tagset.clone()),
            Field::IngState => Ok(self.state_set.iter().map(|s| s.as_str().to_string()).collect()),
            Field::Token => Err(Error::FieldSelection(
                "tokens are observations, not states".into(),
            )),
        }
    }

    /// Serializes back to the corpus file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sentences.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for p in 0..s.len() {
                out.push_str(&s.tokens[p]);
                out.push('\t');
                out.push_str(&s.pos_labels[p]);
                out.push('\t');
                out.push_str(s.ing_states[p].as_str());
                out.push('\n');
            }
        }
        out
    }

    pub fn stats(&self) -> CorpusStats {
        corpus_stats(self)
    }
}

/// Parses a corpus document. Errors carry 1-based line numbers.
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    let mut states = Vec::new();
    let mut flush = |tokens: &mut Vec<String>,
                     labels: &mut Vec<String>,
                     states: &mut Vec<IngState>|
     -> Result<()> {
        if !tokens.is_empty() {
            sentences.push(AnnotatedSentence::new(
                core::mem::take(tokens),
                core::mem::take(labels),
                core::mem::take(states),
            )?);
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush(&mut tokens, &mut labels, &mut states)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::FieldCount { line: line_no, found: fields.len() });
        }
        let (token, label, symbol) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
        if token.is_empty() || label.is_empty() {
            return Err(Error::EmptyField { line: line_no });
        }
        let state = IngState::parse(symbol)
            .ok_or_else(|| Error::InvalidState { line: line_no, symbol: symbol.to_string() })?;
        if state == IngState::CONTINUATION
            && states.last().is_none_or(|&prev| prev == IngState::OUTSIDE)
        {
            return Err(Error::OrphanContinuation { line: line_no });
        }
        tokens.push(token.to_string());
        labels.push(label.to_string());
        states.push(state);
    }
    flush(&mut tokens, &mut labels, &mut states)?;
    Corpus::from_sentences(sentences)
}

/// First two Unicode scalar values of `token` (the whole token if shorter).
pub fn extract_prefix(token: &str) -> Result<&str> {
    let mut chars = token.char_indices();
    match (chars.next(), chars.nth(1)) {
        (None, _) => Err(Error::EmptyToken),
        (Some(_), Some((end, _))) => Ok(&token[..end]),
        (Some(_), None) => Ok(token),
    }
}

/// Observation vocabulary with dense indices and per-word prefix keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    prefixes: Vec<String>,
    prefix_index: BTreeMap<String, usize>,
    word_prefix: Vec<usize>,
}

/// How a token relates to a lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Known(usize),
    /// Not in the lexicon; carries the prefix column if the prefix is known.
    Unknown(Option<usize>),
}

impl Lookup {
    pub fn is_unknown(self) -> bool {
        matches!(self, Lookup::Unknown(_))
    }
}

impl Lexicon {
    /// Distinct symbols in first-appearance order.
    pub fn from_symbols<'a>(symbols: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut lex = Lexicon::default();
        for s in symbols {
            lex.insert(s)?;
        }
        Ok(lex)
    }

    fn insert(&mut self, word: &str) -> Result<usize> {
        if let Some(&i) = self.index.get(word) {
            return Ok(i);
        }
        let prefix = extract_prefix(word)?;
        let p = match self.prefix_index.get(prefix) {
            Some(&p) => p,
            None => {
                self.prefixes.push(prefix.to_string());
                self.prefix_index.insert(prefix.to_string(), self.prefixes.len() - 1);
                self.prefixes.len() - 1
            }
        };
        let i = self.words.len();
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), i);
        self.word_prefix.push(p);
        Ok(i)
    }

    /// Lexicon over the given column of a corpus.
    pub fn from_corpus(corpus: &Corpus, field: Field) -> Result<Self> {
        Self::from_symbols(
            corpus
                .sentences()
                .iter()
                .flat_map(|s| (0..s.len()).map(move |i| s.symbol(field, i))),
        )
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn prefix_of(&self, index: usize) -> &str {
        &self.prefixes[self.word_prefix[index]]
    }

    /// Prefix column of word `index`.
    pub fn prefix_id(&self, index: usize) -> usize {
        self.word_prefix[index]
    }

    pub fn prefix_index_of(&self, prefix: &str) -> Option<usize> {
        self.prefix_index.get(prefix).copied()
    }

    pub fn lookup(&self, token: &str) -> Lookup {
        match self.index_of(token) {
            Some(i) => Lookup::Known(i),
            None => Lookup::Unknown(
                extract_prefix(token).ok().and_then(|p| self.prefix_index_of(p)),
            ),
        }
    }
}

/// Lexicon of the token column.
pub fn build_lexicon(corpus: &Corpus) -> Result<Lexicon> {
    Lexicon::from_corpus(corpus, Field::Token)
}

/// Sentence-level fold assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    /// Sentence indices of each fold, ascending.
    pub fn folds(&self) -> Vec<Vec<usize>> {
        let mut folds = vec![Vec::new(); self.k];
        for (sentence, &fold) in self.assignment.iter().enumerate() {
            folds[fold].push(sentence);
        }
        folds
    }

    /// Sentence indices outside fold `fold`, ascending.
    pub fn training_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}

/// Seeded shuffle followed by round-robin assignment.
pub fn split_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldPlan> {
    split_indices(corpus.len(), k, seed)
}

pub(crate) fn split_indices(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::FoldCount { k, sentences: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    for (pos, &sentence) in order.iter().enumerate() {
        assignment[sentence] = pos % k;
    }
    Ok(FoldPlan { k, seed, assignment })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub lexicon_size: usize,
    pub pos_tags: usize,
    pub states: usize,
    /// Token counts for states 0..=3.
    pub state_histogram: [usize; 4],
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut state_histogram = [0; 4];
    let mut words = alloc::collections::BTreeSet::new();
    for s in corpus.sentences() {
        for &st in s.ing_states() {
            state_histogram[st.value() as usize] += 1;
        }
        words.extend(s.tokens().iter().map(String::as_str));
    }
    CorpusStats {
        sentences: corpus.len(),
        tokens: corpus.token_count(),
        lexicon_size: words.len(),
        pos_tags: corpus.pos_tagset().len(),
        states: corpus.state_set().len(),
        state_histogram,
    }
}

/// Out-of-vocabulary tokens of `corpus` against `lexicon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OovStats {
    pub oov_tokens: usize,
    pub tokens: usize,
}

impl OovStats {
    pub fn rate(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.oov_tokens as f64 / self.tokens as f64
        }
    }
}

pub fn oov_stats(corpus: &Corpus, lexicon: &Lexicon) -> OovStats {
    let mut oov = 0;
    for s in corpus.sentences() {
        oov += s.tokens().iter().filter(|t| !lexicon.contains(t)).count();
    }
    OovStats { oov_tokens: oov, tokens: corpus.token_count() }
}

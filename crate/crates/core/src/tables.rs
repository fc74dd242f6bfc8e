//! Relative-frequency estimation of HMM tables and prefix-aggregated
//! emission tables for unknown words.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Field, Lexicon};
use crate::error::{Error, Result};

/// Conditional distribution table: one row per context, one column per outcome.
///
/// Counts are kept next to the probabilities. With zero smoothing a context
/// that was never observed has an all-zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct CondTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    probs: Vec<f64>,
}

impl CondTable {
    /// Normalizes row-major `counts`, adding `smoothing` to every cell.
    pub fn from_counts(rows: usize, cols: usize, counts: Vec<u64>, smoothing: f64) -> Self {
        assert_eq!(counts.len(), rows * cols, "count table shape");
        let mut probs = vec![0.0; rows * cols];
        for r in 0..rows {
            let row = &counts[r * cols..(r + 1) * cols];
            let total: u64 = row.iter().sum();
            let denom = total as f64 + smoothing * cols as f64;
            if denom > 0.0 {
                for (p, &c) in probs[r * cols..(r + 1) * cols].iter_mut().zip(row) {
                    *p = (c as f64 + smoothing) / denom;
                }
            }
        }
        Self { rows, cols, counts, probs }
    }

    pub fn from_parts(rows: usize, cols: usize, counts: Vec<u64>, probs: Vec<f64>) -> Result<Self> {
        if counts.len() != rows * cols || probs.len() != rows * cols {
            return Err(Error::Dimension(alloc::format!(
                "table {rows}x{cols} with {} counts and {} probabilities",
                counts.len(),
                probs.len()
            )));
        }
        Ok(Self { rows, cols, counts, probs })
    }

    /// Table with the given probabilities and no counts.
    pub fn from_probs(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        Self::from_parts(rows, cols, vec![0; rows * cols], probs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn prob(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols + col]
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.probs[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row * self.cols..(row + 1) * self.cols].iter().sum()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        self.row(row).iter().sum()
    }

    /// Rows whose probabilities are all zero.
    pub fn zero_rows(&self) -> usize {
        (0..self.rows).filter(|&r| self.row(r).iter().all(|&p| p == 0.0)).count()
    }
}

/// Emission table with its word axis collapsed onto word prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixTable {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl PrefixTable {
    pub fn from_probs(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows * cols {
            return Err(Error::Dimension(alloc::format!(
                "prefix table {rows}x{cols} with {} entries",
                probs.len()
            )));
        }
        Ok(Self { rows, cols, probs })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn prob(&self, row: usize, prefix: usize) -> f64 {
        self.probs[row * self.cols + prefix]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.probs[row * self.cols..(row + 1) * self.cols]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `C[context, p] = sum of B[context, w]` over words `w` whose prefix is `p`.
pub fn build_prefix_table(emission: &CondTable, lexicon: &Lexicon) -> PrefixTable {
    assert_eq!(emission.cols(), lexicon.len(), "emission columns must be lexicon words");
    let cols = lexicon.prefixes().len();
    let mut probs = vec![0.0; emission.rows() * cols];
    for r in 0..emission.rows() {
        for (w, &p) in emission.row(r).iter().enumerate() {
            probs[r * cols + lexicon.prefix_id(w)] += p;
        }
    }
    PrefixTable { rows: emission.rows(), cols, probs }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EstimateOptions {
    /// Additive smoothing applied to every table cell. Zero keeps pure
    /// relative frequencies.
    pub smoothing: f64,
}

/// First-order HMM: `pi`, `trans[i, j]`, `emit[j, w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderModel {
    pub states: Vec<String>,
    pub vocab: Lexicon,
    /// Single-row start distribution.
    pub pi: CondTable,
    pub trans: CondTable,
    pub emit: CondTable,
    pub prefix_emit: PrefixTable,
}

/// Full second-order HMM.
///
/// `trans3` rows are state pairs `(i, j)` at positions `r-2, r-1`; `emit2` rows
/// are pairs at `r-1, r`. Position 0 emits through `emit1` (all positions, any
/// predecessor) and position 1 moves through the bigram table `trans2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderModel {
    pub states: Vec<String>,
    pub vocab: Lexicon,
    pub pi: CondTable,
    pub trans2: CondTable,
    pub trans3: CondTable,
    pub emit1: CondTable,
    pub emit2: CondTable,
    pub prefix_emit1: PrefixTable,
    pub prefix_emit2: PrefixTable,
}

/// Ingredient-state model conditioned on POS tags.
///
/// `trans` rows are `(tag at r-1, state at r-1)`, columns the state at `r`.
/// `emit` rows are `(tag at r, state at r)`, columns words. Row index is
/// `tag * n_states + state`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConditionedModel {
    pub states: Vec<String>,
    pub tags: Vec<String>,
    pub vocab: Lexicon,
    pub pi: CondTable,
    pub trans: CondTable,
    pub emit: CondTable,
    pub prefix_emit: PrefixTable,
}

impl FirstOrderModel {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.states.len(), self.vocab.len());
        check(&self.pi, 1, n, "pi")?;
        check(&self.trans, n, n, "trans")?;
        check(&self.emit, n, m, "emit")?;
        check_prefix(&self.prefix_emit, n, self.vocab.prefixes().len(), "prefix_emit")
    }
}

impl SecondOrderModel {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m, p) = (self.states.len(), self.vocab.len(), self.vocab.prefixes().len());
        check(&self.pi, 1, n, "pi")?;
        check(&self.trans2, n, n, "trans2")?;
        check(&self.trans3, n * n, n, "trans3")?;
        check(&self.emit1, n, m, "emit1")?;
        check(&self.emit2, n * n, m, "emit2")?;
        check_prefix(&self.prefix_emit1, n, p, "prefix_emit1")?;
        check_prefix(&self.prefix_emit2, n * n, p, "prefix_emit2")
    }
}

impl FeatureConditionedModel {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    #[inline]
    pub fn context(&self, tag: usize, state: usize) -> usize {
        tag * self.states.len() + state
    }

    pub fn tag_index(&self, tag: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k, m) = (self.states.len(), self.tags.len(), self.vocab.len());
        check(&self.pi, 1, n, "pi")?;
        check(&self.trans, k * n, n, "trans")?;
        check(&self.emit, k * n, m, "emit")?;
        check_prefix(&self.prefix_emit, k * n, self.vocab.prefixes().len(), "prefix_emit")
    }
}

fn check(table: &CondTable, rows: usize, cols: usize, name: &str) -> Result<()> {
    if table.rows() != rows || table.cols() != cols {
        return Err(Error::Dimension(alloc::format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            table.rows(),
            table.cols()
        )));
    }
    Ok(())
}

fn check_prefix(table: &PrefixTable, rows: usize, cols: usize, name: &str) -> Result<()> {
    if table.rows() != rows || table.cols() != cols {
        return Err(Error::Dimension(alloc::format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            table.rows(),
            table.cols()
        )));
    }
    Ok(())
}

struct Columns {
    states: Vec<String>,
    vocab: Lexicon,
    /// Per sentence: (state index, word index) for every position.
    sequences: Vec<Vec<(usize, usize)>>,
}

fn index_columns(corpus: &Corpus, obs: Field, state: Field) -> Result<Columns> {
    if corpus.is_empty() {
        return Err(Error::NoSentences);
    }
    if obs == state {
        return Err(Error::FieldSelection("observation and state field are the same".into()));
    }
    if obs == Field::IngState {
        return Err(Error::FieldSelection("ingredient states cannot be observations".into()));
    }
    let states = corpus.inventory(state)?;
    let state_index: BTreeMap<&str, usize> =
        states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let vocab = Lexicon::from_corpus(corpus, obs)?;
    let sequences = corpus
        .sentences()
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|p| {
                    let st = state_index[s.symbol(state, p)];
                    let w = vocab.index_of(s.symbol(obs, p)).expect("lexicon covers corpus");
                    (st, w)
                })
                .collect()
        })
        .collect();
    Ok(Columns { states, vocab, sequences })
}

/// First-order model reading `obs` and predicting `state`.
pub fn estimate_first_order(
    corpus: &Corpus,
    obs: Field,
    state: Field,
    opts: EstimateOptions,
) -> Result<FirstOrderModel> {
    let cols = index_columns(corpus, obs, state)?;
    let (n, m) = (cols.states.len(), cols.vocab.len());
    let mut pi = vec![0u64; n];
    let mut trans = vec![0u64; n * n];
    let mut emit = vec![0u64; n * m];
    for seq in &cols.sequences {
        pi[seq[0].0] += 1;
        for (r, &(s, w)) in seq.iter().enumerate() {
            emit[s * m + w] += 1;
            if r > 0 {
                trans[seq[r - 1].0 * n + s] += 1;
            }
        }
    }
    let emit = CondTable::from_counts(n, m, emit, opts.smoothing);
    let prefix_emit = build_prefix_table(&emit, &cols.vocab);
    Ok(FirstOrderModel {
        states: cols.states,
        vocab: cols.vocab,
        pi: CondTable::from_counts(1, n, pi, opts.smoothing),
        trans: CondTable::from_counts(n, n, trans, opts.smoothing),
        emit,
        prefix_emit,
    })
}

/// Full second-order model: trigram transitions and pair-conditioned emissions.
pub fn estimate_second_order(
    corpus: &Corpus,
    obs: Field,
    state: Field,
    opts: EstimateOptions,
) -> Result<SecondOrderModel> {
    let cols = index_columns(corpus, obs, state)?;
    let (n, m) = (cols.states.len(), cols.vocab.len());
    let mut pi = vec![0u64; n];
    let mut trans2 = vec![0u64; n * n];
    let mut trans3 = vec![0u64; n * n * n];
    let mut emit1 = vec![0u64; n * m];
    let mut emit2 = vec![0u64; n * n * m];
    for seq in &cols.sequences {
        pi[seq[0].0] += 1;
        for (r, &(s, w)) in seq.iter().enumerate() {
            emit1[s * m + w] += 1;
            if r >= 1 {
                let prev = seq[r - 1].0;
                trans2[prev * n + s] += 1;
                emit2[(prev * n + s) * m + w] += 1;
            }
            if r >= 2 {
                trans3[(seq[r - 2].0 * n + seq[r - 1].0) * n + s] += 1;
            }
        }
    }
    let emit1 = CondTable::from_counts(n, m, emit1, opts.smoothing);
    let emit2 = CondTable::from_counts(n * n, m, emit2, opts.smoothing);
    Ok(SecondOrderModel {
        prefix_emit1: build_prefix_table(&emit1, &cols.vocab),
        prefix_emit2: build_prefix_table(&emit2, &cols.vocab),
        states: cols.states,
        vocab: cols.vocab,
        pi: CondTable::from_counts(1, n, pi, opts.smoothing),
        trans2: CondTable::from_counts(n, n, trans2, opts.smoothing),
        trans3: CondTable::from_counts(n * n, n, trans3, opts.smoothing),
        emit1,
        emit2,
    })
}

/// Ingredient-state model with transitions conditioned on the previous
/// (tag, state) pair and emissions on the current (tag, state) pair.
pub fn estimate_feature_conditioned(
    corpus: &Corpus,
    opts: EstimateOptions,
) -> Result<FeatureConditionedModel> {
    if corpus.pos_tagset().is_empty() {
        return Err(Error::MissingLayer("POS"));
    }
    if corpus.state_set().is_empty() {
        return Err(Error::MissingLayer("ingredient state"));
    }
    let states_cols = index_columns(corpus, Field::Token, Field::IngState)?;
    let tags = corpus.pos_tagset().to_vec();
    let tag_index: BTreeMap<&str, usize> =
        tags.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let (n, k, m) = (states_cols.states.len(), tags.len(), states_cols.vocab.len());
    let mut pi = vec![0u64; n];
    let mut trans = vec![0u64; k * n * n];
    let mut emit = vec![0u64; k * n * m];
    for (sentence, seq) in corpus.sentences().iter().zip(&states_cols.sequences) {
        let labels = sentence.pos_labels();
        pi[seq[0].0] += 1;
        for (r, &(s, w)) in seq.iter().enumerate() {
            let tag = tag_index[labels[r].as_str()];
            emit[(tag * n + s) * m + w] += 1;
            if r > 0 {
                let prev_tag = tag_index[labels[r - 1].as_str()];
                trans[(prev_tag * n + seq[r - 1].0) * n + s] += 1;
            }
        }
    }
    let emit = CondTable::from_counts(k * n, m, emit, opts.smoothing);
    Ok(FeatureConditionedModel {
        prefix_emit: build_prefix_table(&emit, &states_cols.vocab),
        states: states_cols.states,
        tags,
        vocab: states_cols.vocab,
        pi: CondTable::from_counts(1, n, pi, opts.smoothing),
        trans: CondTable::from_counts(k * n, n, trans, opts.smoothing),
        emit,
    })
}

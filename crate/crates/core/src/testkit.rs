//! Random models and observation sequences for property tests.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::Lexicon;
use crate::tables::{
    build_prefix_table, CondTable, FeatureConditionedModel, FirstOrderModel, SecondOrderModel,
};

const LETTERS: [char; 6] = ['ا', 'ب', 'ت', 'م', 'ل', 'و'];

/// `words` distinct tokens drawn over a handful of two-letter prefixes.
pub fn random_lexicon<R: Rng>(rng: &mut R, words: usize) -> Lexicon {
    let prefixes = rng.random_range(1..=words.clamp(1, 4));
    let tokens: Vec<String> = (0..words)
        .map(|i| {
            let p = i % prefixes;
            format!("{}{}{i}", LETTERS[p], LETTERS[(p + 1) % LETTERS.len()])
        })
        .collect();
    Lexicon::from_symbols(tokens.iter().map(String::as_str)).expect("non-empty tokens")
}

/// Row-stochastic table; each cell is zeroed with probability `sparsity`, and
/// with probability `dead_rows` a whole row is zero (an unseen context).
pub fn random_table<R: Rng>(rng: &mut R, rows: usize, cols: usize, sparsity: f64, dead_rows: f64) -> CondTable {
    let mut probs = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        if rng.random_bool(dead_rows) {
            probs.extend(core::iter::repeat_n(0.0, cols));
            continue;
        }
        let mut row: Vec<f64> = (0..cols)
            .map(|_| if rng.random_bool(sparsity) { 0.0 } else { rng.random::<f64>() + 1e-3 })
            .collect();
        if row.iter().all(|&x| x == 0.0) {
            let c = rng.random_range(0..cols);
            row[c] = 1.0;
        }
        let total: f64 = row.iter().sum();
        probs.extend(row.into_iter().map(|x| x / total));
    }
    CondTable::from_probs(rows, cols, probs).expect("shape")
}

fn state_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{i}")).collect()
}

pub fn random_first_order<R: Rng>(rng: &mut R, n: usize, m: usize, sparsity: f64) -> FirstOrderModel {
    let vocab = random_lexicon(rng, m);
    let emit = random_table(rng, n, m, sparsity, 0.0);
    FirstOrderModel {
        states: state_names(n),
        pi: random_table(rng, 1, n, sparsity, 0.0),
        trans: random_table(rng, n, n, sparsity, 0.0),
        prefix_emit: build_prefix_table(&emit, &vocab),
        emit,
        vocab,
    }
}

pub fn random_second_order<R: Rng>(rng: &mut R, n: usize, m: usize, sparsity: f64) -> SecondOrderModel {
    let vocab = random_lexicon(rng, m);
    let emit1 = random_table(rng, n, m, sparsity, 0.0);
    let emit2 = random_table(rng, n * n, m, sparsity, 0.0);
    SecondOrderModel {
        states: state_names(n),
        pi: random_table(rng, 1, n, sparsity, 0.0),
        trans2: random_table(rng, n, n, sparsity, 0.0),
        trans3: random_table(rng, n * n, n, sparsity, 0.0),
        prefix_emit1: build_prefix_table(&emit1, &vocab),
        prefix_emit2: build_prefix_table(&emit2, &vocab),
        emit1,
        emit2,
        vocab,
    }
}

pub fn random_feature<R: Rng>(rng: &mut R, n: usize, k: usize, m: usize, sparsity: f64) -> FeatureConditionedModel {
    let vocab = random_lexicon(rng, m);
    let emit = random_table(rng, k * n, m, sparsity, 0.0);
    FeatureConditionedModel {
        states: state_names(n),
        tags: (0..k).map(|i| format!("T{i}")).collect(),
        pi: random_table(rng, 1, n, sparsity, 0.0),
        trans: random_table(rng, k * n, n, sparsity, 0.0),
        prefix_emit: build_prefix_table(&emit, &vocab),
        emit,
        vocab,
    }
}

/// Tokens from `vocab`; each one is replaced by an unknown word with
/// probability `oov`. Half of the unknown words share a known prefix.
pub fn random_tokens<R: Rng>(rng: &mut R, vocab: &Lexicon, len: usize, oov: f64) -> Vec<String> {
    (0..len)
        .map(|i| {
            if rng.random_bool(oov) {
                if rng.random_bool(0.5) {
                    let p = rng.random_range(0..vocab.prefixes().len());
                    format!("{}#unk{i}", vocab.prefixes()[p])
                } else {
                    format!("zz#unk{i}")
                }
            } else {
                vocab.word(rng.random_range(0..vocab.len())).into()
            }
        })
        .collect()
}

pub fn random_tags<R: Rng>(rng: &mut R, tags: &[String], len: usize) -> Vec<String> {
    (0..len).map(|_| tags[rng.random_range(0..tags.len())].clone()).collect()
}

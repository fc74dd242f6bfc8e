//! Seeded generator of recipe-ingredient sentences in the annotated corpus
//! format: 14 POS tags (`A`..`M` and `.`), ingredient states 0-3, pseudo-Arabic
//! words drawn with Zipfian frequencies so that a held-out fifth of the corpus
//! has roughly one unknown token in ten.
//!
//! Some definite nouns are ingredients (tag `C`, state 1) in one sentence and
//! plain nouns after a preposition (tag `H`, state 0) in another, with the same
//! preceding states. Only the POS context separates the two readings.

use std::collections::BTreeSet;

use ingredient_hmm_core::{AnnotatedSentence, Corpus, IngState};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SENTENCES: usize = 300;
pub const DEFAULT_SEED: u64 = 2024;

const LETTERS: [char; 22] = [
    'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ر', 'ز', 'س', 'ش', 'ص', 'ط', 'ع', 'غ', 'ف', 'ق', 'ك', 'م', 'ن', 'ه', 'ي',
];

struct Pool {
    words: Vec<String>,
    dist: WeightedIndex<f64>,
}

impl Pool {
    fn new(words: Vec<String>, exponent: f64) -> Self {
        let weights: Vec<f64> = (0..words.len()).map(|i| 1.0 / ((i + 1) as f64).powf(exponent)).collect();
        Pool { dist: WeightedIndex::new(weights).expect("non-empty pool"), words }
    }

    fn fixed(words: &[&str]) -> Self {
        Pool::new(words.iter().map(|w| w.to_string()).collect(), 0.0)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> String {
        self.words[self.dist.sample(rng)].clone()
    }
}

fn stems(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(3..=5);
        let w: String = (0..len).map(|_| LETTERS[rng.random_range(0..LETTERS.len())]).collect();
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct Pools {
    ingredient: Pool,
    definite: Pool,
    ambiguous: Pool,
    adjective: Pool,
    quantity: Pool,
    number: Pool,
    unit: Pool,
    preposition: Pool,
    after_prep: Pool,
    passive: Pool,
    superlative: Pool,
    noun: Pool,
}

fn pools(rng: &mut ChaCha8Rng) -> Pools {
    let mut taken = BTreeSet::new();
    let ingredient = stems(rng, 400, &mut taken);
    let definite: Vec<String> = stems(rng, 140, &mut taken).into_iter().map(|s| format!("ال{s}")).collect();
    let ambiguous = definite[..12].to_vec();
    let adjective = stems(rng, 90, &mut taken);
    let after_prep: Vec<String> = stems(rng, 50, &mut taken).into_iter().map(|s| format!("ال{s}")).collect();
    let passive: Vec<String> = stems(rng, 30, &mut taken).into_iter().map(|s| format!("م{s}")).collect();
    let noun = stems(rng, 40, &mut taken);
    Pools {
        ingredient: Pool::new(ingredient, 0.9),
        definite: Pool::new(definite, 1.0),
        ambiguous: Pool::new(ambiguous, 0.5),
        adjective: Pool::new(adjective, 0.9),
        quantity: Pool::fixed(&["رشة", "كأس", "حبة", "قليل", "كمية"]),
        number: Pool::new(
            ["1", "2", "3", "4", "5", "6", "8", "10", "12", "نصف", "ربع", "ثلث"].iter().map(|s| s.to_string()).collect(),
            0.8,
        ),
        unit: Pool::new(
            ["غرام", "ملعقة", "كوب", "لتر", "كيلو", "فنجان", "حفنة", "رطل", "قطعة", "شريحة"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            0.7,
        ),
        preposition: Pool::fixed(&["في", "على", "من", "مع", "حسب", "إلى"]),
        after_prep: Pool::new(after_prep, 1.0),
        passive: Pool::new(passive, 1.0),
        superlative: Pool::fixed(&["جيدا", "ناعما", "تماما", "خفيفا"]),
        noun: Pool::new(noun, 1.0),
    }
}

struct Builder {
    tokens: Vec<String>,
    tags: Vec<String>,
    states: Vec<IngState>,
}

impl Builder {
    fn push(&mut self, token: String, tag: &str, state: IngState) {
        self.tokens.push(token);
        self.tags.push(tag.to_string());
        self.states.push(state);
    }
}

fn quantity(b: &mut Builder, p: &Pools, rng: &mut ChaCha8Rng) {
    match rng.random_range(0..4) {
        0 | 1 => {
            b.push(p.number.draw(rng), "B", IngState::OUTSIDE);
            b.push(p.unit.draw(rng), "I", IngState::OUTSIDE);
        }
        2 => b.push(p.quantity.draw(rng), "C", IngState::OUTSIDE),
        _ => b.push(p.number.draw(rng), "B", IngState::OUTSIDE),
    }
}

fn ingredient(b: &mut Builder, p: &Pools, rng: &mut ChaCha8Rng) {
    match rng.random_range(0..10) {
        0..=3 => b.push(p.ingredient.draw(rng), "D", IngState::START),
        4..=6 => {
            b.push(p.ingredient.draw(rng), "E", IngState::START);
            b.push(p.adjective.draw(rng), "F", IngState::CONTINUATION);
            if rng.random_bool(0.06) {
                b.push(p.adjective.draw(rng), "F", IngState::THIRD);
            }
        }
        7 => b.push(p.ambiguous.draw(rng), "C", IngState::START),
        _ => b.push(p.definite.draw(rng), "C", IngState::START),
    }
}

fn modifier(b: &mut Builder, p: &Pools, rng: &mut ChaCha8Rng) {
    match rng.random_range(0..6) {
        0 => b.push(p.passive.draw(rng), "K", IngState::OUTSIDE),
        1 => {
            b.push(p.passive.draw(rng), "K", IngState::OUTSIDE);
            b.push(p.superlative.draw(rng), "L", IngState::OUTSIDE);
        }
        2 => {
            b.push(p.noun.draw(rng), "A", IngState::OUTSIDE);
            b.push(p.preposition.draw(rng), "G", IngState::OUTSIDE);
            b.push(p.after_prep.draw(rng), "H", IngState::OUTSIDE);
        }
        _ => {
            b.push(p.preposition.draw(rng), "G", IngState::OUTSIDE);
            let noun = if rng.random_bool(0.5) { p.ambiguous.draw(rng) } else { p.after_prep.draw(rng) };
            b.push(noun, "H", IngState::OUTSIDE);
            if rng.random_bool(0.3) {
                b.push(p.adjective.draw(rng), "F", IngState::OUTSIDE);
            }
        }
    }
}

fn sentence(p: &Pools, rng: &mut ChaCha8Rng) -> AnnotatedSentence {
    let mut b = Builder { tokens: Vec::new(), tags: Vec::new(), states: Vec::new() };
    if rng.random_bool(0.7) {
        quantity(&mut b, p, rng);
    }
    ingredient(&mut b, p, rng);
    for _ in 0..rng.random_range(0..=2) {
        let (conj, tag) = if rng.random_bool(0.8) { ("و", "J") } else { ("أو", "M") };
        b.push(conj.to_string(), tag, IngState::OUTSIDE);
        if rng.random_bool(0.3) {
            quantity(&mut b, p, rng);
        }
        ingredient(&mut b, p, rng);
    }
    if rng.random_bool(0.6) {
        modifier(&mut b, p, rng);
    }
    b.push(".".to_string(), ".", IngState::OUTSIDE);
    AnnotatedSentence::new(b.tokens, b.tags, b.states).expect("generated sentences are well formed")
}

/// `sentences` generated sentences; the same seed always yields the same corpus.
pub fn synthesize(sentences: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = pools(&mut rng);
    let all = (0..sentences.max(1)).map(|_| sentence(&p, &mut rng)).collect();
    Corpus::from_sentences(all).expect("non-empty corpus")
}

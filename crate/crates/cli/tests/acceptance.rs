//! Acceptance suite: one PASS / FAIL / NOT VERIFIED line per criterion on stderr.
//!
//! Criteria 5-7 need the published 1973-sentence corpus. Point
//! `INGREDIENT_HMM_PUBLISHED_CORPUS` at it to run the absolute checks; without it
//! criteria 5 and 7 run their synthetic replacements on
//! `data/synthetic_corpus.tsv` and criterion 6 is reported as not verified.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ingredient_hmm::synth::synthesize;
use ingredient_hmm_core::testkit::{
    random_feature, random_first_order, random_second_order, random_tags, random_tokens,
};
use ingredient_hmm_core::{
    brute_force_decode, build_prefix_table, closed_test, cross_validate, estimate_feature_conditioned,
    estimate_first_order, estimate_second_order, lambda_sweep, parse_corpus, viterbi_feature_conditioned,
    viterbi_first_order, viterbi_second_order, CondTable, Corpus, DecodeConfig, DecodeRequest, DecodeResult,
    EstimateOptions, Family, Field, Lexicon, ModelRef, PipelineConfig, PrefixTable, Result, Space, TagCondition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PUBLISHED_CORPUS_VAR: &str = "INGREDIENT_HMM_PUBLISHED_CORPUS";

struct Outcome {
    pass: bool,
    /// Ran without failing but could not check what the criterion asks for.
    unverified: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, unverified: false, detail }
    }
}

fn report(n: usize, name: &str, o: &Outcome) {
    let verdict = match (o.pass, o.unverified) {
        (false, _) => "FAIL",
        (true, true) => "NOT VERIFIED",
        (true, false) => "PASS",
    };
    writeln!(std::io::stderr(), "[acceptance {n}] {verdict} {name}: {}", o.detail).unwrap();
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn synthetic_corpus() -> Corpus {
    let text = std::fs::read_to_string(workspace_root().join("data/synthetic_corpus.tsv")).unwrap();
    parse_corpus(&text).unwrap()
}

fn published_corpus() -> Option<Corpus> {
    let path = std::env::var_os(PUBLISHED_CORPUS_VAR)?;
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    Some(parse_corpus(&text).unwrap())
}

fn same(a: &Result<DecodeResult>, b: &Result<DecodeResult>) -> bool {
    match (a, b) {
        (Ok(a), Ok(b)) => a.states == b.states && a.score.to_bits() == b.score.to_bits(),
        (Err(a), Err(b)) => a == b,
        _ => false,
    }
}

fn random_config(rng: &mut ChaCha8Rng) -> DecodeConfig {
    DecodeConfig {
        lambda: [1.0, 1.5, 2.0, 4.0, 9.0][rng.random_range(0..5)],
        space: if rng.random_bool(0.5) { Space::Probability } else { Space::Log },
        lambda_on_oov: rng.random_bool(0.3),
        fallback: false,
        ..DecodeConfig::default()
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut mismatches, mut undecodable) = ([0usize; 3], 0);
    for _ in 0..500 {
        let (k, m, len) = (rng.random_range(1..=5), rng.random_range(1..=12), rng.random_range(1..=6));
        let sparsity = [0.0, 0.2, 0.5][rng.random_range(0..3)];

        let cfg = random_config(&mut rng);
        let model = random_first_order(&mut rng, 4, m, sparsity);
        let obs = random_tokens(&mut rng, &model.vocab, len, 0.1);
        let req = DecodeRequest::new(&obs, cfg);
        let v = viterbi_first_order(&model, &req);
        undecodable += v.is_err() as usize;
        mismatches[0] += !same(&v, &brute_force_decode(ModelRef::First(&model), &req)) as usize;

        let cfg = random_config(&mut rng);
        let model = random_second_order(&mut rng, 4, m, sparsity);
        let obs = random_tokens(&mut rng, &model.vocab, len, 0.1);
        let req = DecodeRequest::new(&obs, cfg);
        let v = viterbi_second_order(&model, &req);
        undecodable += v.is_err() as usize;
        mismatches[1] += !same(&v, &brute_force_decode(ModelRef::Second(&model), &req)) as usize;

        let cfg = random_config(&mut rng);
        let model = random_feature(&mut rng, 4, k, m, sparsity);
        let obs = random_tokens(&mut rng, &model.vocab, len, 0.1);
        let tags = random_tags(&mut rng, &model.tags, len);
        let req = DecodeRequest::new(&obs, cfg).with_tags(&tags);
        let v = viterbi_feature_conditioned(&model, &req);
        undecodable += v.is_err() as usize;
        mismatches[2] += !same(&v, &brute_force_decode(ModelRef::Feature(&model), &req)) as usize;
    }
    let elapsed = start.elapsed();
    Outcome {
        unverified: false,
        pass: mismatches == [0; 3] && elapsed < Duration::from_secs(30),
        detail: format!(
            "3x500 instances, mismatches first/second/feature = {mismatches:?}, {undecodable} undecodable (errors compared), {:.2}s (limit 30s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn normalized(t: &CondTable) -> bool {
    (0..t.rows()).all(|r| {
        if t.row_total(r) == 0 {
            t.row(r).iter().all(|&p| p == 0.0)
        } else {
            (t.row_sum(r) - 1.0).abs() <= 1e-9
        }
    })
}

fn mass_preserved(emit: &CondTable, prefix: &PrefixTable, vocab: &Lexicon) -> bool {
    let rebuilt = build_prefix_table(emit, vocab);
    rebuilt == *prefix && (0..emit.rows()).all(|r| (prefix.row(r).iter().sum::<f64>() - emit.row_sum(r)).abs() <= 1e-12)
}

fn normalization_suite() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut tables = 0;
    let opts = EstimateOptions::default();
    for seed in 0..100u64 {
        let corpus = synthesize(5 + (seed as usize * 7) % 60, seed);
        for (obs, state) in
            [(Field::Token, Field::IngState), (Field::Token, Field::PosLabel), (Field::PosLabel, Field::IngState)]
        {
            let m = estimate_first_order(&corpus, obs, state, opts).unwrap();
            tables += 4;
            if ![&m.pi, &m.trans, &m.emit].iter().all(|t| normalized(t))
                || !mass_preserved(&m.emit, &m.prefix_emit, &m.vocab)
            {
                failures.push(format!("seed {seed} first {obs:?}->{state:?}"));
            }
            let m = estimate_second_order(&corpus, obs, state, opts).unwrap();
            tables += 7;
            if ![&m.pi, &m.trans2, &m.trans3, &m.emit1, &m.emit2].iter().all(|t| normalized(t))
                || !mass_preserved(&m.emit1, &m.prefix_emit1, &m.vocab)
                || !mass_preserved(&m.emit2, &m.prefix_emit2, &m.vocab)
            {
                failures.push(format!("seed {seed} second {obs:?}->{state:?}"));
            }
        }
        let f = estimate_feature_conditioned(&corpus, opts).unwrap();
        tables += 4;
        if ![&f.pi, &f.trans, &f.emit].iter().all(|t| normalized(t))
            || !mass_preserved(&f.emit, &f.prefix_emit, &f.vocab)
        {
            failures.push(format!("seed {seed} feature"));
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        unverified: false,
        pass: failures.is_empty() && elapsed < Duration::from_secs(10),
        detail: format!(
            "100 corpora, {tables} tables, failures {failures:?}, {:.2}s (limit 10s)",
            elapsed.as_secs_f64()
        ),
    }
}

fn mini_corpus_exactness() -> Outcome {
    let corpus = parse_corpus("2\tB\t0\nالبرتقال\tC\t1\nأو\tM\t0\nالاكليل\tC\t1\n").unwrap();
    let m = estimate_first_order(&corpus, Field::Token, Field::PosLabel, EstimateOptions::default()).unwrap();
    let s = |name: &str| m.states.iter().position(|x| x == name).unwrap();
    let w = |word: &str| m.vocab.index_of(word).unwrap();
    let p = |prefix: &str| m.vocab.prefix_index_of(prefix).unwrap();
    let c = build_prefix_table(&m.emit, &m.vocab);
    let checks = [
        ("emit[C,البرتقال]", m.emit.prob(s("C"), w("البرتقال")), 0.5),
        ("emit[C,الاكليل]", m.emit.prob(s("C"), w("الاكليل")), 0.5),
        ("emit[B,2]", m.emit.prob(s("B"), w("2")), 1.0),
        ("emit[M,أو]", m.emit.prob(s("M"), w("أو")), 1.0),
        ("C[C,ال]", c.prob(s("C"), p("ال")), 1.0),
        ("C[B,2]", c.prob(s("B"), p("2")), 1.0),
        ("C[M,أو]", c.prob(s("M"), p("أو")), 1.0),
        ("C[C,2]", c.prob(s("C"), p("2")), 0.0),
    ];
    let wrong: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(name, got, want)| format!("{name}={got} (want {want})"))
        .collect();
    Outcome {
        unverified: false,
        pass: wrong.is_empty() && c.cols() == 3,
        detail: if wrong.is_empty() {
            format!("{} exact entries, 3 prefix columns", checks.len())
        } else {
            wrong.join(", ")
        },
    }
}

fn log_space_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut disagree, mut near_ties, mut lambda_sensitive) = (0, 0, 0);
    let plain = DecodeConfig { fallback: false, ..DecodeConfig::plain() };
    for i in 0..500 {
        let (k, m, len) = (rng.random_range(1..=5), rng.random_range(1..=12), rng.random_range(1..=6));
        let sparsity = [0.0, 0.3][i % 2];
        let results: [(Result<DecodeResult>, Result<DecodeResult>); 3] = {
            let first = random_first_order(&mut rng, 4, m, sparsity);
            let obs = random_tokens(&mut rng, &first.vocab, len, 0.0);
            let second = random_second_order(&mut rng, 4, m, sparsity);
            let obs2 = random_tokens(&mut rng, &second.vocab, len, 0.0);
            let feat = random_feature(&mut rng, 4, k, m, sparsity);
            let obs3 = random_tokens(&mut rng, &feat.vocab, len, 0.0);
            let tags = random_tags(&mut rng, &feat.tags, len);
            let run = |space: Space| {
                let cfg = plain.with_space(space);
                (
                    viterbi_first_order(&first, &DecodeRequest::new(&obs, cfg)),
                    viterbi_second_order(&second, &DecodeRequest::new(&obs2, cfg)),
                    viterbi_feature_conditioned(&feat, &DecodeRequest::new(&obs3, cfg).with_tags(&tags)),
                )
            };
            let (p, l) = (run(Space::Probability), run(Space::Log));
            [(p.0, l.0), (p.1, l.1), (p.2, l.2)]
        };
        for (p, l) in results {
            match (p, l) {
                (Ok(p), Ok(l)) => {
                    let close = (p.score.ln() - l.score).abs() <= 1e-9 * l.score.abs().max(1.0);
                    if !close {
                        disagree += 1;
                    } else if p.states != l.states {
                        near_ties += 1;
                    }
                }
                (Err(a), Err(b)) if a == b => {}
                _ => disagree += 1,
            }
        }

        // every observation unknown: lambda must not matter
        let feat = random_feature(&mut rng, 4, k, m, sparsity);
        let obs: Vec<String> = (0..len)
            .map(|j| format!("{}#oov{j}", feat.vocab.prefixes()[rng.random_range(0..feat.vocab.prefixes().len())]))
            .collect();
        let tags = random_tags(&mut rng, &feat.tags, len);
        let decode = |lambda: f64| {
            let cfg = DecodeConfig { lambda, fallback: true, lambda_on_oov: false, ..DecodeConfig::default() };
            viterbi_feature_conditioned(&feat, &DecodeRequest::new(&obs, cfg).with_tags(&tags))
        };
        let base = decode(1.0);
        if [2.0, 4.0, 9.0].iter().any(|&l| !same(&base, &decode(l))) {
            lambda_sensitive += 1;
        }
    }
    Outcome {
        unverified: false,
        pass: disagree == 0 && lambda_sensitive == 0,
        detail: format!(
            "1500 log/prob pairs: {disagree} disagreements, {near_ties} equal-score path differences; 500 all-OOV sentences: {lambda_sensitive} changed with lambda; {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    }
}

fn closed_test_ordering(corpus: &Corpus, label: &str, published: bool) -> Outcome {
    let cfg = PipelineConfig::default();
    let first = closed_test(corpus, Family::FirstOrder { obs: Field::Token }, &cfg).unwrap();
    let second = closed_test(corpus, Family::SecondOrder { obs: Field::Token }, &cfg).unwrap();
    let ie = closed_test(corpus, Family::Extractor(TagCondition::Oracle), &cfg).unwrap();
    let ordered = ie.token_accuracy > first.token_accuracy && ie.token_accuracy > second.token_accuracy;
    let mut detail = format!(
        "{label}: first-order {:.2}%, second-order {:.2}%, extractor oracle lambda=4 {:.2}%",
        100.0 * first.token_accuracy,
        100.0 * second.token_accuracy,
        100.0 * ie.token_accuracy
    );
    let mut pass = ordered;
    if published {
        let near = |x: f64, target: f64| (100.0 * x - target).abs() <= 1.0;
        pass &= near(first.token_accuracy, 96.64) && near(ie.token_accuracy, 98.44);
        detail.push_str(" (targets 96.64 / 98.44 +-1.0, strict ordering)");
    } else {
        detail.push_str("; strict ordering only, published corpus not available");
    }
    Outcome::new(pass, detail)
}

fn cross_validation(published: Option<&Corpus>) -> Outcome {
    let cfg = PipelineConfig::default();
    match published {
        Some(corpus) => {
            let start = Instant::now();
            let first = cross_validate(corpus, 10, 1, Family::FirstOrder { obs: Field::Token }, &cfg).unwrap().average;
            let ie = cross_validate(corpus, 10, 1, Family::Extractor(TagCondition::Oracle), &cfg).unwrap().average;
            let elapsed = start.elapsed();
            let near = |x: f64, target: f64| (100.0 * x - target).abs() <= 1.5;
            let unk = first.unknown_accuracy.unwrap_or(f64::NAN);
            Outcome {
        unverified: false,
        pass:         near(first.accuracy, 94.61)
                    && near(unk, 66.92)
                    && near(first.unknown_rate, 10.63)
                    && near(ie.accuracy, 95.04)
                    && elapsed < Duration::from_secs(120),
                detail: format!(
                    "first-order acc {:.2}% unk {:.2}% oov {:.2}%, extractor oracle {:.2}% (targets 94.61/66.92/10.63/95.04 +-1.5), {:.1}s",
                    100.0 * first.accuracy,
                    100.0 * unk,
                    100.0 * first.unknown_rate,
                    100.0 * ie.accuracy,
                    elapsed.as_secs_f64()
                ),
            }
        }
        None => {
            let start = Instant::now();
            let corpus = synthetic_corpus();
            let first = cross_validate(&corpus, 10, 1, Family::FirstOrder { obs: Field::Token }, &cfg).unwrap();
            let ie = cross_validate(&corpus, 10, 1, Family::Extractor(TagCondition::Oracle), &cfg).unwrap();
            let covered = first.folds.iter().map(|f| f.total).sum::<usize>() == corpus.token_count();
            Outcome {
        unverified: true,
        pass:         covered,
                detail: format!(
                    "published averages not checked (set {PUBLISHED_CORPUS_VAR}); synthetic 10-fold run: first-order {:.2}% (unk {:.2}%, oov {:.2}%), extractor oracle {:.2}%, {:.1}s",
                    100.0 * first.average.accuracy,
                    100.0 * first.average.unknown_accuracy.unwrap_or(f64::NAN),
                    100.0 * first.average.unknown_rate,
                    100.0 * ie.average.accuracy,
                    start.elapsed().as_secs_f64()
                ),
            }
        }
    }
}

fn sweep_shape(corpus: &Corpus, published: bool) -> Outcome {
    let lambdas: Vec<f64> = (1..=9).map(f64::from).collect();
    let rows = lambda_sweep(corpus, &lambdas, &[TagCondition::Oracle], &PipelineConfig::default()).unwrap();
    let acc: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
    // first index of the maximum
    let argmax = (0..acc.len()).fold(0, |best, i| if acc[i] > acc[best] { i } else { best });
    let curve = acc.iter().map(|a| format!("{:.4}", a)).collect::<Vec<_>>().join(" ");
    if published {
        let gain = 100.0 * (acc[3] - acc[0]);
        let best = lambdas[argmax];
        Outcome {
            unverified: false,
            pass: gain >= 4.0 && (3.0..=5.0).contains(&best),
            detail: format!("oracle accuracy by lambda 1..9: {curve}; lambda4-lambda1 = {gain:.2} pts (>= 4), argmax lambda {best} (in [3,5])"),
        }
    } else {
        let monotone = acc[..=argmax].windows(2).all(|w| w[1] >= w[0]);
        Outcome {
            unverified: false,
            pass: monotone,
            detail: format!(
                "synthetic corpus, oracle accuracy by lambda 1..9: {curve}; non-decreasing up to argmax lambda {}",
                lambdas[argmax]
            ),
        }
    }
}

fn cli(dir: &Path, args: &[&str]) -> (bool, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ingredient-hmm")).current_dir(dir).args(args).output().unwrap();
    (out.status.success(), out.stdout)
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("tokens.txt"), "رشة\nملح\nو\nفلفل\nاسود\n\n2\nنصف\nزيت\n").unwrap();
    let corpus = workspace_root().join("data/synthetic_corpus.tsv");
    std::fs::copy(&corpus, dir.join("corpus.tsv")).unwrap();
    std::fs::write(dir.join("heldout.tsv"), synthesize(20, 99).to_text()).unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["synth", "--sentences", "40", "--seed", "3", "--out", "synth/small.tsv"],
        vec!["stats", "--corpus", "corpus.tsv", "--against", "synth/small.tsv", "--out-dir", "stats"],
        vec!["train", "--corpus", "corpus.tsv", "--family", "first", "--out", "models/first.model"],
        vec!["train", "--corpus", "corpus.tsv", "--family", "second", "--obs", "pos", "--out", "models/second.model"],
        vec!["train", "--corpus", "corpus.tsv", "--family", "feature", "--out", "models/feature.model"],
        vec!["train", "--corpus", "corpus.tsv", "--family", "pipeline", "--out", "pipeline/pipeline.model"],
        vec!["tag", "--model", "models/first.model", "--input", "tokens.txt", "--out", "tagged/first.tsv"],
        vec!["extract", "--model", "pipeline/pipeline.model", "--input", "tokens.txt", "--out-dir", "extract_predict"],
        vec![
            "extract",
            "--model",
            "pipeline/pipeline.model",
            "--input",
            "heldout.tsv",
            "--tags",
            "oracle",
            "--lambda",
            "1",
            "--out-dir",
            "extract_oracle",
        ],
        vec!["eval", "--corpus", "corpus.tsv", "--degraded-target", "0.9", "--out-dir", "eval"],
        vec!["crossval", "--corpus", "corpus.tsv", "--family", "first", "--out-dir", "crossval"],
        vec!["sweep", "--corpus", "corpus.tsv", "--conditions", "oracle,predicted,degraded:0.9", "--out-dir", "sweep"],
    ];
    let run_all = || -> (Vec<(bool, Vec<u8>)>, Vec<(PathBuf, Vec<u8>)>) {
        let outputs = commands.iter().map(|c| cli(dir, c)).collect();
        (outputs, snapshot(dir))
    };
    let (out1, files1) = run_all();
    let (out2, files2) = run_all();
    let failed: Vec<&str> = commands.iter().zip(&out1).filter(|(_, o)| !o.0).map(|(c, _)| c[0]).collect();
    let differing: Vec<String> =
        files1.iter().zip(&files2).filter(|(a, b)| a != b).map(|(a, _)| a.0.display().to_string()).collect();
    Outcome {
        unverified: false,
        pass: failed.is_empty() && out1 == out2 && files1.len() == files2.len() && differing.is_empty(),
        detail: format!(
            "{} commands run twice, {} output files compared; failed {failed:?}, differing {differing:?}, stdout identical: {}",
            commands.len(),
            files1.len(),
            out1 == out2
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let published = published_corpus();
    let synthetic = synthetic_corpus();
    let results = [
        (1, "oracle equivalence", oracle_equivalence()),
        (2, "normalization suite", normalization_suite()),
        (3, "mini-corpus exactness", mini_corpus_exactness()),
        (4, "log-space consistency", log_space_consistency()),
        (
            5,
            "closed-test reproduction",
            match &published {
                Some(c) => closed_test_ordering(c, "published corpus", true),
                None => closed_test_ordering(&synthetic, "synthetic corpus", false),
            },
        ),
        (6, "cross-validation reproduction", cross_validation(published.as_ref())),
        (
            7,
            "lambda sweep shape",
            match &published {
                Some(c) => sweep_shape(c, true),
                None => sweep_shape(&synthetic, false),
            },
        ),
        (8, "CLI determinism", cli_determinism()),
    ];
    for (n, name, outcome) in &results {
        report(*n, name, outcome);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

use std::path::Path;
use std::process::{Command, Output};

use ingredient_hmm::commands::parse_lambdas;
use ingredient_hmm::exit;
use ingredient_hmm::model_file::{read_model, write_model, ModelArtifact, ModelFileError};
use ingredient_hmm::synth::synthesize;
use ingredient_hmm_core::{
    estimate_feature_conditioned, estimate_first_order, estimate_second_order, train_pipeline,
    EstimateOptions, Field, Layer1Order, PipelineConfig,
};

const TABLE1: &str = "رشة\tC\t0\nملح\tD\t1\nو\tJ\t0\nفلفل\tE\t1\nاسود\tF\t2\n.\t.\t0\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ingredient-hmm")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn table1_sentence_extracts_both_ingredients() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("t1.tsv"), TABLE1).unwrap();
    let o = run(d, &["train", "--corpus", "t1.tsv", "--family", "pipeline", "--out", "m/p.model"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.contains("N=3 K=6"), "{summary}");

    for tags in ["oracle", "predict"] {
        let out = format!("x_{tags}");
        let o = run(d, &["extract", "--model", "m/p.model", "--input", "t1.tsv", "--tags", tags, "--out-dir", &out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let spans = std::fs::read_to_string(d.join(&out).join("spans.csv")).unwrap();
        assert_eq!(spans, "sentence,start,end,text,flags\n1,1,1,ملح,\n1,3,4,فلفل اسود,\n");
        let tagged = std::fs::read_to_string(d.join(&out).join("extracted.tsv")).unwrap();
        assert_eq!(tagged.lines().nth(4).unwrap(), "اسود\tF\t2\tF\t2");
        assert!(d.join(&out).join("run_config.txt").exists());
    }
}

#[test]
fn oracle_tags_from_a_separate_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("t1.tsv"), TABLE1).unwrap();
    std::fs::write(d.join("tokens.txt"), "رشة\nملح\nو\nفلفل\nاسود\n.\n").unwrap();
    std::fs::write(d.join("tags.txt"), "C\nD\nJ\nE\nF\n.\n").unwrap();
    assert_eq!(code(&run(d, &["train", "--corpus", "t1.tsv", "--out", "p.model"])), 0);
    let o = run(d, &["extract", "--model", "p.model", "--input", "tokens.txt", "--tags", "oracle:tags.txt", "--out-dir", "x"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let tagged = std::fs::read_to_string(d.join("x/extracted.tsv")).unwrap();
    assert_eq!(tagged.lines().next().unwrap(), "رشة\t_\t_\tC\t0");
    let o = run(d, &["extract", "--model", "p.model", "--input", "tokens.txt", "--tags", "oracle", "--out-dir", "y"]);
    assert_eq!(code(&o), exit::CONFIG);
}

#[test]
fn exit_codes_by_failure_class() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("empty.tsv"), "").unwrap();
    std::fs::write(d.join("bad.tsv"), "ملح\tD\n").unwrap();
    std::fs::write(d.join("t1.tsv"), TABLE1).unwrap();

    let o = run(d, &["train", "--corpus", "empty.tsv", "--out", "m"]);
    assert_eq!(code(&o), exit::PARSE);
    assert!(stderr(&o).contains("no sentences"));
    let o = run(d, &["train", "--corpus", "bad.tsv", "--out", "m"]);
    assert_eq!(code(&o), exit::PARSE);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
    assert_eq!(code(&run(d, &["train", "--corpus", "missing.tsv", "--out", "m"])), exit::IO);
    assert_eq!(code(&run(d, &["extract", "--model", "missing.model", "--input", "t1.tsv", "--out-dir", "x"])), exit::IO);
    assert_eq!(code(&run(d, &["train", "--corpus", "t1.tsv", "--lambda", "0.5", "--out", "m"])), exit::CONFIG);
    assert_eq!(code(&run(d, &["crossval", "--corpus", "t1.tsv", "--folds", "10", "--out-dir", "cv"])), exit::CONFIG);
    assert_eq!(code(&run(d, &["train", "--corpus", "t1.tsv", "--family", "first", "--obs", "token", "--state", "pos", "--out", "first.model"])), 0);
    assert_eq!(code(&run(d, &["extract", "--model", "first.model", "--input", "t1.tsv", "--out-dir", "x"])), exit::CONFIG);
}

#[test]
fn unknown_token_with_error_policy_names_token_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("t1.tsv"), TABLE1).unwrap();
    std::fs::write(d.join("input.txt"), "# recipe 1\nملح\nو\n\nفلفل\nزعتر\n").unwrap();
    assert_eq!(code(&run(d, &["train", "--corpus", "t1.tsv", "--out", "p.model"])), 0);
    let o = run(d, &["extract", "--model", "p.model", "--input", "input.txt", "--oov-policy", "error", "--out-dir", "x"]);
    assert_eq!(code(&o), exit::DECODE);
    let err = stderr(&o);
    assert!(err.contains("input.txt:6") && err.contains("زعتر"), "{err}");
    let o = run(d, &["extract", "--model", "p.model", "--input", "input.txt", "--out-dir", "x"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn model_files_round_trip_bit_exactly() {
    let corpus = synthesize(80, 5);
    let opts = EstimateOptions { smoothing: 0.25 };
    let models = [
        ModelArtifact::First(estimate_first_order(&corpus, Field::Token, Field::IngState, opts).unwrap()),
        ModelArtifact::Second(estimate_second_order(&corpus, Field::PosLabel, Field::IngState, opts).unwrap()),
        ModelArtifact::Feature(estimate_feature_conditioned(&corpus, EstimateOptions::default()).unwrap()),
        ModelArtifact::Pipeline(
            train_pipeline(&corpus, PipelineConfig { layer1_order: Layer1Order::Second, lambda: 2.5, ..Default::default() })
                .unwrap(),
        ),
    ];
    for model in models {
        let text = write_model(&model);
        let back = read_model(&text).unwrap();
        assert_eq!(back, model, "{}", model.family());
        assert_eq!(write_model(&back), text);
    }
}

fn pipeline_text() -> String {
    let corpus = synthesize(10, 1);
    write_model(&ModelArtifact::Pipeline(train_pipeline(&corpus, PipelineConfig::default()).unwrap()))
}

#[test]
fn damaged_model_files_are_told_apart() {
    let text = pipeline_text();

    let v2 = text.replacen("ingredient-hmm model 1", "ingredient-hmm model 2", 1);
    assert!(matches!(read_model(&v2), Err(ModelFileError::Version { found }) if found == "2"));

    let cut: String = text.lines().take(40).map(|l| format!("{l}\n")).collect();
    assert!(matches!(read_model(&cut), Err(ModelFileError::Truncated { .. })));

    let dims_line = text.lines().find(|l| l.starts_with("dims ")).unwrap();
    let fields: Vec<&str> = dims_line.split(' ').collect();
    let n: usize = fields[1].parse().unwrap();
    let edited = text.replacen(dims_line, &format!("dims {} {} {} {}", n + 1, fields[2], fields[3], fields[4]), 1);
    assert!(matches!(
        read_model(&edited),
        Err(ModelFileError::DimensionMismatch { expected, found, .. }) if expected == n + 1 && found == n
    ));

    assert!(matches!(read_model("hello\n"), Err(ModelFileError::Syntax { line: 1, .. })));
    let extra = format!("{text}garbage\n");
    assert!(matches!(read_model(&extra), Err(ModelFileError::Syntax { .. })));
}

#[test]
fn dimension_edit_on_disk_is_a_parse_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("t1.tsv"), TABLE1).unwrap();
    assert_eq!(code(&run(d, &["train", "--corpus", "t1.tsv", "--out", "p.model"])), 0);
    let text = std::fs::read_to_string(d.join("p.model")).unwrap();
    std::fs::write(d.join("p.model"), text.replacen("dims 6 0 6 6", "dims 7 0 6 6", 1)).unwrap();
    let o = run(d, &["extract", "--model", "p.model", "--input", "t1.tsv", "--out-dir", "x"]);
    assert_eq!(code(&o), exit::PARSE);
    assert!(stderr(&o).contains("header says 7, found 6"), "{}", stderr(&o));
}

#[test]
fn retraining_gives_identical_model_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("c.tsv"), synthesize(50, 8).to_text()).unwrap();
    assert_eq!(code(&run(d, &["train", "--corpus", "c.tsv", "--out", "a.model"])), 0);
    assert_eq!(code(&run(d, &["train", "--corpus", "c.tsv", "--out", "b.model"])), 0);
    assert_eq!(std::fs::read(d.join("a.model")).unwrap(), std::fs::read(d.join("b.model")).unwrap());
}

#[test]
fn reports_have_expected_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("c.tsv"), synthesize(60, 2).to_text()).unwrap();

    assert_eq!(code(&run(d, &["sweep", "--corpus", "c.tsv", "--conditions", "oracle", "--out-dir", "s"])), 0);
    let sweep = std::fs::read_to_string(d.join("s/sweep.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "lambda,condition,accuracy,f1");
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with("1.0000,oracle,"));

    assert_eq!(code(&run(d, &["crossval", "--corpus", "c.tsv", "--folds", "5", "--out-dir", "cv"])), 0);
    let cv = std::fs::read_to_string(d.join("cv/crossval.csv")).unwrap();
    let lines: Vec<&str> = cv.lines().collect();
    assert_eq!(lines[0], "fold,accuracy,f1,unknown_accuracy,known_accuracy,unknown_count,unknown_rate");
    assert_eq!(lines.len(), 7);
    assert!(lines[6].starts_with("Avg,"));

    assert_eq!(code(&run(d, &["eval", "--corpus", "c.tsv", "--out-dir", "ev"])), 0);
    let ev = std::fs::read_to_string(d.join("ev/closed_test.csv")).unwrap();
    let models: Vec<&str> = ev.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        models,
        ["first_order_tokens", "second_order_tokens", "first_order_tags", "second_order_tags", "extractor_oracle", "extractor_predicted"]
    );
    let config = std::fs::read_to_string(d.join("ev/run_config.txt")).unwrap();
    assert!(config.starts_with("command = eval\n") && config.contains("lambda = 4\n"));

    let o = run(d, &["stats", "--corpus", "c.tsv"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("sentences     60"));
}

#[test]
fn one_state_corpus_sweeps_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("c.tsv"), "أضف\tV\t0\nالماء\tC\t0\n\nحرك\tV\t0\n").unwrap();
    assert_eq!(code(&run(d, &["sweep", "--corpus", "c.tsv", "--conditions", "oracle", "--out-dir", "s"])), 0);
    let sweep = std::fs::read_to_string(d.join("s/sweep.csv")).unwrap();
    assert!(sweep.lines().skip(1).all(|l| l.ends_with(",1.0000,1.0000")), "{sweep}");
}

#[test]
fn lambda_lists() {
    assert_eq!(parse_lambdas("1..4").unwrap(), [1.0, 2.0, 3.0, 4.0]);
    assert_eq!(parse_lambdas("1, 2.5,4").unwrap(), [1.0, 2.5, 4.0]);
    assert!(parse_lambdas("4..1").is_err());
    assert!(parse_lambdas("a").is_err());
}

#[test]
fn synthetic_corpus_is_reproducible_and_shaped() {
    let a = synthesize(300, 2024);
    assert_eq!(a.to_text(), synthesize(300, 2024).to_text());
    assert_eq!(a.pos_tagset().len(), 14);
    assert_eq!(a.state_set().len(), 4);
    let shipped = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_corpus.tsv")).unwrap();
    assert_eq!(shipped, a.to_text());
}

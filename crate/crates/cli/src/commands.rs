//! Subcommand implementations. Each returns the summary printed on stdout.

use std::fmt::Write as _;
use std::path::Path;

use ingredient_hmm_core::{
    build_lexicon, closed_test, corpus_stats, cross_validate, estimate_feature_conditioned,
    estimate_first_order, estimate_second_order, extract_ingredients, lambda_sweep, oov_stats,
    viterbi_feature_conditioned, viterbi_first_order, viterbi_second_order, CondTable,
    DecodeRequest, DecodeResult, Error as CoreError, EstimateOptions, EvalReport, Family, Field,
    Layer1Model, Layer1Order, MetricsRow, PipelineConfig, TagCondition, TagSource,
};

use crate::cli::{
    Command, ConditionArg, CrossvalArgs, CvFamilyArg, DecodeArgs, EvalArgs, ExtractArgs, FamilyArg,
    ObsArg, OrderArg, StateArg, StatsArgs, SweepArgs, SynthArgs, TagArgs, TagsArg, TrainArgs,
};
use crate::error::{CliError, CliResult};
use crate::io::{
    fmt4, fmt4_opt, load_model, read_corpus, read_input, read_tag_file, save_model, write_csv,
    write_text, InputSentence, RunConfig,
};
use crate::model_file::ModelArtifact;
use crate::synth::synthesize;

pub fn run(command: &Command) -> CliResult<String> {
    match command {
        Command::Train(a) => train(a),
        Command::Tag(a) => tag(a),
        Command::Extract(a) => extract(a),
        Command::Eval(a) => eval(a),
        Command::Crossval(a) => crossval(a),
        Command::Sweep(a) => sweep(a),
        Command::Stats(a) => stats(a),
        Command::Synth(a) => synth(a),
    }
}

fn layer1_order(o: OrderArg) -> Layer1Order {
    match o {
        OrderArg::First => Layer1Order::First,
        OrderArg::Second => Layer1Order::Second,
    }
}

/// `base` with every decoder flag that was given applied on top.
fn apply_decode(base: PipelineConfig, d: &DecodeArgs) -> CliResult<PipelineConfig> {
    let mut c = base;
    if let Some(l) = d.lambda {
        c.lambda = l;
    }
    if let Some(s) = d.space {
        c.space = s.into();
    }
    if let Some(o) = d.oov_policy {
        c.oov_policy = o.into();
    }
    c.lambda_on_oov |= d.lambda_on_oov;
    c.fallback &= !d.no_fallback;
    c.layer2_decode().validate()?;
    Ok(c)
}

fn echo_config(rc: &mut RunConfig, c: &PipelineConfig) {
    rc.set("lambda", c.lambda)
        .set("space", c.space.name())
        .set("oov_policy", c.oov_policy.name())
        .set("lambda_on_oov", c.lambda_on_oov)
        .set("fallback", c.fallback)
        .set("layer1_order", format!("{:?}", c.layer1_order).to_lowercase())
        .set("smoothing", c.smoothing);
}

fn parent(path: &Path) -> &Path {
    path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn table_summary(out: &mut String, name: &str, t: &CondTable) {
    writeln!(out, "  {name:<8} {}x{}  zero rows: {}", t.rows(), t.cols(), t.zero_rows()).unwrap();
}

fn summarize(model: &ModelArtifact) -> String {
    let mut out = String::new();
    let first = |out: &mut String, label: &str, tables: &[(&str, &CondTable)], dims: String| {
        writeln!(out, "{label}: {dims}").unwrap();
        for (name, t) in tables {
            table_summary(out, name, t);
        }
    };
    match model {
        ModelArtifact::First(m) => first(
            &mut out,
            "first-order",
            &[("pi", &m.pi), ("trans", &m.trans), ("emit", &m.emit)],
            format!("N={} M={} prefixes={}", m.n_states(), m.vocab.len(), m.vocab.prefixes().len()),
        ),
        ModelArtifact::Second(m) => first(
            &mut out,
            "second-order",
            &[("pi", &m.pi), ("trans2", &m.trans2), ("trans3", &m.trans3), ("emit1", &m.emit1), ("emit2", &m.emit2)],
            format!("N={} M={} prefixes={}", m.n_states(), m.vocab.len(), m.vocab.prefixes().len()),
        ),
        ModelArtifact::Feature(m) => first(
            &mut out,
            "feature-conditioned",
            &[("pi", &m.pi), ("trans", &m.trans), ("emit", &m.emit)],
            format!("N={} K={} M={} prefixes={}", m.n_states(), m.n_tags(), m.vocab.len(), m.vocab.prefixes().len()),
        ),
        ModelArtifact::Pipeline(p) => {
            out.push_str(&summarize(&match &p.layer1 {
                Layer1Model::First(m) => ModelArtifact::First(m.clone()),
                Layer1Model::Second(m) => ModelArtifact::Second(m.clone()),
            }));
            out.push_str(&summarize(&ModelArtifact::Feature(p.layer2.clone())));
        }
    }
    out
}

pub fn train(a: &TrainArgs) -> CliResult<String> {
    if !(a.smoothing.is_finite() && a.smoothing >= 0.0) {
        return Err(CliError::Config(format!("smoothing must be a non-negative number, got {}", a.smoothing)));
    }
    let corpus = read_corpus(&a.corpus)?;
    let opts = EstimateOptions { smoothing: a.smoothing };
    let obs = match a.obs {
        ObsArg::Token => Field::Token,
        ObsArg::Pos => Field::PosLabel,
    };
    let state = match a.state {
        StateArg::Pos => Field::PosLabel,
        StateArg::IngState => Field::IngState,
    };
    let config = apply_decode(
        PipelineConfig { layer1_order: layer1_order(a.layer1_order), smoothing: a.smoothing, ..Default::default() },
        &a.decode,
    )?;
    let model = match a.family {
        FamilyArg::First => ModelArtifact::First(estimate_first_order(&corpus, obs, state, opts)?),
        FamilyArg::Second => ModelArtifact::Second(estimate_second_order(&corpus, obs, state, opts)?),
        FamilyArg::Feature => ModelArtifact::Feature(estimate_feature_conditioned(&corpus, opts)?),
        FamilyArg::Pipeline => ModelArtifact::Pipeline(ingredient_hmm_core::train_pipeline(&corpus, config)?),
    };
    save_model(&a.out, &model)?;
    let mut rc = RunConfig::new("train");
    rc.set("corpus", a.corpus.display())
        .set("family", model.family())
        .set("obs", obs.name())
        .set("state", state.name())
        .set("out", a.out.display());
    echo_config(&mut rc, &config);
    rc.write_into(parent(&a.out))?;
    Ok(format!(
        "trained {} model on {} sentences ({} tokens) -> {}\n{}",
        model.family(),
        corpus.len(),
        corpus.token_count(),
        a.out.display(),
        summarize(&model)
    ))
}

/// Attaches the input location to a decoding failure.
fn decode_error(path: &Path, index: usize, sentence: &InputSentence, e: CoreError) -> CliError {
    match e {
        CoreError::OutOfVocabulary { position, token } => CliError::OutOfVocabulary {
            path: path.into(),
            line: sentence.lines[position],
            sentence: index + 1,
            token,
        },
        source => CliError::Decode { path: path.into(), sentence: index + 1, source },
    }
}

pub fn tag(a: &TagArgs) -> CliResult<String> {
    let model = load_model(&a.model)?;
    let input = read_input(&a.input)?;
    let base = match &model {
        ModelArtifact::Pipeline(p) => p.config,
        ModelArtifact::Feature(_) => PipelineConfig::default(),
        _ => PipelineConfig { lambda: 1.0, ..Default::default() },
    };
    let config = apply_decode(base, &a.decode)?;
    let mut out = String::new();
    let mut tokens = 0;
    for (i, s) in input.iter().enumerate() {
        let decoded: Result<(DecodeResult, &[String]), CoreError> = match &model {
            ModelArtifact::First(m) => {
                let req = DecodeRequest::new(&s.tokens, config.layer2_decode());
                viterbi_first_order(m, &req).map(|d| (d, m.states.as_slice()))
            }
            ModelArtifact::Second(m) => {
                let req = DecodeRequest::new(&s.tokens, config.layer2_decode());
                viterbi_second_order(m, &req).map(|d| (d, m.states.as_slice()))
            }
            ModelArtifact::Feature(m) => {
                let tags = s.tags.as_deref().ok_or_else(|| {
                    CliError::Config(format!(
                        "{}:{}: feature models need a POS tag column",
                        a.input.display(),
                        s.lines[0]
                    ))
                })?;
                let req = DecodeRequest::new(&s.tokens, config.layer2_decode()).with_tags(tags);
                viterbi_feature_conditioned(m, &req).map(|d| (d, m.states.as_slice()))
            }
            ModelArtifact::Pipeline(p) => {
                let req = DecodeRequest::new(&s.tokens, config.layer1_decode());
                p.layer1.decode(&req).map(|d| (d, p.layer1.states()))
            }
        };
        let (decoded, labels) = decoded.map_err(|e| decode_error(&a.input, i, s, e))?;
        if i > 0 {
            out.push('\n');
        }
        for (token, &st) in s.tokens.iter().zip(&decoded.states) {
            writeln!(out, "{token}\t{}", labels[st]).unwrap();
        }
        tokens += s.tokens.len();
    }
    write_text(&a.out, &out)?;
    let mut rc = RunConfig::new("tag");
    rc.set("model", a.model.display())
        .set("family", model.family())
        .set("input", a.input.display())
        .set("out", a.out.display());
    echo_config(&mut rc, &config);
    rc.write_into(parent(&a.out))?;
    Ok(format!("tagged {} sentences ({tokens} tokens) -> {}\n", input.len(), a.out.display()))
}

pub fn extract(a: &ExtractArgs) -> CliResult<String> {
    let ModelArtifact::Pipeline(mut pipeline) = load_model(&a.model)? else {
        return Err(CliError::Config(format!("{}: extract needs a pipeline model", a.model.display())));
    };
    pipeline.config = apply_decode(pipeline.config, &a.decode)?;
    let input = read_input(&a.input)?;
    let oracle: Option<Vec<Vec<String>>> = match &a.tags {
        TagsArg::Predict => None,
        TagsArg::Oracle(Some(path)) => Some(read_tag_file(path, &input)?),
        TagsArg::Oracle(None) => Some(
            input
                .iter()
                .map(|s| {
                    s.tags.clone().ok_or_else(|| {
                        CliError::Config(format!(
                            "{}:{}: --tags oracle needs a POS tag column",
                            a.input.display(),
                            s.lines[0]
                        ))
                    })
                })
                .collect::<CliResult<_>>()?,
        ),
    };
    let mut tagged = String::new();
    let mut spans = Vec::new();
    let (mut unknown, mut malformed, mut fallbacks) = (0, 0, 0);
    for (i, s) in input.iter().enumerate() {
        let source = match &oracle {
            Some(tags) => TagSource::Oracle(&tags[i]),
            None => TagSource::Predicted,
        };
        let x = extract_ingredients(&pipeline, &s.tokens, source).map_err(|e| decode_error(&a.input, i, s, e))?;
        if i > 0 {
            tagged.push('\n');
        }
        for p in 0..s.tokens.len() {
            let gold_tag = s.tags.as_ref().map_or("_", |t| t[p].as_str());
            let gold_state = s.states.as_ref().map_or("_", |t| t[p].as_str());
            writeln!(tagged, "{}\t{gold_tag}\t{gold_state}\t{}\t{}", s.tokens[p], x.tags[p], x.states[p]).unwrap();
        }
        for span in &x.spans {
            spans.push(vec![
                (i + 1).to_string(),
                span.start.to_string(),
                span.end.to_string(),
                span.text.clone(),
                span.kind.flag().to_string(),
            ]);
        }
        unknown += x.diagnostics.layer2_oov.iter().filter(|&&u| u).count();
        malformed += x.diagnostics.malformed_spans;
        fallbacks += (x.diagnostics.layer1_fallback || x.diagnostics.layer2_fallback) as usize;
    }
    write_text(&a.out_dir.join("extracted.tsv"), &tagged)?;
    write_csv(&a.out_dir.join("spans.csv"), &["sentence", "start", "end", "text", "flags"], &spans)?;
    let mut rc = RunConfig::new("extract");
    rc.set("model", a.model.display()).set("input", a.input.display()).set(
        "tags",
        match &a.tags {
            TagsArg::Predict => "predict".to_string(),
            TagsArg::Oracle(None) => "oracle".to_string(),
            TagsArg::Oracle(Some(p)) => format!("oracle:{}", p.display()),
        },
    );
    echo_config(&mut rc, &pipeline.config);
    rc.write_into(&a.out_dir)?;
    Ok(format!(
        "{} sentences, {} spans, {unknown} unknown tokens, {malformed} malformed spans, {fallbacks} fallback decodes -> {}\n",
        input.len(),
        spans.len(),
        a.out_dir.display()
    ))
}

fn percent(x: f64) -> String {
    format!("{:6.2}", 100.0 * x)
}

fn percent_opt(x: Option<f64>) -> String {
    x.map_or_else(|| format!("{:>6}", "-"), percent)
}

pub fn eval(a: &EvalArgs) -> CliResult<String> {
    let corpus = read_corpus(&a.corpus)?;
    let config = apply_decode(PipelineConfig { layer1_order: layer1_order(a.layer1_order), ..Default::default() }, &a.decode)?;
    let mut families = vec![
        ("first_order_tokens", Family::FirstOrder { obs: Field::Token }),
        ("second_order_tokens", Family::SecondOrder { obs: Field::Token }),
        ("first_order_tags", Family::FirstOrder { obs: Field::PosLabel }),
        ("second_order_tags", Family::SecondOrder { obs: Field::PosLabel }),
        ("extractor_oracle", Family::Extractor(TagCondition::Oracle)),
        ("extractor_predicted", Family::Extractor(TagCondition::Predicted)),
    ];
    if let Some(target) = a.degraded_target {
        families.push(("extractor_degraded", Family::Extractor(TagCondition::Degraded { target, seed: a.seed })));
    }
    let mut rows = Vec::new();
    let mut out = format!("closed test on {} ({} sentences)\n", a.corpus.display(), corpus.len());
    writeln!(out, "{:<22} {:>6} {:>6} {:>6}", "model", "acc%", "F1%", "POS%").unwrap();
    for (name, family) in families {
        let r = closed_test(&corpus, family, &config)?;
        writeln!(out, "{name:<22} {} {} {}", percent(r.token_accuracy), percent(r.macro_f1), percent_opt(r.layer1_accuracy)).unwrap();
        rows.push(vec![
            name.to_string(),
            fmt4(r.token_accuracy),
            fmt4(r.macro_f1),
            fmt4_opt(r.macro_f1_positive),
            fmt4_opt(r.known_accuracy),
            fmt4_opt(r.unknown_accuracy),
            fmt4_opt(r.layer1_accuracy),
        ]);
    }
    write_csv(
        &a.out_dir.join("closed_test.csv"),
        &["model", "accuracy", "f1", "f1_positive", "known_accuracy", "unknown_accuracy", "layer1_accuracy"],
        &rows,
    )?;
    let mut rc = RunConfig::new("eval");
    rc.set("corpus", a.corpus.display()).set("seed", a.seed).set(
        "degraded_target",
        a.degraded_target.map_or_else(|| "none".to_string(), |t| t.to_string()),
    );
    echo_config(&mut rc, &config);
    rc.write_into(&a.out_dir)?;
    Ok(out)
}

fn metrics_cells(label: String, r: &MetricsRow, count: String) -> Vec<String> {
    vec![
        label,
        fmt4(r.accuracy),
        fmt4(r.f1),
        fmt4_opt(r.unknown_accuracy),
        fmt4_opt(r.known_accuracy),
        count,
        fmt4(r.unknown_rate),
    ]
}

pub fn crossval(a: &CrossvalArgs) -> CliResult<String> {
    let corpus = read_corpus(&a.corpus)?;
    let config = apply_decode(PipelineConfig { layer1_order: layer1_order(a.layer1_order), ..Default::default() }, &a.decode)?;
    let family = match a.family {
        CvFamilyArg::First => Family::FirstOrder { obs: Field::Token },
        CvFamilyArg::Second => Family::SecondOrder { obs: Field::Token },
        CvFamilyArg::FirstTags => Family::FirstOrder { obs: Field::PosLabel },
        CvFamilyArg::SecondTags => Family::SecondOrder { obs: Field::PosLabel },
        CvFamilyArg::Extractor => Family::Extractor(a.tag_source.resolve(a.seed)),
    };
    let report = cross_validate(&corpus, a.folds, a.seed, family, &config)?;
    let mut rows: Vec<Vec<String>> = report
        .folds
        .iter()
        .enumerate()
        .map(|(i, r): (usize, &EvalReport)| metrics_cells((i + 1).to_string(), &MetricsRow::from(r), r.oov_count.to_string()))
        .collect();
    rows.push(metrics_cells("Avg".into(), &report.average, fmt4(report.average.unknown_count)));
    write_csv(
        &a.out_dir.join("crossval.csv"),
        &["fold", "accuracy", "f1", "unknown_accuracy", "known_accuracy", "unknown_count", "unknown_rate"],
        &rows,
    )?;
    let mut rc = RunConfig::new("crossval");
    rc.set("corpus", a.corpus.display())
        .set("folds", a.folds)
        .set("seed", a.seed)
        .set("family", family.label());
    echo_config(&mut rc, &config);
    rc.write_into(&a.out_dir)?;
    let avg = &report.average;
    Ok(format!(
        "{}-fold cross-validation of {} on {} sentences\naverage accuracy {}%  F1 {}%  unknown {}%  known {}%  OOV rate {}%\n",
        a.folds,
        family.label(),
        corpus.len(),
        percent(avg.accuracy).trim(),
        percent(avg.f1).trim(),
        percent_opt(avg.unknown_accuracy).trim(),
        percent_opt(avg.known_accuracy).trim(),
        percent(avg.unknown_rate).trim(),
    ))
}

/// `a..b` (inclusive integer range) or a comma-separated list.
pub fn parse_lambdas(list: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Config(format!("bad lambda list {list:?}"));
    if let Some((lo, hi)) = list.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).map(f64::from).collect());
    }
    list.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
}

pub fn sweep(a: &SweepArgs) -> CliResult<String> {
    let corpus = read_corpus(&a.corpus)?;
    let config = apply_decode(PipelineConfig { layer1_order: layer1_order(a.layer1_order), ..Default::default() }, &a.decode)?;
    let lambdas = parse_lambdas(&a.lambdas)?;
    let conditions: Vec<TagCondition> = a
        .conditions
        .split(',')
        .map(|c| c.trim().parse::<ConditionArg>().map(|c| c.resolve(a.seed)).map_err(CliError::Config))
        .collect::<CliResult<_>>()?;
    let rows = lambda_sweep(&corpus, &lambdas, &conditions, &config)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![fmt4(r.lambda), r.condition.clone(), fmt4(r.accuracy), fmt4(r.f1)])
        .collect();
    write_csv(&a.out_dir.join("sweep.csv"), &["lambda", "condition", "accuracy", "f1"], &cells)?;
    let mut rc = RunConfig::new("sweep");
    rc.set("corpus", a.corpus.display())
        .set("lambdas", lambdas.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","))
        .set("conditions", conditions.iter().map(TagCondition::label).collect::<Vec<_>>().join(","))
        .set("seed", a.seed);
    echo_config(&mut rc, &config);
    rc.write_into(&a.out_dir)?;
    let mut out = format!("lambda sweep on {} ({} sentences)\n", a.corpus.display(), corpus.len());
    for r in &rows {
        writeln!(out, "{:<18} lambda {:>5}  acc {}%  F1 {}%", r.condition, r.lambda, percent(r.accuracy), percent(r.f1)).unwrap();
    }
    Ok(out)
}

const PUBLISHED_LEXICON_SIZES: [usize; 2] = [807, 809];

pub fn stats(a: &StatsArgs) -> CliResult<String> {
    let corpus = read_corpus(&a.corpus)?;
    let s = corpus_stats(&corpus);
    let mut rows: Vec<(String, String)> = vec![
        ("sentences".into(), s.sentences.to_string()),
        ("tokens".into(), s.tokens.to_string()),
        ("lexicon_size".into(), s.lexicon_size.to_string()),
        ("pos_tags".into(), s.pos_tags.to_string()),
        ("states".into(), s.states.to_string()),
    ];
    for (state, n) in s.state_histogram.iter().enumerate() {
        rows.push((format!("state_{state}"), n.to_string()));
    }
    if let Some(train) = &a.against {
        let lexicon = build_lexicon(&read_corpus(train)?)?;
        let o = oov_stats(&corpus, &lexicon);
        rows.push(("oov_tokens".into(), o.oov_tokens.to_string()));
        rows.push(("oov_rate".into(), fmt4(o.rate())));
    }
    let mut out = format!("{}\n", a.corpus.display());
    for (k, v) in &rows {
        writeln!(out, "  {k:<13} {v}").unwrap();
    }
    if PUBLISHED_LEXICON_SIZES.contains(&s.lexicon_size) {
        writeln!(
            out,
            "note: published descriptions of this corpus disagree on M ({} vs {}); measured {}",
            PUBLISHED_LEXICON_SIZES[0], PUBLISHED_LEXICON_SIZES[1], s.lexicon_size
        )
        .unwrap();
    }
    if let Some(dir) = &a.out_dir {
        let cells: Vec<Vec<String>> = rows.into_iter().map(|(k, v)| vec![k, v]).collect();
        write_csv(&dir.join("stats.csv"), &["metric", "value"], &cells)?;
        let mut rc = RunConfig::new("stats");
        rc.set("corpus", a.corpus.display())
            .set("against", a.against.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string()));
        rc.write_into(dir)?;
    }
    Ok(out)
}

pub fn synth(a: &SynthArgs) -> CliResult<String> {
    if a.sentences == 0 {
        return Err(CliError::Config("--sentences must be positive".into()));
    }
    let corpus = synthesize(a.sentences, a.seed);
    write_text(&a.out, &corpus.to_text())?;
    let mut rc = RunConfig::new("synth");
    rc.set("sentences", a.sentences).set("seed", a.seed).set("out", a.out.display());
    rc.write_into(parent(&a.out))?;
    Ok(format!("wrote {} sentences ({} tokens) -> {}\n", corpus.len(), corpus.token_count(), a.out.display()))
}

//! Versioned plain-text model files.
//!
//! ```text
//! ingredient-hmm model 1
//! family <first|second|feature|pipeline>
//! <key> <value>                        pipeline settings, pipeline files only
//! begin <role> <first|second|feature>  role is `model`, or `layer1`/`layer2`
//! dims <N> <K> <M> <P>                 states, tags (0 unless feature), words, prefixes
//! states <N>
//! \t<state>                            one line per entry, in index order
//! tags <K>                             feature blocks only
//! words <M>
//! prefixes <P>
//! table <name> <rows> <cols>
//! \t<count> ... | <prob> ...           one line per row
//! prefix_table <name> <rows> <cols>
//! \t<prob> ...
//! end <role>
//! ```
//!
//! Probabilities are written with 17 significant digits, so reading a file
//! back reproduces every table bit for bit. Tables appear in a fixed order per
//! block: `pi trans emit` and `prefix_emit` for first-order and feature blocks,
//! `pi trans2 trans3 emit1 emit2` and `prefix_emit1 prefix_emit2` for
//! second-order blocks.

use std::fmt::Write as _;

use ingredient_hmm_core::{
    CondTable, Error as CoreError, FeatureConditionedModel, FirstOrderModel, Layer1Model,
    Layer1Order, Lexicon, OovPolicy, PipelineConfig, PipelineModel, PrefixTable, SecondOrderModel,
    Space, TagMode,
};
use thiserror::Error;

pub const MAGIC: &str = "ingredient-hmm model";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("unsupported model format version {found} (expected {VERSION})")]
    Version { found: String },
    #[error("line {line}: file ends before {expected}")]
    Truncated { line: usize, expected: String },
    #[error("line {line}: {what}: header says {expected}, found {found}")]
    DimensionMismatch { line: usize, what: String, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("inconsistent model: {0}")]
    Invalid(#[from] CoreError),
}

type Result<T> = std::result::Result<T, ModelFileError>;

/// Anything the `train` command can produce.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelArtifact {
    First(FirstOrderModel),
    Second(SecondOrderModel),
    Feature(FeatureConditionedModel),
    Pipeline(PipelineModel),
}

impl ModelArtifact {
    pub fn family(&self) -> &'static str {
        match self {
            ModelArtifact::First(_) => "first",
            ModelArtifact::Second(_) => "second",
            ModelArtifact::Feature(_) => "feature",
            ModelArtifact::Pipeline(_) => "pipeline",
        }
    }
}

fn space_name(s: Space) -> &'static str {
    s.name()
}

fn layer1_order_name(o: Layer1Order) -> &'static str {
    match o {
        Layer1Order::First => "first",
        Layer1Order::Second => "second",
    }
}

fn tag_mode_name(m: TagMode) -> &'static str {
    match m {
        TagMode::Predicted => "predicted",
        TagMode::Oracle => "oracle",
    }
}

pub fn write_model(model: &ModelArtifact) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "family {}", model.family()).unwrap();
    match model {
        ModelArtifact::First(m) => write_first(&mut out, "model", m),
        ModelArtifact::Second(m) => write_second(&mut out, "model", m),
        ModelArtifact::Feature(m) => write_feature(&mut out, "model", m),
        ModelArtifact::Pipeline(p) => {
            let c = &p.config;
            writeln!(out, "lambda {}", c.lambda).unwrap();
            writeln!(out, "space {}", space_name(c.space)).unwrap();
            writeln!(out, "oov_policy {}", c.oov_policy.name()).unwrap();
            writeln!(out, "lambda_on_oov {}", c.lambda_on_oov).unwrap();
            writeln!(out, "fallback {}", c.fallback).unwrap();
            writeln!(out, "layer1_order {}", layer1_order_name(c.layer1_order)).unwrap();
            writeln!(out, "tag_mode {}", tag_mode_name(c.tag_mode)).unwrap();
            writeln!(out, "smoothing {}", c.smoothing).unwrap();
            match &p.layer1 {
                Layer1Model::First(m) => write_first(&mut out, "layer1", m),
                Layer1Model::Second(m) => write_second(&mut out, "layer1", m),
            }
            write_feature(&mut out, "layer2", &p.layer2);
        }
    }
    out
}

fn write_inventory(out: &mut String, name: &str, items: &[String]) {
    writeln!(out, "{name} {}", items.len()).unwrap();
    for item in items {
        writeln!(out, "\t{item}").unwrap();
    }
}

fn write_header(out: &mut String, role: &str, kind: &str, states: &[String], tags: Option<&[String]>, vocab: &Lexicon) {
    writeln!(out, "begin {role} {kind}").unwrap();
    writeln!(
        out,
        "dims {} {} {} {}",
        states.len(),
        tags.map_or(0, <[String]>::len),
        vocab.len(),
        vocab.prefixes().len()
    )
    .unwrap();
    write_inventory(out, "states", states);
    if let Some(tags) = tags {
        write_inventory(out, "tags", tags);
    }
    write_inventory(out, "words", vocab.words());
    write_inventory(out, "prefixes", vocab.prefixes());
}

fn write_table(out: &mut String, name: &str, t: &CondTable) {
    writeln!(out, "table {name} {} {}", t.rows(), t.cols()).unwrap();
    for r in 0..t.rows() {
        out.push('\t');
        for c in 0..t.cols() {
            write!(out, "{} ", t.count(r, c)).unwrap();
        }
        out.push('|');
        for &p in t.row(r) {
            write!(out, " {p:.16e}").unwrap();
        }
        out.push('\n');
    }
}

fn write_prefix_table(out: &mut String, name: &str, t: &PrefixTable) {
    writeln!(out, "prefix_table {name} {} {}", t.rows(), t.cols()).unwrap();
    for r in 0..t.rows() {
        out.push('\t');
        let row: Vec<String> = t.row(r).iter().map(|p| format!("{p:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn write_first(out: &mut String, role: &str, m: &FirstOrderModel) {
    write_header(out, role, "first", &m.states, None, &m.vocab);
    write_table(out, "pi", &m.pi);
    write_table(out, "trans", &m.trans);
    write_table(out, "emit", &m.emit);
    write_prefix_table(out, "prefix_emit", &m.prefix_emit);
    writeln!(out, "end {role}").unwrap();
}

fn write_second(out: &mut String, role: &str, m: &SecondOrderModel) {
    write_header(out, role, "second", &m.states, None, &m.vocab);
    write_table(out, "pi", &m.pi);
    write_table(out, "trans2", &m.trans2);
    write_table(out, "trans3", &m.trans3);
    write_table(out, "emit1", &m.emit1);
    write_table(out, "emit2", &m.emit2);
    write_prefix_table(out, "prefix_emit1", &m.prefix_emit1);
    write_prefix_table(out, "prefix_emit2", &m.prefix_emit2);
    writeln!(out, "end {role}").unwrap();
}

fn write_feature(out: &mut String, role: &str, m: &FeatureConditionedModel) {
    write_header(out, role, "feature", &m.states, Some(&m.tags), &m.vocab);
    write_table(out, "pi", &m.pi);
    write_table(out, "trans", &m.trans);
    write_table(out, "emit", &m.emit);
    write_prefix_table(out, "prefix_emit", &m.prefix_emit);
    writeln!(out, "end {role}").unwrap();
}

struct Cursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { lines: text.lines().enumerate().peekable(), last: 0 }
    }

    fn next(&mut self, expected: &str) -> Result<(usize, &'a str)> {
        match self.lines.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(ModelFileError::Truncated { line: self.last + 1, expected: expected.into() }),
        }
    }

    /// Next line, split into its keyword and the remaining fields.
    fn keyword(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, text) = self.next(&format!("`{keyword}`"))?;
        let mut fields = text.split(' ');
        if fields.next() != Some(keyword) {
            return Err(syntax(line, format!("expected `{keyword}`, found {text:?}")));
        }
        Ok((line, fields.collect()))
    }

    fn at_end(&mut self) -> bool {
        self.lines.peek().is_none()
    }

    /// Exactly `expected` tab-indented lines, without the tab.
    fn block(&mut self, header_line: usize, what: &str, expected: usize) -> Result<Vec<(usize, &'a str)>> {
        let items = self.items();
        if items.len() < expected && self.at_end() {
            return Err(ModelFileError::Truncated { line: self.last + 1, expected: format!("the end of {what}") });
        }
        check_dim(header_line, what, expected, items.len())?;
        Ok(items)
    }

    /// Consecutive tab-indented lines, without the tab.
    fn items(&mut self) -> Vec<(usize, &'a str)> {
        let mut items = Vec::new();
        while let Some(&(i, l)) = self.lines.peek() {
            let Some(item) = l.strip_prefix('\t') else { break };
            items.push((i + 1, item));
            self.last = i + 1;
            self.lines.next();
        }
        items
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ModelFileError {
    ModelFileError::Syntax { line, message: message.into() }
}

fn number<T: std::str::FromStr>(line: usize, field: Option<&&str>, what: &str) -> Result<T> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| syntax(line, format!("expected {what}")))
}

fn check_dim(line: usize, what: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelFileError::DimensionMismatch { line, what: what.into(), expected, found })
    }
}

fn read_inventory(cur: &mut Cursor, name: &str, expected: usize) -> Result<Vec<String>> {
    let (line, fields) = cur.keyword(name)?;
    let count: usize = number(line, fields.first(), "an entry count")?;
    check_dim(line, &format!("{name} count"), expected, count)?;
    let items = cur.block(line, &format!("{name} entries"), expected)?;
    Ok(items.into_iter().map(|(_, s)| s.to_string()).collect())
}

fn read_shape(cur: &mut Cursor, keyword: &str, name: &str, rows: usize, cols: usize) -> Result<usize> {
    let (line, fields) = cur.keyword(keyword)?;
    if fields.first() != Some(&name) {
        return Err(syntax(line, format!("expected {keyword} `{name}`")));
    }
    check_dim(line, &format!("{name} rows"), rows, number(line, fields.get(1), "a row count")?)?;
    check_dim(line, &format!("{name} columns"), cols, number(line, fields.get(2), "a column count")?)?;
    Ok(line)
}

fn parse_floats(line: usize, text: &str, cols: usize, what: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|v| v.parse().map_err(|_| syntax(line, format!("bad probability {v:?}"))))
        .collect::<Result<_>>()?;
    check_dim(line, what, cols, values.len())?;
    Ok(values)
}

fn read_table(cur: &mut Cursor, name: &str, rows: usize, cols: usize) -> Result<CondTable> {
    let line = read_shape(cur, "table", name, rows, cols)?;
    let items = cur.block(line, &format!("{name} row lines"), rows)?;
    let mut counts = Vec::with_capacity(rows * cols);
    let mut probs = Vec::with_capacity(rows * cols);
    for (l, item) in items {
        let (c, p) = item.split_once('|').ok_or_else(|| syntax(l, "row without `|`"))?;
        let row: Vec<u64> = c
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| syntax(l, format!("bad count {v:?}"))))
            .collect::<Result<_>>()?;
        check_dim(l, &format!("{name} counts per row"), cols, row.len())?;
        counts.extend(row);
        probs.extend(parse_floats(l, p, cols, &format!("{name} probabilities per row"))?);
    }
    Ok(CondTable::from_parts(rows, cols, counts, probs)?)
}

fn read_prefix_table(cur: &mut Cursor, name: &str, rows: usize, cols: usize) -> Result<PrefixTable> {
    let line = read_shape(cur, "prefix_table", name, rows, cols)?;
    let items = cur.block(line, &format!("{name} row lines"), rows)?;
    let mut probs = Vec::with_capacity(rows * cols);
    for (l, item) in items {
        probs.extend(parse_floats(l, item, cols, &format!("{name} entries per row"))?);
    }
    Ok(PrefixTable::from_probs(rows, cols, probs)?)
}

struct Header {
    states: Vec<String>,
    tags: Vec<String>,
    vocab: Lexicon,
}

fn read_header(cur: &mut Cursor, with_tags: bool) -> Result<Header> {
    let (line, fields) = cur.keyword("dims")?;
    let n: usize = number(line, fields.first(), "N")?;
    let k: usize = number(line, fields.get(1), "K")?;
    let m: usize = number(line, fields.get(2), "M")?;
    let p: usize = number(line, fields.get(3), "P")?;
    if !with_tags && k != 0 {
        return Err(syntax(line, "K must be 0 outside feature blocks"));
    }
    let states = read_inventory(cur, "states", n)?;
    let tags = if with_tags { read_inventory(cur, "tags", k)? } else { Vec::new() };
    let words = read_inventory(cur, "words", m)?;
    let prefixes = read_inventory(cur, "prefixes", p)?;
    let vocab = Lexicon::from_symbols(words.iter().map(String::as_str))?;
    if vocab.len() != m {
        return Err(syntax(line, "duplicate word in inventory"));
    }
    if vocab.prefixes() != prefixes.as_slice() {
        return Err(syntax(line, "prefix inventory does not match the words"));
    }
    Ok(Header { states, tags, vocab })
}

fn read_block(cur: &mut Cursor, role: &str) -> Result<(String, BlockModel)> {
    let (line, fields) = cur.keyword("begin")?;
    if fields.first() != Some(&role) {
        return Err(syntax(line, format!("expected block `{role}`")));
    }
    let kind = fields.get(1).copied().unwrap_or_default().to_string();
    let model = match kind.as_str() {
        "first" => {
            let h = read_header(cur, false)?;
            let (n, m, p) = (h.states.len(), h.vocab.len(), h.vocab.prefixes().len());
            let model = FirstOrderModel {
                pi: read_table(cur, "pi", 1, n)?,
                trans: read_table(cur, "trans", n, n)?,
                emit: read_table(cur, "emit", n, m)?,
                prefix_emit: read_prefix_table(cur, "prefix_emit", n, p)?,
                states: h.states,
                vocab: h.vocab,
            };
            model.validate()?;
            BlockModel::First(model)
        }
        "second" => {
            let h = read_header(cur, false)?;
            let (n, m, p) = (h.states.len(), h.vocab.len(), h.vocab.prefixes().len());
            let model = SecondOrderModel {
                pi: read_table(cur, "pi", 1, n)?,
                trans2: read_table(cur, "trans2", n, n)?,
                trans3: read_table(cur, "trans3", n * n, n)?,
                emit1: read_table(cur, "emit1", n, m)?,
                emit2: read_table(cur, "emit2", n * n, m)?,
                prefix_emit1: read_prefix_table(cur, "prefix_emit1", n, p)?,
                prefix_emit2: read_prefix_table(cur, "prefix_emit2", n * n, p)?,
                states: h.states,
                vocab: h.vocab,
            };
            model.validate()?;
            BlockModel::Second(model)
        }
        "feature" => {
            let h = read_header(cur, true)?;
            let (n, k, m, p) = (h.states.len(), h.tags.len(), h.vocab.len(), h.vocab.prefixes().len());
            let model = FeatureConditionedModel {
                pi: read_table(cur, "pi", 1, n)?,
                trans: read_table(cur, "trans", k * n, n)?,
                emit: read_table(cur, "emit", k * n, m)?,
                prefix_emit: read_prefix_table(cur, "prefix_emit", k * n, p)?,
                states: h.states,
                tags: h.tags,
                vocab: h.vocab,
            };
            model.validate()?;
            BlockModel::Feature(model)
        }
        other => return Err(syntax(line, format!("unknown block kind {other:?}"))),
    };
    let (line, fields) = cur.keyword("end")?;
    if fields.first() != Some(&role) {
        return Err(syntax(line, format!("expected `end {role}`")));
    }
    Ok((kind, model))
}

enum BlockModel {
    First(FirstOrderModel),
    Second(SecondOrderModel),
    Feature(FeatureConditionedModel),
}

fn setting<'a>(cur: &mut Cursor<'a>, key: &str) -> Result<(usize, &'a str)> {
    let (line, fields) = cur.keyword(key)?;
    match fields.as_slice() {
        [value] => Ok((line, value)),
        _ => Err(syntax(line, format!("expected `{key} <value>`"))),
    }
}

fn parse_setting<T: std::str::FromStr>(cur: &mut Cursor, key: &str) -> Result<T> {
    let (line, value) = setting(cur, key)?;
    value.parse().map_err(|_| syntax(line, format!("bad value {value:?} for {key}")))
}

fn read_config(cur: &mut Cursor) -> Result<PipelineConfig> {
    let lambda = parse_setting(cur, "lambda")?;
    let space = parse_setting(cur, "space")?;
    let oov_policy: OovPolicy = parse_setting(cur, "oov_policy")?;
    let lambda_on_oov = parse_setting(cur, "lambda_on_oov")?;
    let fallback = parse_setting(cur, "fallback")?;
    let (line, order) = setting(cur, "layer1_order")?;
    let layer1_order = match order {
        "first" => Layer1Order::First,
        "second" => Layer1Order::Second,
        _ => return Err(syntax(line, format!("bad layer1_order {order:?}"))),
    };
    let (line, mode) = setting(cur, "tag_mode")?;
    let tag_mode = match mode {
        "predicted" => TagMode::Predicted,
        "oracle" => TagMode::Oracle,
        _ => return Err(syntax(line, format!("bad tag_mode {mode:?}"))),
    };
    let smoothing = parse_setting(cur, "smoothing")?;
    Ok(PipelineConfig { lambda, space, oov_policy, lambda_on_oov, fallback, layer1_order, tag_mode, smoothing })
}

pub fn read_model(text: &str) -> Result<ModelArtifact> {
    let mut cur = Cursor::new(text);
    let (line, first) = cur.next("the format line")?;
    let version = first
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| syntax(line, "not an ingredient-hmm model file"))?;
    if version != VERSION.to_string() {
        return Err(ModelFileError::Version { found: version.to_string() });
    }
    let (line, family) = setting(&mut cur, "family")?;
    let model = match family {
        "first" | "second" | "feature" => match read_block(&mut cur, "model")? {
            (kind, _) if kind != family => {
                return Err(syntax(line, format!("family {family} holds a {kind} block")))
            }
            (_, BlockModel::First(m)) => ModelArtifact::First(m),
            (_, BlockModel::Second(m)) => ModelArtifact::Second(m),
            (_, BlockModel::Feature(m)) => ModelArtifact::Feature(m),
        },
        "pipeline" => {
            let config = read_config(&mut cur)?;
            let layer1 = match read_block(&mut cur, "layer1")? {
                (_, BlockModel::First(m)) => Layer1Model::First(m),
                (_, BlockModel::Second(m)) => Layer1Model::Second(m),
                (_, BlockModel::Feature(_)) => return Err(syntax(cur.last, "layer1 must be first or second order")),
            };
            let layer2 = match read_block(&mut cur, "layer2")? {
                (_, BlockModel::Feature(m)) => m,
                _ => return Err(syntax(cur.last, "layer2 must be a feature block")),
            };
            let pipeline = PipelineModel { layer1, layer2, config };
            pipeline.validate()?;
            ModelArtifact::Pipeline(pipeline)
        }
        other => return Err(syntax(line, format!("unknown family {other:?}"))),
    };
    if let Some((i, extra)) = cur.lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(syntax(i + 1, format!("trailing content {extra:?}")));
    }
    Ok(model)
}

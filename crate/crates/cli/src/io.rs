//! Reading corpora and token files, writing reports.

use std::fs;
use std::path::{Path, PathBuf};

use ingredient_hmm_core::{parse_corpus, Corpus};

use crate::error::{CliError, CliResult};
use crate::model_file::{read_model, write_model, ModelArtifact};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_corpus(path: &Path) -> CliResult<Corpus> {
    let text = read_text(path)?;
    parse_corpus(&text)
        .map(|c| c.with_source(path.display().to_string()))
        .map_err(|source| CliError::Corpus { path: path.into(), source })
}

pub fn load_model(path: &Path) -> CliResult<ModelArtifact> {
    let text = read_text(path)?;
    read_model(&text).map_err(|source| CliError::Model { path: path.into(), source })
}

pub fn save_model(path: &Path, model: &ModelArtifact) -> CliResult<()> {
    write_text(path, &write_model(model))
}

/// A sentence of a token file, with optional tag and state columns.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSentence {
    pub tokens: Vec<String>,
    pub tags: Option<Vec<String>>,
    pub states: Option<Vec<String>>,
    /// 1-based source line of every token.
    pub lines: Vec<usize>,
}

/// Reads one token per line (extra tab-separated columns are a tag and a
/// state); blank lines end sentences and `#` lines are comments.
pub fn read_input(path: &Path) -> CliResult<Vec<InputSentence>> {
    let text = read_text(path)?;
    let mut sentences = Vec::new();
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let flush = |rows: &mut Vec<(usize, Vec<String>)>, out: &mut Vec<InputSentence>| {
        if rows.is_empty() {
            return;
        }
        let column = |i: usize| -> Option<Vec<String>> { rows.iter().map(|(_, f)| f.get(i).cloned()).collect() };
        out.push(InputSentence {
            tokens: column(0).expect("token column"),
            tags: column(1),
            states: column(2),
            lines: rows.iter().map(|(l, _)| *l).collect(),
        });
        rows.clear();
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            flush(&mut rows, &mut sentences);
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields.iter().any(String::is_empty) {
            return Err(CliError::Input { path: path.into(), line: i + 1, message: "empty field".into() });
        }
        rows.push((i + 1, fields));
    }
    flush(&mut rows, &mut sentences);
    if sentences.is_empty() {
        return Err(CliError::Input { path: path.into(), line: 1, message: "no sentences".into() });
    }
    Ok(sentences)
}

/// Tags per sentence from a tag file: the second column when present,
/// otherwise the only column.
pub fn read_tag_file(path: &Path, input: &[InputSentence]) -> CliResult<Vec<Vec<String>>> {
    let tagged = read_input(path)?;
    if tagged.len() != input.len() {
        return Err(CliError::Config(format!(
            "{}: {} sentences, input has {}",
            path.display(),
            tagged.len(),
            input.len()
        )));
    }
    tagged
        .into_iter()
        .zip(input)
        .map(|(t, s)| {
            let tags = t.tags.unwrap_or(t.tokens);
            if tags.len() != s.tokens.len() {
                return Err(CliError::Input {
                    path: path.into(),
                    line: t.lines[0],
                    message: format!("{} tags for a {}-token sentence", tags.len(), s.tokens.len()),
                });
            }
            Ok(tags)
        })
        .collect()
}

/// Fixed-precision float for CSV cells.
pub fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

pub fn fmt4_opt(x: Option<f64>) -> String {
    x.map(fmt4).unwrap_or_default()
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Resolved options of one run, written as `run_config.txt`.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    entries: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        let mut c = RunConfig::default();
        c.set("command", command);
        c
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write_into(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join("run_config.txt");
        write_text(&path, &self.render())?;
        Ok(path)
    }
}

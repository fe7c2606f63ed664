//! Stream files: plain-text message lines, NDJSON transactions and the
//! manifest written next to every generated dataset.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use halfado_core::datagen::{truncate_chars, FintechConfig, MessageCorpusConfig, PlantedRule, MAX_MESSAGE_CHARS};
use halfado_core::{Event, Transaction};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("read error: {0}")]
    Read(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Record { line: u64, source: serde_json::Error },
    #[error("cannot encode record: {0}")]
    Encode(serde_json::Error),
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|source| IoError::Open { path: path.to_path_buf(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::Open { path: path.to_path_buf(), source })
}

/// Messages of a text file, one per line, as events numbered from zero.
///
/// Payloads are cut to 140 characters. Lines that are not valid UTF-8 are
/// skipped and counted; they do not consume an event id.
pub struct TextReplay<R> {
    lines: std::io::Split<R>,
    next_id: u64,
    remaining: Option<u64>,
    skipped_invalid: u64,
}

impl<R: BufRead> TextReplay<R> {
    pub fn new(reader: R, limit: Option<u64>) -> Self {
        TextReplay { lines: reader.split(b'\n'), next_id: 0, remaining: limit, skipped_invalid: 0 }
    }

    pub fn skipped_invalid(&self) -> u64 {
        self.skipped_invalid
    }
}

impl<R: BufRead> Iterator for TextReplay<R> {
    type Item = Result<Event, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == Some(0) {
            return None;
        }
        loop {
            let mut bytes = match self.lines.next()? {
                Ok(bytes) => bytes,
                Err(e) => return Some(Err(e.into())),
            };
            if bytes.last() == Some(&b'\r') {
                bytes.pop();
            }
            match String::from_utf8(bytes) {
                Ok(line) => {
                    let event = Event::text(self.next_id, truncate_chars(&line, MAX_MESSAGE_CHARS));
                    self.next_id += 1;
                    if let Some(left) = self.remaining.as_mut() {
                        *left -= 1;
                    }
                    return Some(Ok(event));
                }
                Err(_) => self.skipped_invalid += 1,
            }
        }
    }
}

pub fn replay_text_stream(path: &Path, limit: Option<u64>) -> Result<TextReplay<BufReader<File>>, IoError> {
    Ok(TextReplay::new(open(path)?, limit))
}

pub fn write_text_lines<'a>(path: &Path, messages: impl IntoIterator<Item = &'a str>) -> Result<u64, IoError> {
    let mut out = create(path)?;
    let mut count = 0;
    for message in messages {
        let line: String = message.chars().map(|c| if c == '\n' || c == '\r' { ' ' } else { c }).collect();
        writeln!(out, "{line}")?;
        count += 1;
    }
    out.flush()?;
    Ok(count)
}

/// Transactions of an NDJSON file; blank lines are ignored.
pub struct TransactionReader<R> {
    lines: std::io::Lines<R>,
    line: u64,
    remaining: Option<u64>,
}

impl<R: BufRead> TransactionReader<R> {
    pub fn new(reader: R, limit: Option<u64>) -> Self {
        TransactionReader { lines: reader.lines(), line: 0, remaining: limit }
    }
}

impl<R: BufRead> Iterator for TransactionReader<R> {
    type Item = Result<Transaction, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == Some(0) {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(left) = self.remaining.as_mut() {
                *left -= 1;
            }
            let line_no = self.line;
            return Some(serde_json::from_str(&line).map_err(|source| IoError::Record { line: line_no, source }));
        }
    }
}

pub fn read_transactions(path: &Path, limit: Option<u64>) -> Result<TransactionReader<BufReader<File>>, IoError> {
    Ok(TransactionReader::new(open(path)?, limit))
}

pub fn write_transactions(path: &Path, txs: impl IntoIterator<Item = Transaction>) -> Result<u64, IoError> {
    let mut out = create(path)?;
    let mut count = 0;
    for tx in txs {
        serde_json::to_writer(&mut out, &tx).map_err(IoError::Encode)?;
        out.write_all(b"\n")?;
        count += 1;
    }
    out.flush()?;
    Ok(count)
}

/// Whether `path` looks like an NDJSON transaction file rather than text.
pub fn sniff_ndjson(path: &Path) -> Result<bool, IoError> {
    let mut head = [0u8; 1];
    let n = open(path)?.read(&mut head)?;
    Ok(n == 1 && head[0] == b'{')
}

pub const MANIFEST_SCHEMA: &str = "halfado.manifest";
pub const MANIFEST_VERSION: u32 = 1;

/// What was generated and how; enough to regenerate the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema: String,
    pub version: u32,
    pub generator: String,
    pub seed: u64,
    pub records: u64,
    #[serde(flatten)]
    pub dataset: DatasetSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Fintech { population: usize, population_seed: u64, config: FintechConfig, rules: Vec<PlantedRule> },
    Text { config: MessageCorpusConfig },
}

impl DatasetManifest {
    pub fn new(seed: u64, records: u64, dataset: DatasetSpec) -> Self {
        DatasetManifest {
            schema: MANIFEST_SCHEMA.into(),
            version: MANIFEST_VERSION,
            generator: format!("halfado {}", env!("CARGO_PKG_VERSION")),
            seed,
            records,
            dataset,
        }
    }
}

/// `data.ndjson` → `data.ndjson.manifest.json`.
pub fn manifest_path(dataset: &Path) -> PathBuf {
    let mut name = dataset.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    dataset.with_file_name(name)
}

pub fn write_manifest(dataset: &Path, manifest: &DatasetManifest) -> Result<PathBuf, IoError> {
    let path = manifest_path(dataset);
    let mut out = create(&path)?;
    serde_json::to_writer_pretty(&mut out, manifest).map_err(IoError::Encode)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(path)
}

pub fn read_manifest(dataset: &Path) -> Result<DatasetManifest, IoError> {
    let path = manifest_path(dataset);
    serde_json::from_reader(open(&path)?).map_err(|source| IoError::Record { line: 0, source })
}

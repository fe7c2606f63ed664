//! Experiment configuration, stream and pool materialization, and the
//! oracle-mode run loop.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use halfado_core::datagen::{
    default_rules, generate_population, generate_stream, FintechConfig, MessageCorpusConfig, MessageGenerator,
    PlantedRule, TransactionStream,
};
use halfado_core::eval::{sample_candidate_words, score_single_word_baselines, KeywordOracle, Oracle};
use halfado_core::experts::{
    build_vocabulary, sample_tree_experts, ProjectionConfig, ProjectionPool, TreeExpert, TreeSamplingConfig,
};
use halfado_core::{Customer, EngineConfig, Event, ExpertId, ExpertPool, Implication, Mode};
use serde::{Deserialize, Serialize};

use crate::documents::{DocumentError, PoolDocument, StateDocument};
use crate::io::{self, DatasetManifest, DatasetSpec, IoError, TextReplay, TransactionReader};
use crate::report::{write_plot_data, DecisionWriter};
use crate::runner::{BaselineSummary, RunError, RunReport, Runner};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid setting: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Core(#[from] halfado_core::Error),
    #[error("output: {0}")]
    Output(String),
}

/// `<path>`, `gen:fintech` or `gen:text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSpec {
    File(PathBuf),
    Fintech,
    Text,
}

/// `<path>`, `gen:trees`, `gen:projection` or `gen:auto` (matches the input).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpertsSpec {
    File(PathBuf),
    Trees,
    Projection,
    Auto,
}

/// `keyword:w1,w2`, `truth` or `human`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    Keyword(Vec<String>),
    Truth,
    Human,
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

impl FromStr for InputSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gen:fintech" => Ok(InputSpec::Fintech),
            "gen:text" => Ok(InputSpec::Text),
            other if other.starts_with("gen:") => Err(format!("unknown generator `{other}` (gen:fintech, gen:text)")),
            "" => Err("input must not be empty".into()),
            path => Ok(InputSpec::File(path.into())),
        }
    }
}

impl fmt::Display for InputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSpec::File(p) => write!(f, "{}", p.display()),
            InputSpec::Fintech => f.write_str("gen:fintech"),
            InputSpec::Text => f.write_str("gen:text"),
        }
    }
}

impl FromStr for ExpertsSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gen:trees" => Ok(ExpertsSpec::Trees),
            "gen:projection" => Ok(ExpertsSpec::Projection),
            "gen:auto" | "gen" => Ok(ExpertsSpec::Auto),
            other if other.starts_with("gen:") => {
                Err(format!("unknown expert generator `{other}` (gen:trees, gen:projection, gen:auto)"))
            }
            "" => Err("experts must not be empty".into()),
            path => Ok(ExpertsSpec::File(path.into())),
        }
    }
}

impl fmt::Display for ExpertsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpertsSpec::File(p) => write!(f, "{}", p.display()),
            ExpertsSpec::Trees => f.write_str("gen:trees"),
            ExpertsSpec::Projection => f.write_str("gen:projection"),
            ExpertsSpec::Auto => f.write_str("gen:auto"),
        }
    }
}

impl FromStr for OracleSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("keyword", words)) => {
                let words: Vec<String> =
                    words.split(',').map(str::trim).filter(|w| !w.is_empty()).map(str::to_lowercase).collect();
                if words.is_empty() {
                    Err("keyword oracle needs at least one word".into())
                } else {
                    Ok(OracleSpec::Keyword(words))
                }
            }
            None if s == "keyword" => Ok(OracleSpec::Keyword(vec!["hate".into(), "kill".into()])),
            None if s == "truth" => Ok(OracleSpec::Truth),
            None if s == "human" => Ok(OracleSpec::Human),
            _ => Err(format!("unknown oracle `{s}` (keyword:w1,w2, truth, human)")),
        }
    }
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSpec::Keyword(words) => write!(f, "keyword:{}", words.join(",")),
            OracleSpec::Truth => f.write_str("truth"),
            OracleSpec::Human => f.write_str("human"),
        }
    }
}

string_serde!(InputSpec);
string_serde!(ExpertsSpec);
string_serde!(OracleSpec);

/// Every setting of a run. The CLI flags and the TOML config file both
/// map onto this struct; flags override the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub input: InputSpec,
    pub experts: ExpertsSpec,
    /// Defaults to `truth` for transactions and `keyword:hate,kill` for text.
    pub oracle: Option<OracleSpec>,
    pub theta: f64,
    pub alpha: f64,
    pub c: f64,
    /// Number of generated experts.
    pub m: usize,
    pub seed: u64,
    pub implication: Implication,
    /// Events to generate, or the most to read from a file.
    pub events: Option<u64>,
    pub population: usize,
    pub vocabulary: usize,
    /// Leading messages the vocabulary is built from.
    pub vocabulary_sample: usize,
    /// Random vocabulary words scored as single-word baselines (text with
    /// a keyword oracle only).
    pub baseline_words: usize,
    pub precision_band: f64,
    pub report: Option<PathBuf>,
    pub decisions: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    /// Where to write the state document.
    pub snapshot: Option<PathBuf>,
    /// Write the snapshot after this many events instead of at the end.
    pub snapshot_at: Option<u64>,
    /// Resume from a state document; the stream restarts after the events
    /// it already accounts for.
    pub restore: Option<PathBuf>,
    pub serve: Option<String>,
    pub queue_capacity: usize,
    pub projection: ProjectionConfig,
    pub trees: TreeSamplingConfig,
    pub fintech: FintechConfig,
    pub rules: Vec<PlantedRule>,
    pub corpus: MessageCorpusConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Halving,
            input: InputSpec::Fintech,
            experts: ExpertsSpec::Auto,
            oracle: None,
            theta: 0.5,
            alpha: 1.0,
            c: 0.2,
            m: 1000,
            seed: 42,
            implication: Implication::default(),
            events: None,
            population: 100_000,
            vocabulary: 500,
            vocabulary_sample: 20_000,
            baseline_words: 100,
            precision_band: 0.10,
            report: None,
            decisions: None,
            plot: None,
            snapshot: None,
            snapshot_at: None,
            restore: None,
            serve: None,
            queue_capacity: crate::service::DEFAULT_QUEUE_CAPACITY,
            projection: ProjectionConfig::default(),
            trees: TreeSamplingConfig::default(),
            fintech: FintechConfig::default(),
            rules: default_rules(),
            corpus: MessageCorpusConfig::default(),
        }
    }
}

pub const DEFAULT_FINTECH_EVENTS: u64 = 1_000_000;
pub const DEFAULT_TEXT_EVENTS: u64 = 100_000;

/// Independent stream seeds derived from the run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const POPULATION_STREAM: u64 = 1;
const TRANSACTION_STREAM: u64 = 2;
const EXPERT_STREAM: u64 = 3;
const CORPUS_STREAM: u64 = 4;
const BASELINE_STREAM: u64 = 5;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| IoError::Open { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            mode: self.mode,
            theta: self.theta,
            alpha: self.alpha,
            c: self.c,
            seed: self.seed,
            implication: self.implication,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ExperimentConfig { seed, ..self.clone() }
    }
}

/// A replayable event stream.
pub enum StreamSource {
    Fintech { population: Vec<Customer>, config: FintechConfig, rules: Vec<PlantedRule>, seed: u64, count: u64 },
    Text { config: MessageCorpusConfig, seed: u64, count: u64 },
    TextFile { path: PathBuf, limit: Option<u64> },
    TransactionFile { path: PathBuf, limit: Option<u64> },
}

pub enum Events<'a> {
    Fintech(TransactionStream<'a>),
    Text(std::iter::Take<MessageGenerator>, u64),
    TextFile(TextReplay<BufReader<File>>),
    TransactionFile(TransactionReader<BufReader<File>>),
}

impl Iterator for Events<'_> {
    type Item = Result<Event, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            Events::Fintech(txs) => txs.next().map(|tx| Ok(Event::transaction(tx))),
            Events::Text(messages, next_id) => messages.next().map(|m| {
                let event = Event::text(*next_id, m);
                *next_id += 1;
                Ok(event)
            }),
            Events::TextFile(replay) => replay.next(),
            Events::TransactionFile(reader) => reader.next().map(|r| r.map(Event::transaction)),
        }
    }
}

impl Events<'_> {
    /// Input lines skipped as unreadable so far.
    pub fn skipped(&self) -> u64 {
        match self {
            Events::TextFile(replay) => replay.skipped_invalid(),
            _ => 0,
        }
    }
}

impl StreamSource {
    pub fn events(&self) -> Result<Events<'_>, ExperimentError> {
        Ok(match self {
            StreamSource::Fintech { population, config, rules, seed, count } => {
                Events::Fintech(generate_stream(*count, population, rules, config, *seed)?)
            }
            StreamSource::Text { config, seed, count } => {
                Events::Text(MessageGenerator::new(config.clone(), *seed)?.take(*count as usize), 0)
            }
            StreamSource::TextFile { path, limit } => Events::TextFile(io::replay_text_stream(path, *limit)?),
            StreamSource::TransactionFile { path, limit } => {
                Events::TransactionFile(io::read_transactions(path, *limit)?)
            }
        })
    }

    pub fn is_text(&self) -> bool {
        matches!(self, StreamSource::Text { .. } | StreamSource::TextFile { .. })
    }

    /// Leading messages of a text stream.
    pub fn text_prefix(&self, count: usize) -> Result<Vec<String>, ExperimentError> {
        let mut out = Vec::with_capacity(count.min(1 << 20));
        for event in self.events()?.take(count) {
            if let Some(text) = event?.payload.as_text() {
                out.push(text.to_owned());
            }
        }
        Ok(out)
    }

    /// The manifest describing a generated stream.
    pub fn manifest(&self, population_size: usize, population_seed: u64) -> Option<DatasetManifest> {
        match self {
            StreamSource::Fintech { config, rules, seed, count, .. } => Some(DatasetManifest::new(
                *seed,
                *count,
                DatasetSpec::Fintech {
                    population: population_size,
                    population_seed,
                    config: config.clone(),
                    rules: rules.clone(),
                },
            )),
            StreamSource::Text { config, seed, count } => {
                Some(DatasetManifest::new(*seed, *count, DatasetSpec::Text { config: config.clone() }))
            }
            _ => None,
        }
    }
}

/// The stream, expert pool, oracle and planted rules of a run.
pub struct Prepared {
    pub source: StreamSource,
    pub pool: Arc<ExpertPool>,
    pub oracle: Option<Oracle>,
    pub rules: Vec<PlantedRule>,
}

pub fn prepare_source(config: &ExperimentConfig) -> Result<(StreamSource, Vec<PlantedRule>), ExperimentError> {
    Ok(match &config.input {
        InputSpec::Fintech => {
            let population =
                generate_population(config.population, &config.fintech, derive_seed(config.seed, POPULATION_STREAM))?;
            let source = StreamSource::Fintech {
                population,
                config: config.fintech.clone(),
                rules: config.rules.clone(),
                seed: derive_seed(config.seed, TRANSACTION_STREAM),
                count: config.events.unwrap_or(DEFAULT_FINTECH_EVENTS),
            };
            (source, config.rules.clone())
        }
        InputSpec::Text => {
            let source = StreamSource::Text {
                config: config.corpus.clone(),
                seed: derive_seed(config.seed, CORPUS_STREAM),
                count: config.events.unwrap_or(DEFAULT_TEXT_EVENTS),
            };
            (source, Vec::new())
        }
        InputSpec::File(path) => {
            if io::sniff_ndjson(path)? {
                let rules = match io::read_manifest(path) {
                    Ok(DatasetManifest { dataset: DatasetSpec::Fintech { rules, .. }, .. }) => rules,
                    _ => config.rules.clone(),
                };
                (StreamSource::TransactionFile { path: path.clone(), limit: config.events }, rules)
            } else {
                (StreamSource::TextFile { path: path.clone(), limit: config.events }, Vec::new())
            }
        }
    })
}

pub fn generate_pool(
    config: &ExperimentConfig,
    source: &StreamSource,
    rules: &[PlantedRule],
) -> Result<ExpertPool, ExperimentError> {
    let seed = derive_seed(config.seed, EXPERT_STREAM);
    let kind = match &config.experts {
        ExpertsSpec::File(path) => return Ok(PoolDocument::load(path)?.pool),
        ExpertsSpec::Auto if source.is_text() => ExpertsSpec::Projection,
        ExpertsSpec::Auto => ExpertsSpec::Trees,
        other => other.clone(),
    };
    match kind {
        ExpertsSpec::Trees => {
            let planted: Vec<TreeExpert> = rules.iter().map(|rule| TreeExpert::planted(ExpertId(0), rule)).collect();
            let experts = sample_tree_experts(config.m, &planted, &config.trees, seed)?;
            Ok(ExpertPool::Trees { experts })
        }
        ExpertsSpec::Projection => {
            if !source.is_text() {
                return Err(ExperimentError::Config("projection experts need a text input".into()));
            }
            let sample = source.text_prefix(config.vocabulary_sample)?;
            let vocabulary = build_vocabulary(sample.iter(), config.vocabulary)?;
            Ok(ExpertPool::Projection(ProjectionPool::sample(vocabulary, config.m, &config.projection, seed)?))
        }
        ExpertsSpec::File(_) | ExpertsSpec::Auto => unreachable!("resolved above"),
    }
}

pub fn resolve_oracle(config: &ExperimentConfig, source: &StreamSource) -> Option<Oracle> {
    let spec = config.oracle.clone().unwrap_or(if source.is_text() {
        OracleSpec::Keyword(vec!["hate".into(), "kill".into()])
    } else {
        OracleSpec::Truth
    });
    match spec {
        OracleSpec::Keyword(keywords) => Some(Oracle::Keyword { keywords }),
        OracleSpec::Truth => Some(Oracle::Truth),
        OracleSpec::Human => None,
    }
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    let (source, rules) = prepare_source(config)?;
    let pool = Arc::new(generate_pool(config, &source, &rules)?);
    let oracle = resolve_oracle(config, &source);
    Ok(Prepared { source, pool, oracle, rules })
}

/// A finished run.
pub struct Outcome {
    pub report: RunReport,
    pub runner: Runner,
}

/// Runs `prepared` to the end of its stream with the oracle judging every
/// alert, optionally resuming from a snapshot.
pub fn run_prepared(
    config: &ExperimentConfig,
    prepared: &Prepared,
    resume: Option<StateDocument>,
    mut decisions: Option<&mut DecisionWriter>,
) -> Result<Outcome, ExperimentError> {
    let oracle = prepared.oracle.clone();
    if oracle.is_none() {
        return Err(ExperimentError::Config("the human oracle needs --serve".into()));
    }
    let mut runner = match resume {
        Some(doc) => Runner::restore(doc, prepared.pool.clone(), oracle, prepared.rules.clone())?,
        None => Runner::new(config.engine_config(), prepared.pool.clone(), oracle, prepared.rules.clone())?,
    };
    let already = runner.metrics().counts.events;
    let mut events = prepared.source.events()?;
    let mut busy = Duration::ZERO;
    let mut seen = 0u64;
    for event in events.by_ref() {
        let event = event?;
        seen += 1;
        if seen <= already {
            continue;
        }
        let started = Instant::now();
        let decision = runner.step(&event)?;
        busy += started.elapsed();
        if let Some(writer) = decisions.as_deref_mut() {
            writer.write(&decision).map_err(|e| ExperimentError::Output(e.to_string()))?;
        }
        if config.snapshot_at == Some(runner.metrics().counts.events) {
            if let Some(path) = &config.snapshot {
                runner.snapshot().save(path)?;
            }
        }
    }
    let mut report = runner.report(busy);
    report.input_skipped = events.skipped();
    Ok(Outcome { report, runner })
}

/// Scores random single-word detectors over a text stream against a
/// keyword oracle and summarizes the best one at comparable precision.
pub fn score_baselines(
    config: &ExperimentConfig,
    prepared: &Prepared,
    precision: Option<f64>,
) -> Result<Option<(BaselineSummary, Vec<halfado_core::eval::WordScore>)>, ExperimentError> {
    let (Some(Oracle::Keyword { keywords }), ExpertPool::Projection(pool)) = (&prepared.oracle, prepared.pool.as_ref())
    else {
        return Ok(None);
    };
    if config.baseline_words == 0 {
        return Ok(None);
    }
    let corpus = prepared.source.text_prefix(usize::MAX)?;
    let exclude: Vec<&str> = keywords.iter().map(String::as_str).collect();
    let words = sample_candidate_words(
        &pool.vocabulary,
        config.baseline_words,
        &exclude,
        derive_seed(config.seed, BASELINE_STREAM),
    );
    let oracle = KeywordOracle::new(keywords);
    let scores = score_single_word_baselines(&corpus, &oracle, &words)?;
    let floor = precision.unwrap_or(0.0) - config.precision_band;
    let best = scores
        .iter()
        .filter(|s| s.precision.is_some_and(|p| p >= floor))
        .max_by(|a, b| a.recall.total_cmp(&b.recall).then_with(|| b.word.cmp(&a.word)));
    let summary = BaselineSummary {
        candidates: words.len(),
        precision_band: config.precision_band,
        best_word: best.map(|s| s.word.clone()),
        best_recall: best.map_or(0.0, |s| s.recall),
        best_precision: best.and_then(|s| s.precision),
    };
    Ok(Some((summary, scores)))
}

/// Prepares, runs and writes every requested output.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let prepared = prepare(config)?;
    let resume = match &config.restore {
        Some(path) => Some(StateDocument::load(path)?),
        None => None,
    };
    let mut writer = match &config.decisions {
        Some(path) => Some(DecisionWriter::create(path).map_err(|e| ExperimentError::Output(e.to_string()))?),
        None => None,
    };
    let Outcome { mut report, runner } = run_prepared(config, &prepared, resume, writer.as_mut())?;
    if let Some(writer) = writer {
        writer.finish().map_err(|e| ExperimentError::Output(e.to_string()))?;
    }
    let scores = score_baselines(config, &prepared, report.precision)?;
    if let Some((summary, _)) = &scores {
        report.baselines = Some(summary.clone());
    }
    if let (Some(path), None) = (&config.snapshot, config.snapshot_at) {
        runner.snapshot().save(path)?;
    }
    if let Some(path) = &config.plot {
        let words = scores.as_ref().map(|(_, s)| s.as_slice()).unwrap_or_default();
        write_plot_data(path, &report, words).map_err(|e| ExperimentError::Output(e.to_string()))?;
    }
    if let Some(path) = &config.report {
        std::fs::write(path, report.to_json_pretty() + "\n").map_err(|e| ExperimentError::Output(e.to_string()))?;
    }
    Ok(report)
}

/// Min–max ranges over a multi-seed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seeds: Vec<u64>,
    pub inspection_fraction: (f64, f64),
    pub final_active_size: (usize, usize),
    pub mistakes: (u64, u64),
    pub precision: Option<(f64, f64)>,
    pub recall: Option<(f64, f64)>,
    pub throughput_events_per_second: (f64, f64),
    pub reports: Vec<RunReport>,
}

fn range<T: PartialOrd + Copy>(values: impl IntoIterator<Item = T>) -> Option<(T, T)> {
    values.into_iter().fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((if v < lo { v } else { lo }, if v > hi { v } else { hi })),
    })
}

impl SeedSummary {
    pub fn new(reports: Vec<RunReport>) -> Self {
        let all = |f: fn(&RunReport) -> Option<f64>| -> Option<(f64, f64)> {
            let values: Option<Vec<f64>> = reports.iter().map(f).collect();
            values.and_then(range)
        };
        SeedSummary {
            seeds: reports.iter().map(|r| r.seed).collect(),
            inspection_fraction: range(reports.iter().map(|r| r.inspection_fraction)).unwrap_or_default(),
            final_active_size: range(reports.iter().map(|r| r.final_active_size)).unwrap_or_default(),
            mistakes: range(reports.iter().map(|r| r.mistakes)).unwrap_or_default(),
            precision: all(|r| r.precision),
            recall: all(|r| r.recall),
            throughput_events_per_second: range(reports.iter().map(|r| r.throughput_events_per_second))
                .unwrap_or_default(),
            reports,
        }
    }
}

/// Runs `config` once per seed; outputs other than the reports are skipped.
pub fn run_seeds(config: &ExperimentConfig, seeds: &[u64]) -> Result<SeedSummary, ExperimentError> {
    let mut reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let config = ExperimentConfig {
            report: None,
            decisions: None,
            plot: None,
            snapshot: None,
            restore: None,
            ..config.with_seed(seed)
        };
        reports.push(run_experiment(&config)?);
    }
    Ok(SeedSummary::new(reports))
}

/// Writes a generated stream and its manifest.
pub fn generate_dataset(config: &ExperimentConfig, out: &Path) -> Result<(u64, PathBuf), ExperimentError> {
    let (source, _) = prepare_source(config)?;
    let manifest = source
        .manifest(config.population, derive_seed(config.seed, POPULATION_STREAM))
        .ok_or_else(|| ExperimentError::Config("only generated inputs can be written as datasets".into()))?;
    let count = match &source {
        StreamSource::Fintech { .. } => {
            let txs = source.events()?.filter_map(|e| e.ok()).filter_map(|e| match e.payload {
                halfado_core::Payload::Transaction(tx) => Some(tx),
                halfado_core::Payload::Text(_) => None,
            });
            io::write_transactions(out, txs)?
        }
        _ => {
            let messages = source.text_prefix(usize::MAX)?;
            io::write_text_lines(out, messages.iter().map(String::as_str))?
        }
    };
    let manifest_path = io::write_manifest(out, &manifest)?;
    Ok((count, manifest_path))
}

/// Writes the generated expert pool as a pool document.
pub fn generate_experts(config: &ExperimentConfig, out: &Path) -> Result<usize, ExperimentError> {
    let (source, rules) = prepare_source(config)?;
    let pool = generate_pool(config, &source, &rules)?;
    let provenance = serde_json::json!({
        "seed": config.seed,
        "input": config.input.to_string(),
        "experts": config.experts.to_string(),
        "m": config.m,
    });
    let size = pool.len();
    PoolDocument::new(pool, Some(provenance)).save(out)?;
    Ok(size)
}

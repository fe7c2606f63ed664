//! CSV outputs: the per-event decision log and precision/recall plot data.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use halfado_core::eval::WordScore;
use serde::Serialize;

use crate::runner::{Decision, RunReport};

/// Appends one CSV row per event.
pub struct DecisionWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl DecisionWriter {
    pub fn create(path: &Path) -> csv::Result<Self> {
        Ok(DecisionWriter { inner: csv::Writer::from_writer(BufWriter::new(File::create(path)?)) })
    }

    pub fn write(&mut self, decision: &Decision) -> csv::Result<()> {
        self.inner.serialize(decision)
    }

    pub fn finish(mut self) -> csv::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct PlotRow<'a> {
    detector: &'a str,
    kind: &'a str,
    alerts: u64,
    precision: Option<f64>,
    recall: Option<f64>,
}

/// One row for the run and one per single-word baseline.
pub fn write_plot_data(path: &Path, report: &RunReport, baselines: &[WordScore]) -> csv::Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.serialize(PlotRow {
        detector: "halfado",
        kind: report.mode.name(),
        alerts: report.alerts,
        precision: report.precision,
        recall: report.recall,
    })?;
    for score in baselines {
        out.serialize(PlotRow {
            detector: &score.word,
            kind: "single_word",
            alerts: score.alerts,
            precision: score.precision,
            recall: Some(score.recall),
        })?;
    }
    out.flush()?;
    Ok(())
}

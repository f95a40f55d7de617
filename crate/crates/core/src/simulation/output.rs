use std::io::Write;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{ConditionalReport, EstimateSummary, MseTable};
use crate::error::{Error, Result};

/// One value of one statistic in long format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRow {
    pub table: &'static str,
    pub scheme: &'static str,
    pub n: usize,
    pub block_size: usize,
    pub bandwidth: Option<f64>,
    pub z: Option<f64>,
    pub statistic: &'static str,
    pub value: f64,
}

fn summary_stats(s: &EstimateSummary) -> [(&'static str, f64); 9] {
    [
        ("replications", s.replications as f64),
        ("mean", s.mean),
        ("bias", s.bias),
        ("variance", s.variance),
        ("variance_ci_low", s.variance_ci_low),
        ("variance_ci_high", s.variance_ci_high),
        ("mse", s.mse),
        ("mse_ci_low", s.mse_ci_low),
        ("mse_ci_high", s.mse_ci_high),
    ]
}

impl MseTable {
    pub fn long_rows(&self) -> Vec<LongRow> {
        let mut out = Vec::new();
        for r in &self.rows {
            for (statistic, value) in summary_stats(&r.summary) {
                out.push(LongRow {
                    table: "mse",
                    scheme: r.scheme.name(),
                    n: r.n,
                    block_size: r.block_size,
                    bandwidth: None,
                    z: None,
                    statistic,
                    value,
                });
            }
        }
        for r in &self.ratios {
            for (statistic, value) in [("ratio", r.ratio), ("ratio_ci_low", r.ci_low), ("ratio_ci_high", r.ci_high)] {
                out.push(LongRow {
                    table: "mse_ratio",
                    scheme: r.scheme.name(),
                    n: r.n,
                    block_size: r.block_size,
                    bandwidth: None,
                    z: None,
                    statistic,
                    value,
                });
            }
        }
        out
    }
}

impl ConditionalReport {
    pub fn long_rows(&self) -> Vec<LongRow> {
        let mut out = Vec::new();
        for r in &self.points {
            for (statistic, value) in summary_stats(&r.summary) {
                out.push(LongRow {
                    table: "conditional",
                    scheme: r.scheme.name(),
                    n: r.n,
                    block_size: r.block_size,
                    bandwidth: Some(r.bandwidth),
                    z: Some(r.z),
                    statistic,
                    value,
                });
            }
        }
        for r in &self.mise {
            for (statistic, value) in [
                ("mise", r.mise),
                ("mise_ci_low", r.ci_low),
                ("mise_ci_high", r.ci_high),
                ("replications", r.replications as f64),
            ] {
                out.push(LongRow {
                    table: "mise",
                    scheme: r.scheme.name(),
                    n: r.n,
                    block_size: r.block_size,
                    bandwidth: Some(r.bandwidth),
                    z: None,
                    statistic,
                    value,
                });
            }
        }
        for r in &self.coverage {
            for (statistic, value) in [("valid", r.valid as f64), ("excluded", r.excluded as f64)] {
                out.push(LongRow {
                    table: "coverage",
                    scheme: "all",
                    n: r.n,
                    block_size: r.block_size,
                    bandwidth: Some(r.bandwidth),
                    z: Some(r.z),
                    statistic,
                    value,
                });
            }
        }
        out
    }
}

/// Writes long-format rows as CSV with a header line.
pub fn write_long_csv<W: Write>(rows: &[LongRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Result tables of one run.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ExperimentTables {
    Mse(MseTable),
    Conditional(ConditionalReport),
}

impl ExperimentTables {
    pub fn long_rows(&self) -> Vec<LongRow> {
        match self {
            ExperimentTables::Mse(t) => t.long_rows(),
            ExperimentTables::Conditional(r) => r.long_rows(),
        }
    }
}

/// Configuration and tables of one run, serialized as the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary<'a> {
    pub config: &'a ExperimentConfig,
    pub results: &'a ExperimentTables,
}

pub fn summary_json(config: &ExperimentConfig, results: &ExperimentTables) -> Result<String> {
    serde_json::to_string_pretty(&ExperimentSummary { config, results }).map_err(|e| Error::Io(e.to_string()))
}

/// Runs the experiment that matches the model: MSE tables for block
/// models, conditional point and MISE tables for the conditional model.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentTables> {
    if config.model.is_conditional() {
        super::mise_experiment(config).map(ExperimentTables::Conditional)
    } else {
        super::mse_experiment(config).map(ExperimentTables::Mse)
    }
}

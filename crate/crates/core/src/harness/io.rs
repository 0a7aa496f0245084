//! On-disk formats for run outputs.
//!
//! Metrics are comma-separated with the header
//! `variant,env,seed,unit,env_steps,eval_return`, one row per (seed, unit),
//! rows ordered by seed then unit. Returns use the shortest representation
//! that round-trips, so identical runs give identical files.
//!
//! The summary is a JSON object holding the run identity, the resolved
//! ISAC parameters, the [`SummaryStats`] fields and per-seed diagnostics.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::run::EvalRecord;
use super::stats::SummaryStats;
use crate::agent::{SdpStats, Variant};
use crate::envs::EnvKind;
use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 6] =
    ["variant", "env", "seed", "unit", "env_steps", "eval_return"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// Variant name or a custom run label.
    pub variant: String,
    pub env: EnvKind,
    pub seed: u64,
    pub unit: u64,
    pub env_steps: u64,
    pub eval_return: f64,
}

impl MetricsRow {
    pub fn record(&self) -> EvalRecord {
        EvalRecord {
            seed: self.seed,
            unit: self.unit,
            env_steps: self.env_steps,
            eval_return: self.eval_return,
        }
    }
}

pub fn write_metrics<W: Write>(
    out: W,
    label: &str,
    env: EnvKind,
    records: &[EvalRecord],
) -> Result<()> {
    let mut sorted: Vec<&EvalRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.seed, r.unit));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for r in sorted {
        w.serialize(MetricsRow {
            variant: label.to_string(),
            env,
            seed: r.seed,
            unit: r.unit,
            env_steps: r.env_steps,
            eval_return: r.eval_return,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(METRICS_HEADER) {
        return Err(Error::Format(format!(
            "unexpected metrics header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("metrics file: {e}"))
}

/// Per-seed diagnostics that are not learning-curve statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedDiagnostics {
    pub seed: u64,
    pub env_steps: u64,
    pub episodes: u64,
    pub fault: Option<String>,
    pub sdp: SdpStats,
    pub sdp_fraction: f64,
    pub flushes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub label: String,
    pub variant: Variant,
    pub env: EnvKind,
    pub total_steps: u64,
    pub unit_steps: u64,
    pub zeta_th: f64,
    pub xi: usize,
    /// Prioritized selections over all SDP selections, pooled across seeds.
    pub sdp_fraction: f64,
    pub stats: SummaryStats,
    pub seeds: Vec<SeedDiagnostics>,
}

pub fn write_summary<W: Write>(out: W, summary: &SummaryDocument) -> Result<()> {
    serde_json::to_writer_pretty(out, summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_round_trip_and_order() {
        let records = vec![
            EvalRecord {
                seed: 1,
                unit: 1,
                env_steps: 1000,
                eval_return: 0.1 + 0.2,
            },
            EvalRecord {
                seed: 0,
                unit: 2,
                env_steps: 2000,
                eval_return: -3.5,
            },
            EvalRecord {
                seed: 0,
                unit: 1,
                env_steps: 1000,
                eval_return: 1e-300,
            },
        ];
        let mut buf = Vec::new();
        write_metrics(&mut buf, "isac", EnvKind::Pendulum, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("variant,env,seed,unit,env_steps,eval_return")
        );
        assert_eq!(lines.next(), Some("isac,pendulum,0,1,1000,1e-300"));
        assert_eq!(lines.next(), Some("isac,pendulum,0,2,2000,-3.5"));
        let rows = read_metrics(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].eval_return, 0.1 + 0.2);
        assert_eq!(rows[2].env, EnvKind::Pendulum);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_metrics("a,b\n1,2\n".as_bytes()).is_err());
    }
}

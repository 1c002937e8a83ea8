//! CSV schemas. Headers are fixed by the field order of each row type.

use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// One simulated (instance, policy) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub instance_id: String,
    pub policy: String,
    pub mean_cost: f64,
    pub cost_ci: f64,
    pub service_pct: f64,
    pub sl_ci: f64,
    pub periods: usize,
    pub seed: u64,
}

/// A CSV row type. The header is written even for an empty table.
pub trait Table: Serialize {
    const HEADER: &'static [&'static str];
    /// Trailing column present only when rows carry it.
    const OPTIONAL: Option<&'static str> = None;

    fn has_optional(&self) -> bool {
        false
    }
}

impl Table for AggregateRow {
    const HEADER: &'static [&'static str] = &[
        "instance_id",
        "policy",
        "mean_cost",
        "cost_ci",
        "service_pct",
        "sl_ci",
        "periods",
        "seed",
    ];
}

/// Aggregate row with the cost advantage over the quantile policy on the
/// same instance, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub policy: String,
    pub mean_cost: f64,
    pub cost_ci: f64,
    pub service_pct: f64,
    pub sl_ci: f64,
    pub periods: usize,
    pub seed: u64,
    pub delta_cost: Option<f64>,
}

impl Table for ReportRow {
    const HEADER: &'static [&'static str] = &[
        "instance_id",
        "policy",
        "mean_cost",
        "cost_ci",
        "service_pct",
        "sl_ci",
        "periods",
        "seed",
        "delta_cost",
    ];
}

/// Trace of one period. `solver_ms` is written only on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub period: usize,
    #[serde(rename = "Z")]
    pub z: u8,
    pub cost_setup: f64,
    pub cost_hold: f64,
    pub cost_sub: f64,
    pub n_setups: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_ms: Option<f64>,
}

impl Table for TraceRow {
    const HEADER: &'static [&'static str] = &["period", "Z", "cost_setup", "cost_hold", "cost_sub", "n_setups"];
    const OPTIONAL: Option<&'static str> = Some("solver_ms");

    fn has_optional(&self) -> bool {
        self.solver_ms.is_some()
    }
}

/// One solve of the bench experiment. `time_s` is written only on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub omega: usize,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub method: String,
    pub status: String,
    pub optimal: bool,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub cuts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_s: Option<f64>,
}

impl Table for BenchRow {
    const HEADER: &'static [&'static str] = &[
        "instance_id",
        "omega",
        "alpha",
        "T",
        "method",
        "status",
        "optimal",
        "objective",
        "bound",
        "gap",
        "nodes",
        "cuts",
    ];
    const OPTIONAL: Option<&'static str> = Some("time_s");

    fn has_optional(&self) -> bool {
        self.time_s.is_some()
    }
}

/// Instance written by `gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub instance_id: String,
    pub file: String,
    #[serde(rename = "K")]
    pub products: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub eta: f64,
    pub tau: f64,
    pub rho: f64,
    pub tbo: f64,
    pub alpha: f64,
    pub substitution: String,
    pub omega: usize,
    pub seed: u64,
}

impl Table for ManifestRow {
    const HEADER: &'static [&'static str] = &[
        "instance_id",
        "file",
        "K",
        "T",
        "eta",
        "tau",
        "rho",
        "tbo",
        "alpha",
        "substitution",
        "omega",
        "seed",
    ];
}

pub fn write_csv<T: Table>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let mut header = T::HEADER.to_vec();
    if let Some(extra) = T::OPTIONAL.filter(|_| rows.first().is_some_and(T::has_optional)) {
        header.push(extra);
    }
    w.write_record(&header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

/// Reads an aggregate CSV, checking its header.
pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    if header.iter().ne(AggregateRow::HEADER.iter().copied()) {
        anyhow::bail!(
            "{}: header {:?} is not {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>(),
            AggregateRow::HEADER
        );
    }
    r.deserialize()
        .collect::<Result<Vec<AggregateRow>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

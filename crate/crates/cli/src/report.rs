//! `report`: merges aggregate CSVs and adds the cost advantage over the
//! quantile policy.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use lotsizing::sim::delta_cost;

use crate::table::{read_aggregate, write_csv, AggregateRow, ReportRow};

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Aggregate CSVs written by `simulate`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "report.csv")]
    pub out: PathBuf,
}

/// Rows in input order. `delta_cost` compares each non-quantile row with
/// the quantile row of the same instance, seed and length.
pub fn merge(rows: Vec<AggregateRow>) -> Result<Vec<ReportRow>> {
    let reference = |r: &AggregateRow| {
        rows.iter().find(|q| {
            q.policy == "quantile" && q.instance_id == r.instance_id && q.seed == r.seed && q.periods == r.periods
        })
    };
    let mut out = Vec::with_capacity(rows.len());
    for r in &rows {
        let delta = match reference(r) {
            Some(q) if r.policy != "quantile" => Some(delta_cost(q.mean_cost, r.mean_cost)?),
            _ => None,
        };
        out.push(ReportRow {
            instance_id: r.instance_id.clone(),
            policy: r.policy.clone(),
            mean_cost: r.mean_cost,
            cost_ci: r.cost_ci,
            service_pct: r.service_pct,
            sl_ci: r.sl_ci,
            periods: r.periods,
            seed: r.seed,
            delta_cost: delta,
        });
    }
    Ok(out)
}

pub fn run(args: &ReportArgs) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for path in &args.inputs {
        rows.extend(read_aggregate(path)?);
    }
    let merged = merge(rows)?;
    write_csv(&args.out, &merged)?;
    Ok(merged)
}

//! `simulate`: rolling-horizon runs per (instance, policy) cell.

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use lotsizing::policy::{PolicyKind, PolicyRule};
use lotsizing::sim::{roll, SimConfig, SimulationReport};
use log::info;
use rayon::prelude::*;

use crate::grid::{Grid, GridArgs, InstanceDoc};
use crate::table::{write_csv, AggregateRow, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Average,
    Quantile,
    Cc,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Warm-up periods discarded before the batches.
    #[arg(long, default_value_t = 10)]
    pub warm: usize,
    #[arg(long, default_value_t = 160)]
    pub batches: usize,
    #[arg(long, default_value_t = 25)]
    pub batch_len: usize,
    /// Seed of the simulated demand and scenario streams.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Branch-and-bound node budget per period; the best plan found is used.
    #[arg(long)]
    pub node_limit: Option<usize>,
    /// Solver time limit per period, in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Instance files written by `gen`; replaces the parameter grid.
    #[arg(long, num_args = 1..)]
    pub instances: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "average,quantile,cc")]
    pub policies: Vec<PolicyArg>,
    /// Skip the stock-out determination step.
    #[arg(long)]
    pub no_stockout_step: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Aggregate CSV.
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    /// Write a per-period trace CSV for every cell into this directory.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
    /// Add solver wall-clock columns (makes output machine dependent).
    #[arg(long)]
    pub timings: bool,
}

impl SimArgs {
    pub fn config(&self, policy: PolicyKind) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(policy, self.seed).with_batches(self.warm, self.batches, self.batch_len);
        cfg.budget.node_limit = self.node_limit;
        cfg.budget.time_limit =
            Duration::try_from_secs_f64(self.time_limit).context("time limit must be a nonnegative number")?;
        cfg.check()?;
        Ok(cfg)
    }
}

pub fn policy_kind(p: PolicyArg, scenario_count: usize, skip_stockout_step: bool) -> PolicyKind {
    let rule = match p {
        PolicyArg::Average => PolicyRule::Average,
        PolicyArg::Quantile => PolicyRule::Quantile,
        PolicyArg::Cc => PolicyRule::ChanceConstrained { scenario_count },
    };
    PolicyKind {
        rule,
        skip_stockout_step,
    }
}

/// Name of a policy in the aggregate CSV.
pub fn policy_label(kind: &PolicyKind) -> String {
    if kind.skip_stockout_step {
        format!("{}-nostep", kind.rule.name())
    } else {
        kind.rule.name().to_string()
    }
}

pub fn trace_rows(report: &SimulationReport, timings: bool) -> Vec<TraceRow> {
    report
        .records
        .iter()
        .map(|r| TraceRow {
            period: r.period,
            z: u8::from(r.stockout),
            cost_setup: r.cost.setup,
            cost_hold: r.cost.holding,
            cost_sub: r.cost.substitution,
            n_setups: r.n_setups,
            solver_ms: timings.then(|| r.stats.elapsed.as_secs_f64() * 1e3),
        })
        .collect()
}

pub fn run(args: &SimulateArgs) -> Result<Vec<AggregateRow>> {
    let docs = if args.instances.is_empty() {
        Grid::from_args(&args.grid)?
            .configs()?
            .into_iter()
            .map(InstanceDoc::generate)
            .collect::<Result<Vec<_>>>()?
    } else {
        args.instances.iter().map(|p| InstanceDoc::read(p)).collect::<Result<Vec<_>>>()?
    };
    let mut cells = Vec::new();
    for doc in &docs {
        for &p in &args.policies {
            let kind = policy_kind(p, doc.config.scenario_count, args.no_stockout_step);
            cells.push((doc, kind, args.sim.config(kind)?));
        }
    }
    if let Some(dir) = &args.trace_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()?;
    let rows = pool.install(|| {
        cells
            .par_iter()
            .map(|(doc, kind, cfg)| -> Result<AggregateRow> {
                let label = policy_label(kind);
                let report = roll(&doc.instance, cfg).with_context(|| format!("{} / {label}", doc.id))?;
                info!(
                    "{} / {label}: cost {:.3} ± {:.3}, service {:.2}% ± {:.2}, {} fallbacks, {} budget stops",
                    doc.id,
                    report.mean_cost,
                    report.cost_ci,
                    report.service_pct,
                    report.sl_ci,
                    report.fallbacks,
                    report.budget_stops
                );
                if let Some(dir) = &args.trace_dir {
                    let path = dir.join(format!("{}__{label}.csv", doc.id));
                    write_csv(&path, &trace_rows(&report, args.timings))?;
                }
                Ok(AggregateRow {
                    instance_id: doc.id.clone(),
                    policy: label,
                    mean_cost: report.mean_cost,
                    cost_ci: report.cost_ci,
                    service_pct: report.service_pct,
                    sl_ci: report.sl_ci,
                    periods: cfg.t_sim - cfg.t_warm,
                    seed: cfg.seed,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    write_csv(&args.out, &rows)?;
    Ok(rows)
}

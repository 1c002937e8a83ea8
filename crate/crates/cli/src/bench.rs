//! `bench`: extensive form against branch-and-cut on a warmed-up state.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use lotsizing::cuts::ChanceCutSeparator;
use lotsizing::milp::{solve_milp, MilpOptions, MilpResult, MilpStatus};
use lotsizing::models::{build_cc_extensive, build_cc_master};
use lotsizing::policy::{cc_tail, make_scenarios, stockout_step, PolicyKind, PolicyRule};
use lotsizing::rng;
use lotsizing::sim::{warm_state, SimConfig};
use log::info;

use crate::grid::{Grid, GridArgs, InstanceDoc};
use crate::table::{write_csv, BenchRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Extensive form with big-M indicator rows.
    Extensive,
    /// Master problem with mixing cuts from the callback.
    Bc,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Extensive => "extensive",
            Method::Bc => "bc",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_delimiter = ',', default_value = "extensive,bc")]
    pub methods: Vec<Method>,
    /// Periods simulated with the quantile policy to reach the benchmark state.
    #[arg(long, default_value_t = 10)]
    pub warm: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Time limit per solve, in seconds.
    #[arg(long, default_value_t = 7200.0)]
    pub time_limit: f64,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
    /// Add the wall-clock column (makes output machine dependent).
    #[arg(long)]
    pub timings: bool,
}

fn status_name(s: MilpStatus) -> &'static str {
    match s {
        MilpStatus::Optimal => "optimal",
        MilpStatus::Infeasible => "infeasible",
        MilpStatus::TimeLimit => "time_limit",
        MilpStatus::NodeLimit => "node_limit",
    }
}

pub fn run(args: &BenchArgs) -> Result<Vec<BenchRow>> {
    let configs = Grid::from_args(&args.grid)?.configs()?;
    let limit = Duration::try_from_secs_f64(args.time_limit).context("time limit must be a nonnegative number")?;
    let opts = MilpOptions {
        time_limit: Some(limit),
        ..MilpOptions::default()
    };
    let mut rows = Vec::new();
    for config in configs {
        let doc = InstanceDoc::generate(config)?;
        let inst = &doc.instance;
        let warm = SimConfig::new(PolicyKind::new(PolicyRule::Quantile), args.seed).with_batches(args.warm, 1, 1);
        let (state, d_hat1) = warm_state(inst, &warm).with_context(|| format!("warming up {}", doc.id))?;
        let mut scen_rng = rng::stream(args.seed, &[rng::SCENARIOS, args.warm as u64]);
        let scen = make_scenarios(&inst.demand, &state.d_last, doc.config.scenario_count, &mut scen_rng);
        let k_hat = stockout_step(inst, &state, &d_hat1)?.k_hat;
        let tail = cc_tail(inst, &state);
        for &method in &args.methods {
            let started = Instant::now();
            let res: MilpResult = match method {
                Method::Extensive => {
                    let built = build_cc_extensive(inst, &state, &d_hat1, &scen, &tail, &k_hat);
                    solve_milp(&built.milp, None, &opts)?
                }
                Method::Bc => {
                    let built = build_cc_master(inst, &state, &d_hat1, &scen, &tail, &k_hat);
                    let mut sep = ChanceCutSeparator::new(inst, &scen, &built.vars);
                    solve_milp(&built.milp, Some(&mut sep), &opts)?
                }
            };
            let elapsed = started.elapsed().as_secs_f64();
            info!(
                "{} / {}: {} objective {} gap {} in {elapsed:.2}s",
                doc.id,
                method.name(),
                status_name(res.status),
                res.objective,
                res.gap
            );
            rows.push(BenchRow {
                instance_id: doc.id.clone(),
                omega: doc.config.scenario_count,
                alpha: doc.config.alpha,
                horizon: doc.config.horizon,
                method: method.name().to_string(),
                status: status_name(res.status).to_string(),
                optimal: res.status == MilpStatus::Optimal,
                objective: res.objective,
                bound: res.bound,
                gap: res.gap,
                nodes: res.nodes,
                cuts: res.cuts_added,
                time_s: args.timings.then_some(elapsed),
            });
        }
    }
    write_csv(&args.out, &rows)?;
    Ok(rows)
}
